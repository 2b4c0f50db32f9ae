"""End-to-end chain assembly, sweep orchestration and result emission.

All randomness derives from the config seed with a fixed split: the bit
source uses ``seed``, the noise loader ``seed + 1``. Sweep points get
``seed + 1000 * point_index + repeat`` so runs are reproducible across
any worker count.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, replace

import numpy as np

from . import channel as ch
from . import dre as dq
from . import kkrx, metrics, txdsp
from .config import LinkConfig, with_overrides
from .errors import ConfigError, IoFailure, KkdreError, PipelineError
from .sigproc import RrcSpec, Spectrum, Waveform, snap_to_grid

CSV_COLUMNS = (
    "run_id",
    "dac_bits",
    "dre_enabled",
    "cspr_target_db",
    "cspr_measured_db",
    "osnr_db",
    "fiber_km",
    "snr_db",
    "gmi_bits",
    "ngmi",
    "ber",
    "clipped_fraction",
    "chosen_bias",
    "seed",
)


@dataclass(frozen=True)
class ResultRow:
    run_id: str
    dac_bits: int | None
    dre_enabled: bool
    cspr_target_db: float
    cspr_measured_db: float
    osnr_db: float | None
    fiber_km: float
    snr_db: float
    gmi_bits: float
    ngmi: float
    ber: float
    clipped_fraction: float
    chosen_bias: float
    seed: int


@dataclass(frozen=True)
class SweepSpec:
    variable: str  # "cspr_db" or "osnr_db"
    values: tuple
    base: LinkConfig
    repeats_per_point: int = 1

    def __post_init__(self):
        if self.variable not in ("cspr_db", "osnr_db"):
            raise ConfigError(f"unknown sweep variable {self.variable!r}")
        v = np.asarray(self.values, dtype=float)
        if v.size == 0 or np.any(np.diff(v) <= 0):
            raise ConfigError("sweep values must be non-empty and strictly increasing")
        if self.repeats_per_point < 1:
            raise ConfigError("repeats_per_point must be >= 1")


def _run_id(cfg: LinkConfig) -> str:
    bits = "off" if cfg.dac_bits is None else str(cfg.dac_bits)
    osnr = "off" if cfg.osnr.target_db is None else f"{cfg.osnr.target_db:g}"
    return (
        f"b{bits}-dre{'on' if cfg.dre_enabled else 'off'}"
        f"-cspr{cfg.tone.cspr_db:g}-osnr{osnr}-L{cfg.fiber.length_km:g}-s{cfg.seed}"
    )


def run_single(cfg: LinkConfig) -> ResultRow:
    """Execute one fully specified link and measure it.

    Chain: transmit DSP, DAC quantization (plain or shaped, or bypassed),
    optical filter, noise loading, dispersion, photodiode, ADC, bias
    optimization, phase retrieval, carrier strip, matched filter, sync,
    LMS, metrics. Deterministic given the config.
    """
    cfg.validate()
    stage = "txdsp"
    try:
        cmap = txdsp.make_constellation(cfg.bits_per_symbol)
        rrc = RrcSpec(
            rolloff=cfg.rrc.rolloff,
            samples_per_symbol=cfg.sps_dac,
            span_symbols=cfg.rrc.span_symbols,
        )
        frame = txdsp.build_frame(
            seed=cfg.seed,
            n_symbols=cfg.n_symbols,
            cmap=cmap,
            rrc=rrc,
            baud_hz=cfg.baud_hz,
            tone=cfg.tone,
        )
        tone_exact = snap_to_grid(
            cfg.tone.offset_hz, frame.waveform.samples.size, cfg.dac_rate_hz
        )

        stage = "quantizer"
        if cfg.dac_bits is None:
            w_tx = frame.waveform
        else:
            qspec = dq.QuantizerSpec(bits=cfg.dac_bits)
            shaping = dq.design_shaping_filter(
                cfg.shaping_edge_hz(), cfg.dac_rate_hz, cfg.shaping.n_taps
            )
            w_tx = dq.quantize_waveform(
                frame.waveform, qspec, shaping, cfg.dre, shaped=cfg.dre_enabled
            )
        cspr_measured = ch.measure_cspr(w_tx, cfg.tone.offset_hz)

        stage = "channel"
        w = ch.optical_bpf(w_tx, cfg.bpf_bandwidth_hz)
        w = ch.load_osnr(w, cfg.osnr, seed=cfg.seed + 1)
        w = ch.apply_cd(w, cfg.fiber)
        i_pd, _dc = ch.photodiode(w, ch.PdSpec())
        i_ac = ch.adc(i_pd, cfg.adc_rate_hz, cfg.adc_bits)

        stage = "receiver"
        ctx = kkrx.RxContext(
            tone_offset_hz=tone_exact,
            rrc=rrc,
            baud_hz=cfg.baud_hz,
            tx_symbols=frame.symbols,
            kk=cfg.kk,
            eq=cfg.eq,
            guard_symbols=cfg.guard_symbols,
        )
        bias, _blk_snr, _trace = kkrx.optimize_dc_bias(i_ac, ctx, cfg.bias)
        rx = kkrx.receive(i_ac, bias, ctx)

        stage = "metrics"
        g = cfg.guard_symbols
        n_rx = rx.symbols.size
        m = cfg.bits_per_symbol
        y = rx.symbols[g : n_rx - g]
        bits_sel = frame.bits[m * g : m * (n_rx - g)]
        report = metrics.compute_report(y, bits_sel, cmap)
    except KkdreError as exc:
        raise PipelineError(stage, exc) from exc

    return ResultRow(
        run_id=_run_id(cfg),
        dac_bits=cfg.dac_bits,
        dre_enabled=cfg.dre_enabled,
        cspr_target_db=cfg.tone.cspr_db,
        cspr_measured_db=cspr_measured,
        osnr_db=cfg.osnr.target_db,
        fiber_km=cfg.fiber.length_km,
        snr_db=report.snr_db,
        gmi_bits=report.gmi_bits,
        ngmi=report.ngmi,
        ber=report.ber,
        clipped_fraction=rx.clipped_fraction,
        chosen_bias=bias,
        seed=cfg.seed,
    )


def _run_or_record(cfg: LinkConfig) -> ResultRow:
    """Worker entry: pipeline failures become a row, not a crash."""
    try:
        return run_single(cfg)
    except PipelineError as exc:
        nan = float("nan")
        return ResultRow(
            run_id=_run_id(cfg) + f"!error:{exc.stage}",
            dac_bits=cfg.dac_bits,
            dre_enabled=cfg.dre_enabled,
            cspr_target_db=cfg.tone.cspr_db,
            cspr_measured_db=nan,
            osnr_db=cfg.osnr.target_db,
            fiber_km=cfg.fiber.length_km,
            snr_db=nan,
            gmi_bits=nan,
            ngmi=nan,
            ber=nan,
            clipped_fraction=nan,
            chosen_bias=nan,
            seed=cfg.seed,
        )


def run_many(cfgs: list[LinkConfig], workers: int = 1) -> list[ResultRow]:
    """Run independent configs, output order = input order."""
    if workers <= 1:
        return [_run_or_record(c) for c in cfgs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_or_record, cfgs, chunksize=1))


def _point_config(spec: SweepSpec, index: int, value: float, repeat: int) -> LinkConfig:
    cfg = spec.base
    if spec.variable == "cspr_db":
        cfg = replace(cfg, tone=replace(cfg.tone, cspr_db=float(value)))
    else:
        cfg = replace(cfg, osnr=replace(cfg.osnr, target_db=float(value)))
    return with_overrides(cfg, seed=spec.base.seed + 1000 * index + repeat)


def sweep(spec: SweepSpec, workers: int = 1) -> list[ResultRow]:
    """One run per value (times repeats), rows in sweep order."""
    cfgs = [
        _point_config(spec, i, v, r)
        for i, v in enumerate(spec.values)
        for r in range(spec.repeats_per_point)
    ]
    return run_many(cfgs, workers)


@dataclass(frozen=True)
class GridEntry:
    dac_bits: int | None
    dre_enabled: bool
    best_ngmi: float
    optimal_cspr_db: float


def grid_bits_dre(
    base: LinkConfig,
    bits_list: list[int | None],
    cspr_values: list[float],
    repeats_per_point: int = 1,
    workers: int = 1,
) -> tuple[list[ResultRow], list[GridEntry]]:
    """CSPR sweep for every (bits, DRE) pair; best row per pair.

    best_ngmi is the maximum over CSPR of the repeat-averaged NGMI, ties
    broken toward the lower CSPR.
    """
    if not bits_list or not cspr_values:
        raise ConfigError("bits_list and cspr_values must be non-empty")
    pairs = [(b, d) for b in bits_list for d in (False, True)]
    cfgs = []
    for b, d in pairs:
        pair_base = with_overrides(base, dac_bits=b, dre_enabled=d)
        pair_spec = SweepSpec(
            variable="cspr_db",
            values=tuple(cspr_values),
            base=pair_base,
            repeats_per_point=repeats_per_point,
        )
        cfgs.extend(
            _point_config(pair_spec, i, v, r)
            for i, v in enumerate(cspr_values)
            for r in range(repeats_per_point)
        )
    rows = run_many(cfgs, workers)

    table = []
    per_pair = len(cspr_values) * repeats_per_point
    for k, (b, d) in enumerate(pairs):
        chunk = rows[k * per_pair : (k + 1) * per_pair]
        best_ngmi, best_cspr = -np.inf, math.nan
        for i, v in enumerate(cspr_values):
            pts = chunk[i * repeats_per_point : (i + 1) * repeats_per_point]
            mean_ngmi = float(np.mean([r.ngmi for r in pts]))
            if math.isnan(mean_ngmi):
                continue
            if mean_ngmi > best_ngmi:  # strict: ties keep the lower CSPR
                best_ngmi, best_cspr = mean_ngmi, float(v)
        table.append(
            GridEntry(dac_bits=b, dre_enabled=d, best_ngmi=best_ngmi, optimal_cspr_db=best_cspr)
        )
    return rows, table


@dataclass(frozen=True)
class QuantNoisePoint:
    cspr_db: float
    snr_plain_db: float
    snr_shaped_db: float
    spectrum_plain: Spectrum
    spectrum_shaped: Spectrum


def analyze_quantization(
    base: LinkConfig, cspr_values: list[float], segment_len: int = 4096
) -> list[QuantNoisePoint]:
    """Quantization-noise spectra and in-band transmit SNR vs CSPR.

    For each CSPR the same frame is quantized with and without shaping;
    only quantization error counts as noise.
    """
    if base.dac_bits is None:
        raise ConfigError("analyze_quantization needs finite dac_bits")
    base.validate()
    cmap = txdsp.make_constellation(base.bits_per_symbol)
    rrc = RrcSpec(
        rolloff=base.rrc.rolloff,
        samples_per_symbol=base.sps_dac,
        span_symbols=base.rrc.span_symbols,
    )
    qspec = dq.QuantizerSpec(bits=base.dac_bits)
    shaping = dq.design_shaping_filter(
        base.shaping_edge_hz(), base.dac_rate_hz, base.shaping.n_taps
    )
    band = base.baud_hz * (1.0 + base.rrc.rolloff) / 2.0
    out = []
    for v in cspr_values:
        tone = replace(base.tone, cspr_db=float(v))
        frame = txdsp.build_frame(
            seed=base.seed,
            n_symbols=base.n_symbols,
            cmap=cmap,
            rrc=rrc,
            baud_hz=base.baud_hz,
            tone=tone,
        )
        w = frame.waveform
        q_plain = dq.quantize_waveform(w, qspec)
        q_shaped = dq.quantize_waveform(w, qspec, shaping, base.dre, shaped=True)
        out.append(
            QuantNoisePoint(
                cspr_db=float(v),
                snr_plain_db=dq.tx_snr_inband(w, q_plain, (-band, band)),
                snr_shaped_db=dq.tx_snr_inband(w, q_shaped, (-band, band)),
                spectrum_plain=dq.quantization_noise_spectrum(w, q_plain, segment_len),
                spectrum_shaped=dq.quantization_noise_spectrum(w, q_shaped, segment_len),
            )
        )
    return out


# -- emission -----------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "off"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.12g}"


def emit_csv(rows: list[ResultRow], path: str) -> None:
    """Write rows in the fixed column order, '.' decimal, newline-terminated."""
    if not rows:
        raise IoFailure("no rows to write")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(getattr(row, c)) for c in CSV_COLUMNS) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _parse(col: str, text: str):
    if col == "run_id":
        return text
    if col == "seed":
        return int(text)
    if col in ("dac_bits", "osnr_db"):
        if text == "off":
            return None
        return int(text) if col == "dac_bits" else float(text)
    if col == "dre_enabled":
        return text == "true"
    return float(text)


def parse_csv(path: str) -> list[ResultRow]:
    """Inverse of emit_csv (12-significant-digit round trip)."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise IoFailure(f"{path} lacks the expected header")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        rows.append(ResultRow(**{c: _parse(c, t) for c, t in zip(CSV_COLUMNS, parts)}))
    return rows


def emit_svg(
    series: list[tuple[str, np.ndarray, np.ndarray]],
    path: str,
    xlabel: str,
    ylabel: str,
    fec_ngmi: float | None = None,
) -> None:
    """Line chart as SVG; NGMI plots carry the FEC threshold line."""
    if not series:
        raise IoFailure("no series to plot")
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, x, y in series:
        ax.plot(x, y, marker="o", label=label)
    if fec_ngmi is not None:
        ax.axhline(fec_ngmi, color="k", linestyle="--", linewidth=1, label=f"FEC {fec_ngmi:g}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    try:
        fig.savefig(path, format="svg", bbox_inches="tight")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
