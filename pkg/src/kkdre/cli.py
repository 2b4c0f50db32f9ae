"""Command-line front end.

Subcommands: run, sweep-cspr, sweep-osnr, grid, analyze-quantnoise.
Exit codes: 0 success, 2 config error, 3 pipeline error (failing stage
named on stderr).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import experiments as xp
from .config import LinkConfig, load_config, with_overrides
from .errors import ConfigError, IoFailure, PipelineError


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file (defaults when omitted)")
    p.add_argument("--out", default=None, help="output CSV path")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    p.add_argument("--svg", default=None, metavar="DIR", help="also write SVG charts here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kkdre", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single fully specified run")
    _add_common(p)

    p = sub.add_parser("sweep-cspr", help="NGMI vs carrier-to-signal power ratio")
    _add_common(p)
    p.add_argument("--from", dest="lo", type=float, default=4.0)
    p.add_argument("--to", dest="hi", type=float, default=14.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("sweep-osnr", help="NGMI vs loaded OSNR")
    _add_common(p)
    p.add_argument("--values", required=True, help="comma-separated OSNR values in dB")
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("grid", help="bits x DRE table of best NGMI and optimal CSPR")
    _add_common(p)
    p.add_argument("--bits", required=True, help="comma-separated DAC bit depths, 'off' allowed")
    p.add_argument("--dre", choices=("on", "off", "both"), default="both")
    p.add_argument("--from", dest="lo", type=float, default=4.0)
    p.add_argument("--to", dest="hi", type=float, default=14.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("analyze-quantnoise", help="quantization-noise spectra and TX SNR vs CSPR")
    _add_common(p)
    p.add_argument("--from", dest="lo", type=float, default=0.0)
    p.add_argument("--to", dest="hi", type=float, default=14.0)
    p.add_argument("--step", type=float, default=2.0)
    return ap


def _load(args) -> LinkConfig:
    cfg = load_config(args.config) if args.config else LinkConfig()
    cfg.validate()
    if args.seed is not None:
        cfg = with_overrides(cfg, seed=args.seed)
    return cfg


def _span(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0 or hi < lo:
        raise ConfigError("need step > 0 and to >= from")
    n = int(round((hi - lo) / step))
    return [lo + k * step for k in range(n + 1)]


def _emit(rows, args, default_name: str) -> str:
    out = args.out or default_name
    xp.emit_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return out


def _ngmi_series(rows, x_attr: str):
    xs = np.array([getattr(r, x_attr) for r in rows])
    ys = np.array([r.ngmi for r in rows])
    return xs, ys


def _svg_path(args, name: str) -> str:
    os.makedirs(args.svg, exist_ok=True)
    return os.path.join(args.svg, name)


def _cmd_run(args) -> None:
    cfg = _load(args)
    row = xp.run_single(cfg)
    _emit([row], args, "run.csv")
    print(f"ngmi={row.ngmi:.4f} snr={row.snr_db:.2f} dB cspr={row.cspr_measured_db:.2f} dB")


def _cmd_sweep_cspr(args) -> None:
    cfg = _load(args)
    values = _span(args.lo, args.hi, args.step)
    spec = xp.SweepSpec(
        variable="cspr_db", values=tuple(values), base=cfg, repeats_per_point=args.repeats
    )
    rows = xp.sweep(spec, workers=args.workers)
    _emit(rows, args, "sweep_cspr.csv")
    if args.svg:
        xp.emit_svg(
            [("ngmi", *_ngmi_series(rows, "cspr_target_db"))],
            _svg_path(args, "sweep_cspr.svg"),
            xlabel="CSPR target (dB)",
            ylabel="NGMI",
            fec_ngmi=0.92,
        )


def _cmd_sweep_osnr(args) -> None:
    cfg = _load(args)
    try:
        values = sorted(float(v) for v in args.values.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --values: {exc}") from exc
    spec = xp.SweepSpec(
        variable="osnr_db", values=tuple(values), base=cfg, repeats_per_point=args.repeats
    )
    rows = xp.sweep(spec, workers=args.workers)
    _emit(rows, args, "sweep_osnr.csv")
    if args.svg:
        xp.emit_svg(
            [("ngmi", *_ngmi_series(rows, "osnr_db"))],
            _svg_path(args, "sweep_osnr.svg"),
            xlabel="OSNR (dB)",
            ylabel="NGMI",
            fec_ngmi=0.92,
        )


def _parse_bits(text: str) -> list[int | None]:
    out: list[int | None] = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        out.append(None if tok == "off" else int(tok))
    return out


def _cmd_grid(args) -> None:
    cfg = _load(args)
    bits_list = _parse_bits(args.bits)
    values = _span(args.lo, args.hi, args.step)
    rows, table = xp.grid_bits_dre(
        cfg, bits_list, values, repeats_per_point=args.repeats, workers=args.workers
    )
    if args.dre != "both":
        keep = args.dre == "on"
        rows = [r for r in rows if r.dre_enabled == keep]
        table = [t for t in table if t.dre_enabled == keep]
    out = _emit(rows, args, "grid.csv")
    print("bits  dre  best_ngmi  optimal_cspr_db")
    for t in table:
        bits = "off" if t.dac_bits is None else t.dac_bits
        print(f"{bits!s:>4}  {'on' if t.dre_enabled else 'off':>3}"
              f"  {t.best_ngmi:9.4f}  {t.optimal_cspr_db:g}")
    if args.svg:
        series = []
        for t in table:
            sel = [
                r for r in rows
                if r.dac_bits == t.dac_bits and r.dre_enabled == t.dre_enabled
            ]
            bits = "off" if t.dac_bits is None else t.dac_bits
            label = f"{bits} bits, dre {'on' if t.dre_enabled else 'off'}"
            series.append((label, *_ngmi_series(sel, "cspr_target_db")))
        xp.emit_svg(
            series,
            _svg_path(args, "grid.svg"),
            xlabel="CSPR target (dB)",
            ylabel="NGMI",
            fec_ngmi=0.92,
        )
    del out


def _cmd_analyze(args) -> None:
    cfg = _load(args)
    values = _span(args.lo, args.hi, args.step)
    points = xp.analyze_quantization(cfg, values)
    out = args.out or "tx_snr.csv"
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("cspr_db,tx_snr_plain_db,tx_snr_shaped_db\n")
            for p in points:
                fh.write(f"{p.cspr_db:.12g},{p.snr_plain_db:.12g},{p.snr_shaped_db:.12g}\n")
        spec_out = os.path.splitext(out)[0] + "_spectra.csv"
        with open(spec_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("cspr_db,freq_hz,psd_plain_db_hz,psd_shaped_db_hz\n")
            for p in points:
                for f, a, b in zip(
                    p.spectrum_plain.freq_hz, p.spectrum_plain.psd_db_hz,
                    p.spectrum_shaped.psd_db_hz,
                ):
                    fh.write(f"{p.cspr_db:.12g},{f:.12g},{a:.12g},{b:.12g}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write analysis CSVs: {exc}") from exc
    print(f"wrote {out} and {spec_out}")
    if args.svg:
        xs = np.array([p.cspr_db for p in points])
        xp.emit_svg(
            [
                ("no shaping", xs, np.array([p.snr_plain_db for p in points])),
                ("shaped", xs, np.array([p.snr_shaped_db for p in points])),
            ],
            _svg_path(args, "tx_snr.svg"),
            xlabel="CSPR target (dB)",
            ylabel="in-band TX SNR (dB)",
        )


_COMMANDS = {
    "run": _cmd_run,
    "sweep-cspr": _cmd_sweep_cspr,
    "sweep-osnr": _cmd_sweep_osnr,
    "grid": _cmd_grid,
    "analyze-quantnoise": _cmd_analyze,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PipelineError, IoFailure) as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
