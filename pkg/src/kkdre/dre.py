"""DAC model and quantization-noise shaping.

The shaper picks quantization levels per rail so that the quantization
error, after passing through a short FIR that models the band occupied
by the signal and carrier, has minimum energy. A beam search (the
M-algorithm) explores the n_soft nearest levels per sample; plain
rounding is always evaluated as a fallback, so the shaped sequence never
costs more than rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from ._kernels import beam_quantize
from .errors import ConfigInvariantViolated, EvenTaps, InvalidEdge, LengthMismatch
from .sigproc import Spectrum, Waveform, band_power, psd


@dataclass(frozen=True)
class QuantizerSpec:
    """Mid-rise uniform quantizer with rails spanning [-1, +1]."""

    bits: int
    full_scale: float = 1.0

    def __post_init__(self):
        if not 1 <= self.bits <= 16:
            raise ConfigInvariantViolated(f"bits = {self.bits} outside [1, 16]")
        if self.full_scale <= 0:
            raise ConfigInvariantViolated("full_scale must be positive")

    @property
    def step(self) -> float:
        return 2.0 * self.full_scale / 2**self.bits

    @property
    def levels(self) -> np.ndarray:
        k = np.arange(2**self.bits)
        return -self.full_scale + self.step / 2 + k * self.step


@dataclass(frozen=True)
class ShapingFilter:
    """Short real FIR modeling the band the link actually uses."""

    taps: np.ndarray
    passband_edge_hz: float

    def __post_init__(self):
        object.__setattr__(self, "taps", np.asarray(self.taps, dtype=float))
        if self.taps.size < 1:
            raise InvalidEdge("filter needs at least one tap")


@dataclass(frozen=True)
class DreConfig:
    """Search parameters: candidate levels per sample and beam width."""

    n_soft: int = 3
    beam_width: int = 16

    def __post_init__(self):
        if self.n_soft < 1 or self.beam_width < 1:
            raise ConfigInvariantViolated("n_soft and beam_width must be >= 1")


def design_shaping_filter(
    passband_edge_hz: float, sample_rate_hz: float, n_taps: int
) -> ShapingFilter:
    """Least-squares linear-phase lowpass, normalized to unit peak response.

    Target response is 1 up to the passband edge and 0 beyond it; with a
    handful of taps this is a soft rolloff, which is the point (it only
    has to weight in-band error more than out-of-band error).
    """
    if not 0 < passband_edge_hz < sample_rate_hz / 2:
        raise InvalidEdge(f"edge {passband_edge_hz} outside (0, {sample_rate_hz / 2})")
    if n_taps % 2 == 0:
        raise EvenTaps(f"n_taps = {n_taps} must be odd")
    if n_taps == 1:
        return ShapingFilter(taps=np.array([1.0]), passband_edge_hz=passband_edge_hz)

    half = n_taps // 2
    grid = np.linspace(0.0, sample_rate_hz / 2, 2048)
    target = (grid <= passband_edge_hz).astype(float)
    basis = np.ones((grid.size, half + 1))
    for k in range(1, half + 1):
        basis[:, k] = 2.0 * np.cos(2.0 * np.pi * grid * k / sample_rate_hz)
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    taps = np.concatenate([coef[half:0:-1], coef[:1], coef[1 : half + 1]])
    peak = np.max(np.abs(basis @ coef))
    return ShapingFilter(taps=taps / peak, passband_edge_hz=passband_edge_hz)


def quantize_uniform(x: np.ndarray, q: QuantizerSpec) -> np.ndarray:
    """Round each sample to the nearest level; out-of-range inputs clamp."""
    x = np.asarray(x, dtype=float)
    idx = np.floor((x + q.full_scale) / q.step)
    idx = np.clip(idx, 0, 2**q.bits - 1)
    return -q.full_scale + q.step / 2 + idx * q.step


def filtered_error_energy(e: np.ndarray, taps: np.ndarray) -> float:
    """Shaping cost: energy of the causally filtered error, zero initial state."""
    y = scipy.signal.lfilter(np.asarray(taps, dtype=float), [1.0], np.asarray(e, dtype=float))
    return float(np.sum(y * y))


def dre_quantize(
    x: np.ndarray, q: QuantizerSpec, h: ShapingFilter, cfg: DreConfig
) -> np.ndarray:
    """Shaped quantization of one rail.

    Beam search over the n_soft nearest levels per sample, minimizing the
    filtered-error energy; the plain-rounding sequence is returned instead
    if it beats the best survivor, so the result never costs more than
    quantize_uniform's.
    """
    if cfg.n_soft > 2**q.bits:
        raise ConfigInvariantViolated(f"n_soft {cfg.n_soft} exceeds level count {2**q.bits}")
    x = np.asarray(x, dtype=float)
    q_beam, _ = beam_quantize(x, q.levels, h.taps, cfg.n_soft, cfg.beam_width)
    q_plain = quantize_uniform(x, q)
    if filtered_error_energy(q_plain - x, h.taps) < filtered_error_energy(q_beam - x, h.taps):
        return q_plain
    return q_beam


def quantize_waveform(
    w: Waveform,
    q: QuantizerSpec,
    h: ShapingFilter | None = None,
    cfg: DreConfig | None = None,
    shaped: bool = False,
) -> Waveform:
    """Quantize I and Q rails independently (two physical DACs)."""
    if shaped:
        if h is None or cfg is None:
            raise ConfigInvariantViolated("shaped quantization needs a filter and a config")
        i_rail = dre_quantize(w.samples.real, q, h, cfg)
        q_rail = dre_quantize(w.samples.imag, q, h, cfg)
    else:
        i_rail = quantize_uniform(w.samples.real, q)
        q_rail = quantize_uniform(w.samples.imag, q)
    return Waveform(i_rail + 1j * q_rail, w.sample_rate_hz)


def quantization_noise_spectrum(
    original: Waveform, quantized: Waveform, segment_len: int = 4096
) -> Spectrum:
    """PSD of the complex quantization error (both rails combined)."""
    if original.samples.size != quantized.samples.size:
        raise LengthMismatch("waveform lengths differ")
    if original.sample_rate_hz != quantized.sample_rate_hz:
        raise LengthMismatch("sample rates differ")
    err = quantized.samples - original.samples
    seg = min(segment_len, 2 ** int(np.log2(err.size)))
    return psd(Waveform(err, original.sample_rate_hz), seg)


def tx_snr_inband(
    original: Waveform, quantized: Waveform, signal_band_hz: tuple[float, float]
) -> float:
    """In-band SNR of the quantized waveform against quantization error only.

    The carrier line (the dominant spectral bin) is projected out of the
    reference so the ratio is signal power over error power within the
    band. Returns a 200 dB sentinel for zero error.
    """
    if original.samples.size != quantized.samples.size:
        raise LengthMismatch("waveform lengths differ")
    f_lo, f_hi = signal_band_hz
    nyq = original.sample_rate_hz / 2
    if not (-nyq <= f_lo < f_hi <= nyq):
        raise InvalidEdge(f"band {signal_band_hz} outside Nyquist range")

    n = original.samples.size
    spec = np.fft.fft(original.samples) / n
    k = int(np.argmax(np.abs(spec)))
    freqs = np.fft.fftfreq(n, d=1.0 / original.sample_rate_hz)
    line = spec[k] * np.exp(2j * np.pi * freqs[k] * original.time_s)
    sig = Waveform(original.samples - line, original.sample_rate_hz)

    err = Waveform(quantized.samples - original.samples, original.sample_rate_hz)
    p_sig = band_power(sig, f_lo, f_hi)
    p_err = band_power(err, f_lo, f_hi)
    if p_err <= p_sig * 1e-20:
        return 200.0
    return float(10.0 * np.log10(p_sig / p_err))


# -- nested-width beam construction (property-test machinery) ----------------


def beam_costs_nested(
    x: np.ndarray,
    q: QuantizerSpec,
    h: ShapingFilter,
    n_soft: int,
    widths: list[int],
) -> dict[int, float]:
    """Beam search at several widths with nested survivor sets.

    The survivor set at each width contains the survivor set of the next
    smaller width by construction, so the returned best costs are
    non-increasing in width. Exponential bookkeeping, test sizes only.
    """
    widths = sorted(widths)
    levels = q.levels
    taps = h.taps
    x = np.asarray(x, dtype=float)
    mem = taps.size - 1

    def expand(paths: dict, i: int) -> dict:
        d = np.abs(levels - x[i])
        cand = np.lexsort((levels, d))[:n_soft]
        out = {}
        for path, (cost, hist) in paths.items():
            base = float(np.dot(taps[1:], hist)) if mem else 0.0
            for ci in cand:
                e = levels[ci] - x[i]
                y = taps[0] * e + base
                new_hist = (e, *hist[: mem - 1]) if mem else ()
                out[path + (int(ci),)] = (cost + y * y, new_hist)
        return out

    survivor_sets = {w: {(): (0.0, (0.0,) * mem)} for w in widths}
    for i in range(x.size):
        expanded = {w: expand(survivor_sets[w], i) for w in widths}
        kept_smaller: dict = {}
        for w in widths:
            pool = expanded[w]
            chosen = {p: pool[p] for p in kept_smaller if p in pool}
            rest = sorted(
                (item for item in pool.items() if item[0] not in chosen),
                key=lambda item: (item[1][0], item[0]),
            )
            for p, v in rest[: w - len(chosen)]:
                chosen[p] = v
            survivor_sets[w] = chosen
            kept_smaller = chosen
    return {w: min(v[0] for v in survivor_sets[w].values()) for w in widths}
