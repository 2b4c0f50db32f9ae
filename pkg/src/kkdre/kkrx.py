"""Receiver DSP: DC-bias recovery for the AC-coupled photocurrent,
phase retrieval from intensity (valid for minimum-phase fields),
carrier removal, matched filtering, synchronization and supervised
adaptive equalization.

Phase retrieval convention: the reconstruction returns the solution
whose spectral content sits above the carrier. With the transmit tone
at the upper band edge the physical field is the lower-sideband mirror,
so the carrier-stripping stage conjugates its output once (``mirror``)
to hand the equalizer an unmirrored symbol stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import lms_fse
from .errors import (
    AllCandidatesFailed,
    ConstantInput,
    Diverged,
    ExcessiveClipping,
    KkdreError,
    NoCorrelationPeak,
    NonPositiveMean,
    RateTooLow,
)
from .sigproc import RrcSpec, Waveform, hilbert, resample, rrc_spectrum


@dataclass(frozen=True)
class KkConfig:
    """Phase-retrieval settings.

    upsample_factor bounds the spectral broadening of the sqrt/log steps;
    clip_floor (relative to the mean photocurrent) clamps stray
    non-positive samples, and clip_fraction_limit is the hard error
    threshold on the clamped fraction.
    """

    upsample_factor: int = 2
    clip_floor: float = 1e-6
    clip_fraction_limit: float = 0.01

    def __post_init__(self):
        if self.upsample_factor < 1:
            raise RateTooLow("upsample_factor must be >= 1")
        if self.clip_floor <= 0:
            raise NonPositiveMean("clip_floor must be positive")


@dataclass(frozen=True)
class BiasSearch:
    """Relative bias grid applied to the minimal feasible DC estimate."""

    grid: tuple = tuple(np.linspace(0.5, 2.0, 21).round(12))
    metric_block_symbols: int = 4096

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.size == 0 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ConstantInput("bias grid must be non-empty, positive, strictly increasing")


@dataclass(frozen=True)
class EqualizerConfig:
    """Fractionally spaced supervised LMS equalizer settings."""

    num_taps: int = 51
    mu: float = 1e-3
    samples_per_symbol: int = 2
    training_passes: int = 2

    def __post_init__(self):
        if self.num_taps % 2 == 0:
            raise RateTooLow("num_taps must be odd")
        if self.mu < 0:
            raise RateTooLow("mu must be >= 0")
        if self.samples_per_symbol != 2:
            raise RateTooLow("only 2 samples per symbol supported")


def estimate_bias_candidates(i_ac: Waveform, search: BiasSearch) -> np.ndarray:
    """Candidate DC biases for an AC-coupled photocurrent.

    The base estimate is the smallest bias making the photocurrent
    non-negative, -min(i_ac); the grid scales it.
    """
    x = i_ac.samples
    if np.ptp(x) == 0:
        raise ConstantInput("photocurrent is constant")
    rms = float(np.sqrt(np.mean(x**2)))
    # resampling after the AC coupling moves the mean by O(q / n)
    if abs(float(np.mean(x))) > 1e-3 * rms:
        raise ConstantInput("input is not zero-mean; AC coupling expected")
    base = -float(np.min(x))
    return np.asarray(search.grid, dtype=float) * base


def kk_reconstruct(i_biased: Waveform, kk: KkConfig) -> tuple[Waveform, float]:
    """Field reconstruction from biased photocurrent.

    Upsample, clamp at clip_floor * mean, then amplitude = sqrt(I) and
    phase = hilbert(0.5 ln I). Returns the field and the clipped-sample
    fraction; exceeding clip_fraction_limit raises (bad bias, or carrier
    too weak for the minimum-phase condition).
    """
    mean_i = float(np.mean(i_biased.samples))
    if mean_i <= 0:
        raise NonPositiveMean(f"mean photocurrent {mean_i} <= 0")
    up = i_biased
    if kk.upsample_factor > 1:
        up = resample(i_biased, i_biased.sample_rate_hz * kk.upsample_factor)
    floor = kk.clip_floor * float(np.mean(up.samples))
    clipped = float(np.mean(up.samples < floor))
    if clipped > kk.clip_fraction_limit:
        raise ExcessiveClipping(f"clipped fraction {clipped:.3%} > {kk.clip_fraction_limit:.1%}")
    intensity = np.maximum(up.samples, floor)
    log_i = np.log(intensity)
    phase = hilbert(0.5 * log_i)
    fld = np.sqrt(intensity) * np.exp(1j * phase)
    return Waveform(fld, up.sample_rate_hz), clipped


def downconvert_and_strip_carrier(
    fld: Waveform, tone_offset_hz: float, mirror: bool = True
) -> Waveform:
    """Shift by the tone offset, remove the DC carrier term, resolve mirror.

    Multiplies by exp(-j 2 pi f t) and subtracts the complex mean of the
    shifted stream (the downconverted carrier). ``mirror`` conjugates the
    result, which undoes the upper-sideband convention of
    :func:`kk_reconstruct` for a tone at the upper band edge.
    """
    z = fld.samples * np.exp(-2j * np.pi * tone_offset_hz * fld.time_s)
    z = z - np.mean(z)
    if mirror:
        z = np.conj(z)
    return Waveform(z, fld.sample_rate_hz)


def matched_filter_downsample(w: Waveform, rrc: RrcSpec, baud_hz: float) -> Waveform:
    """Matched RRC filtering, output at exactly 2 samples per symbol.

    Resamples to 2 sps first and applies the exact spectral RRC shape
    there; with brick-wall FFT resampling the two orders are equivalent.
    The response is scaled to unit mean-square gain (noise-transparent).
    """
    if w.sample_rate_hz < 2 * baud_hz:
        raise RateTooLow(f"rate {w.sample_rate_hz} below 2 x baud {baud_hz}")
    out = resample(w, 2 * baud_hz)
    n = out.samples.size
    shape = rrc_spectrum(n, out.sample_rate_hz, baud_hz, rrc.rolloff) * np.sqrt(2.0)
    return Waveform(np.fft.ifft(np.fft.fft(out.samples) * shape), out.sample_rate_hz)


def synchronize(
    rx2: np.ndarray, tx_symbols: np.ndarray
) -> tuple[int, float, np.ndarray]:
    """Circular correlation sync of a 2 sps stream against known symbols.

    Returns (delay in samples, global phase, aligned stream). The noise
    floor is the largest off-peak correlation magnitude (peak vicinity of
    +/- 8 samples excluded); a peak below 3x that floor is rejected.
    """
    rx2 = np.asarray(rx2, dtype=complex)
    tx_symbols = np.asarray(tx_symbols, dtype=complex)
    if min(rx2.size // 2, tx_symbols.size) < 1024:
        raise NoCorrelationPeak("need at least 1024 overlapping symbols")
    n = max(rx2.size, 2 * tx_symbols.size)
    ref = np.zeros(n, dtype=complex)
    ref[: 2 * tx_symbols.size : 2] = tx_symbols
    r = np.zeros(n, dtype=complex)
    r[: rx2.size] = rx2
    xc = np.fft.ifft(np.fft.fft(r) * np.conj(np.fft.fft(ref)))
    mag = np.abs(xc)
    delay = int(np.argmax(mag))
    peak = mag[delay]
    guard = np.ones(n, dtype=bool)
    idx = (delay + np.arange(-8, 9)) % n
    guard[idx] = False
    floor = float(np.max(mag[guard])) if guard.any() else 0.0
    if peak < 3.0 * floor:
        raise NoCorrelationPeak(f"peak {peak:.3g} below 3 x floor {floor:.3g}")
    phase = float(np.angle(xc[delay]))
    aligned = np.roll(rx2, -delay) * np.exp(-1j * phase)
    return delay, phase, aligned


@dataclass(frozen=True)
class EqualizeResult:
    symbols: np.ndarray
    taps: np.ndarray
    train_mse: np.ndarray


def lms_equalize(rx2: np.ndarray, tx_symbols: np.ndarray, eq: EqualizerConfig) -> EqualizeResult:
    """Train the fractionally spaced LMS, then run a frozen decision pass.

    The input is normalized to unit RMS so the step size is scale-free;
    the complex taps absorb the gain.
    """
    rx2 = np.asarray(rx2, dtype=complex)
    rms = float(np.sqrt(np.mean(np.abs(rx2) ** 2)))
    if rms == 0:
        raise Diverged("equalizer input is all zero")
    y, taps, mse = lms_fse(rx2 / rms, tx_symbols, eq.num_taps, eq.mu, eq.training_passes)
    p_ref = float(np.mean(np.abs(tx_symbols) ** 2))
    if float(np.mean(np.abs(y) ** 2)) > 100.0 * p_ref:
        raise Diverged("equalizer output power exploded")
    return EqualizeResult(symbols=y, taps=taps, train_mse=mse)


@dataclass(frozen=True)
class RxContext:
    """Everything the receiver chain needs besides the photocurrent."""

    tone_offset_hz: float  # exact transmitted tone frequency
    rrc: RrcSpec
    baud_hz: float
    tx_symbols: np.ndarray
    kk: KkConfig = field(default_factory=KkConfig)
    eq: EqualizerConfig = field(default_factory=EqualizerConfig)
    guard_symbols: int = 512


@dataclass(frozen=True)
class RxResult:
    symbols: np.ndarray  # aligned with tx_symbols[: len(symbols)]
    clipped_fraction: float
    delay: int
    phase: float
    train_mse: np.ndarray


def receive(i_ac: Waveform, bias: float, ctx: RxContext) -> RxResult:
    """Full receiver chain for a given DC bias."""
    i_biased = Waveform(i_ac.samples + bias, i_ac.sample_rate_hz)
    fld, clipped = kk_reconstruct(i_biased, ctx.kk)
    base = downconvert_and_strip_carrier(fld, ctx.tone_offset_hz)
    rx2 = matched_filter_downsample(base, ctx.rrc, ctx.baud_hz)
    n_sym = rx2.samples.size // 2
    tx_ref = ctx.tx_symbols[:n_sym]
    delay, phase, aligned = synchronize(rx2.samples, tx_ref)
    eq_out = lms_equalize(aligned, tx_ref, ctx.eq)
    return RxResult(
        symbols=eq_out.symbols,
        clipped_fraction=clipped,
        delay=delay,
        phase=phase,
        train_mse=eq_out.train_mse,
    )


def _block_snr_db(rx: RxResult, tx_symbols: np.ndarray, guard: int) -> float:
    """Post-equalization SNR on the guarded interior (bias search metric)."""
    y = rx.symbols
    n = y.size
    g = min(guard, n // 8)
    sl = slice(g, n - g)
    from .metrics import snr_evm  # local import avoids a cycle at module load

    snr, _ = snr_evm(y[sl], tx_symbols[: y.size][sl])
    return snr


def optimize_dc_bias(
    i_ac: Waveform, ctx: RxContext, search: BiasSearch
) -> tuple[float, float, list]:
    """Pick the bias maximizing post-equalization SNR on a metric block.

    Each candidate runs the receiver on a prefix block of the
    photocurrent (length rounded to keep downstream resampling integral);
    failures (excessive clipping on under-biased candidates) are recorded
    and skipped. Lowest candidate index wins ties.

    Returns (best bias, its block SNR, per-candidate (bias, snr|None)).
    """
    candidates = estimate_bias_candidates(i_ac, search)
    n_need = int(np.ceil(search.metric_block_symbols * i_ac.sample_rate_hz / ctx.baud_hz))
    n_blk = min(((n_need + 15) // 16) * 16, i_ac.samples.size)
    n_blk -= n_blk % 16
    block = Waveform(i_ac.samples[:n_blk], i_ac.sample_rate_hz)

    best_bias, best_snr = None, -np.inf
    trace = []
    for b in candidates:
        try:
            rx = receive(block, float(b), ctx)
            snr = _block_snr_db(rx, ctx.tx_symbols, ctx.guard_symbols)
        except KkdreError:
            trace.append((float(b), None))
            continue
        trace.append((float(b), snr))
        if snr > best_snr:
            best_bias, best_snr = float(b), snr
    if best_bias is None:
        raise AllCandidatesFailed("no bias candidate produced a usable chain")
    return best_bias, best_snr, trace
