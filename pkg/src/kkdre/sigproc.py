"""Sampled-waveform primitives shared by the whole chain.

All spectral operations are circular (the frame is treated as one period
of a periodic signal), which keeps resampling, filtering and the phase
retrieval mutually consistent. Edge effects from the few non-circular
steps are discarded downstream by the metrics guard.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.signal

from .errors import EmptyWaveform, InvalidRolloff, NonPositiveRate, TooShort


@dataclass(frozen=True)
class Waveform:
    """Uniformly sampled time series with an explicit sample rate.

    ``samples`` may be real or complex; operations that need a specific
    kind convert or check explicitly. Treated as immutable.
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise NonPositiveRate(f"sample_rate_hz = {self.sample_rate_hz}")
        object.__setattr__(self, "samples", np.asarray(self.samples))
        if self.samples.size == 0:
            raise EmptyWaveform("waveform has no samples")

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def time_s(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate_hz


def power(w: Waveform) -> float:
    """Mean power, mean(|samples|^2)."""
    return float(np.mean(np.abs(w.samples) ** 2))


@dataclass(frozen=True)
class Spectrum:
    """Two-sided PSD estimate, DC-centered, frequencies ascending."""

    freq_hz: np.ndarray
    psd_db_hz: np.ndarray

    def __post_init__(self):
        if self.freq_hz.shape != self.psd_db_hz.shape:
            raise TooShort("freq and psd arrays differ in length")

    def linear(self) -> np.ndarray:
        return 10.0 ** (self.psd_db_hz / 10.0)


@dataclass(frozen=True)
class RrcSpec:
    """Root-raised-cosine shaping parameters."""

    rolloff: float
    samples_per_symbol: int
    span_symbols: int

    def __post_init__(self):
        if not 0.0 <= self.rolloff <= 1.0:
            raise InvalidRolloff(f"rolloff = {self.rolloff}")
        if self.samples_per_symbol < 2:
            raise InvalidRolloff("samples_per_symbol must be >= 2")
        if self.span_symbols < 16 or self.span_symbols % 2:
            raise InvalidRolloff("span_symbols must be an even integer >= 16")


def resample(w: Waveform, new_rate_hz: float) -> Waveform:
    """FFT-domain rational resampling (zero-pad / truncate the spectrum).

    If the input length is not divisible by the reduced ratio denominator
    the tail samples (fewer than the denominator) are dropped first so
    the output length is exact. Deterministic; band content below the
    smaller Nyquist is preserved.
    """
    if new_rate_hz <= 0:
        raise NonPositiveRate(f"new_rate_hz = {new_rate_hz}")
    if new_rate_hz == w.sample_rate_hz:
        return Waveform(w.samples.copy(), w.sample_rate_hz)
    ratio = Fraction(new_rate_hz / w.sample_rate_hz).limit_denominator(10**6)
    n = w.samples.size
    n_keep = n - (n % ratio.denominator)
    if n_keep == 0:
        raise EmptyWaveform("input too short for this resampling ratio")
    num = n_keep * ratio.numerator // ratio.denominator
    out = scipy.signal.resample(w.samples[:n_keep], num)
    return Waveform(out, new_rate_hz)


def rrc_taps(spec: RrcSpec) -> np.ndarray:
    """Root-raised-cosine impulse response, unit energy, odd length.

    Closed form with the usual removable singularities patched; the
    cascade of two of these satisfies the Nyquist criterion at symbol
    spacing (to truncation accuracy of the chosen span).
    """
    sps = spec.samples_per_symbol
    beta = spec.rolloff
    half = spec.span_symbols * sps // 2
    t = np.arange(-half, half + 1) / sps  # in symbol periods
    h = np.zeros_like(t)

    at_zero = t == 0
    h[at_zero] = 1.0 + beta * (4.0 / np.pi - 1.0)

    if beta > 0:
        sing = np.abs(np.abs(4.0 * beta * t) - 1.0) < 1e-12
        x = np.pi / (4.0 * beta)
        h[sing] = (beta / np.sqrt(2.0)) * (
            (1.0 + 2.0 / np.pi) * np.sin(x) + (1.0 - 2.0 / np.pi) * np.cos(x)
        )
    else:
        sing = np.zeros_like(at_zero)

    rest = ~(at_zero | sing)
    tr = t[rest]
    num = np.sin(np.pi * tr * (1.0 - beta)) + 4.0 * beta * tr * np.cos(np.pi * tr * (1.0 + beta))
    den = np.pi * tr * (1.0 - (4.0 * beta * tr) ** 2)
    h[rest] = num / den

    return h / np.sqrt(np.sum(h**2))


def rrc_spectrum(n: int, sample_rate_hz: float, baud_hz: float, rolloff: float) -> np.ndarray:
    """Root-raised-cosine magnitude response sampled on the n-point FFT grid.

    Unit passband; exact spectral shaping with this grid makes the
    tx/rx cascade satisfy the Nyquist criterion to machine precision on
    circular frames, with no tap-truncation ISI.
    """
    f = np.abs(np.fft.fftfreq(n, d=1.0 / sample_rate_hz))
    f1 = baud_hz * (1.0 - rolloff) / 2.0
    f2 = baud_hz * (1.0 + rolloff) / 2.0
    h = np.zeros(n)
    h[f <= f1] = 1.0
    if rolloff > 0:
        trans = (f > f1) & (f <= f2)
        h[trans] = np.sqrt(0.5 * (1.0 + np.cos(np.pi * (f[trans] - f1) / (baud_hz * rolloff))))
    return h


def hilbert(x: np.ndarray) -> np.ndarray:
    """Discrete Hilbert transform of a real sequence.

    FFT sign-flip construction: positive-frequency bins scaled by -j,
    negative by +j, DC and Nyquist zeroed. hilbert(cos) = sin.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 8:
        raise TooShort(f"need at least 8 samples, got {n}")
    spec = np.fft.fft(x)
    mult = np.zeros(n, dtype=complex)
    half = n // 2
    mult[1:half] = -1j
    if n % 2:
        mult[half] = -1j  # odd length: no Nyquist bin
        mult[half + 1 :] = 1j
    else:
        mult[half + 1 :] = 1j  # mult[half] (Nyquist) stays 0
    return np.fft.ifft(spec * mult).real


def psd(w: Waveform, segment_len: int = 4096) -> Spectrum:
    """Welch PSD, Hann window, 50% overlap, two-sided and DC-centered.

    The integral of the linear PSD over all bins equals the waveform
    power to within the usual Welch bias (about 1% for stationary input).
    """
    n = w.samples.size
    if segment_len > n:
        raise TooShort(f"segment_len {segment_len} exceeds waveform length {n}")
    if segment_len & (segment_len - 1):
        raise TooShort(f"segment_len {segment_len} is not a power of two")
    freqs, pxx = scipy.signal.welch(
        w.samples,
        fs=w.sample_rate_hz,
        window="hann",
        nperseg=segment_len,
        noverlap=segment_len // 2,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    freqs = np.fft.fftshift(freqs)
    pxx = np.fft.fftshift(pxx)
    return Spectrum(freq_hz=freqs, psd_db_hz=10.0 * np.log10(np.maximum(pxx, 1e-40)))


def spectrum_integral(s: Spectrum) -> float:
    """Total power implied by a Spectrum (trapezoid-free bin sum)."""
    df = s.freq_hz[1] - s.freq_hz[0]
    return float(np.sum(s.linear()) * df)


def filter_fft(w: Waveform, taps: np.ndarray, center: bool = True) -> Waveform:
    """Circular FIR filtering via the FFT.

    With ``center`` the (odd, symmetric) tap vector is applied zero-phase,
    so linear-phase filters introduce no delay. The frame is treated as
    periodic, consistent with every other spectral op here.
    """
    taps = np.asarray(taps, dtype=float)
    n = w.samples.size
    if taps.size > n:
        raise TooShort("filter longer than waveform")
    h = np.zeros(n, dtype=float)
    if center:
        mid = taps.size // 2
        h[: taps.size - mid] = taps[mid:]
        h[n - mid :] = taps[:mid]
    else:
        h[: taps.size] = taps
    out = np.fft.ifft(np.fft.fft(w.samples) * np.fft.fft(h))
    if not np.iscomplexobj(w.samples):
        out = out.real
    return Waveform(out, w.sample_rate_hz)


def fft_grid(n: int, sample_rate_hz: float) -> np.ndarray:
    """Unshifted FFT bin frequencies for an n-point frame."""
    return np.fft.fftfreq(n, d=1.0 / sample_rate_hz)


def snap_to_grid(freq_hz: float, n: int, sample_rate_hz: float) -> float:
    """Nearest FFT-bin frequency, so a tone is exactly frame-periodic."""
    return round(freq_hz * n / sample_rate_hz) * sample_rate_hz / n


def band_power(w: Waveform, f_lo: float, f_hi: float) -> float:
    """Power within [f_lo, f_hi) computed exactly from the DFT bins."""
    spec = np.fft.fft(w.samples) / w.samples.size
    freqs = fft_grid(w.samples.size, w.sample_rate_hz)
    mask = (freqs >= f_lo) & (freqs < f_hi)
    return float(np.sum(np.abs(spec[mask]) ** 2))


def project_tone(w: Waveform, freq_hz: float) -> complex:
    """Complex amplitude of the exp(+j 2 pi f t) component.

    Exact when freq_hz lies on the frame's FFT grid (integer number of
    periods in the frame), which snap_to_grid guarantees.
    """
    t = w.time_s
    return complex(np.mean(w.samples * np.exp(-2j * np.pi * freq_hz * t)))
