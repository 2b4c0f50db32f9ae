"""Everything between DAC output and ADC output: ideal IQ modulation
(identity), optical band-pass, OSNR noise loading, chromatic dispersion,
square-law photodetection and the receiver ADC.

The only noise knob is the OSNR loader; the modulator, filters and
photodiode are ideal components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.constants

from .dre import QuantizerSpec, quantize_uniform
from .errors import BandExceedsNyquist, NonPositiveRate, NoSignalPower
from .sigproc import Waveform, band_power, power, project_tone, resample, snap_to_grid


@dataclass(frozen=True)
class FiberSpec:
    """Dispersive fiber span; length 0 gives back-to-back."""

    length_km: float = 50.0
    dispersion_ps_nm_km: float = 17.0
    center_freq_thz: float = 193.4

    def __post_init__(self):
        if self.length_km < 0:
            raise NonPositiveRate("fiber length must be >= 0")
        if self.center_freq_thz <= 0:
            raise NonPositiveRate("center frequency must be positive")


@dataclass(frozen=True)
class OsnrSpec:
    """ASE loading target; target_db None means no loading."""

    target_db: float | None = None
    ref_bandwidth_hz: float = 12.5e9

    def __post_init__(self):
        if self.ref_bandwidth_hz <= 0:
            raise NonPositiveRate("reference bandwidth must be positive")


@dataclass(frozen=True)
class PdSpec:
    ac_coupled: bool = True
    responsivity: float = 1.0

    def __post_init__(self):
        if self.responsivity <= 0:
            raise NonPositiveRate("responsivity must be positive")


def optical_bpf(w: Waveform, bandwidth_hz: float, center_hz: float = 0.0) -> Waveform:
    """Ideal brick-wall band-pass; bins outside the band are zeroed."""
    if bandwidth_hz > w.sample_rate_hz:
        raise BandExceedsNyquist(
            f"bandwidth {bandwidth_hz} exceeds simulated band {w.sample_rate_hz}"
        )
    spec = np.fft.fft(w.samples)
    freqs = np.fft.fftfreq(w.samples.size, d=1.0 / w.sample_rate_hz)
    keep = np.abs(freqs - center_hz) <= bandwidth_hz / 2
    out = np.fft.ifft(spec * keep)
    if not np.iscomplexobj(w.samples):
        out = out.real
    return Waveform(out, w.sample_rate_hz)


def apply_cd(w: Waveform, fiber: FiberSpec) -> Waveform:
    """Chromatic dispersion as a frequency-domain all-pass.

    H(f) = exp(-j pi lambda0^2 D L f^2 / c). Energy preserving; applying
    the negated dispersion inverts it exactly.
    """
    if fiber.length_km == 0:
        return Waveform(w.samples.copy(), w.sample_rate_hz)
    c = scipy.constants.c
    lam0 = c / (fiber.center_freq_thz * 1e12)
    d_si = fiber.dispersion_ps_nm_km * 1e-6  # s/m/m
    length_m = fiber.length_km * 1e3
    freqs = np.fft.fftfreq(w.samples.size, d=1.0 / w.sample_rate_hz)
    phase = -np.pi * lam0**2 * d_si * length_m * freqs**2 / c
    out = np.fft.ifft(np.fft.fft(w.samples) * np.exp(1j * phase))
    return Waveform(out, w.sample_rate_hz)


def load_osnr(w: Waveform, osnr: OsnrSpec, seed: int) -> Waveform:
    """Add circular white Gaussian noise to hit the target OSNR.

    OSNR is total waveform power (signal plus carrier) over the noise
    power falling in the reference bandwidth. None passes through.
    """
    if osnr.target_db is None:
        return Waveform(w.samples.copy(), w.sample_rate_hz)
    p_tot = power(w)
    # white over the simulated band: variance scales with fs / B_ref
    var = p_tot * (w.sample_rate_hz / osnr.ref_bandwidth_hz) / 10.0 ** (osnr.target_db / 10.0)
    rng = np.random.default_rng(seed)
    n = w.samples.size
    noise = np.sqrt(var / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return Waveform(w.samples + noise, w.sample_rate_hz)


def measure_cspr(w: Waveform, tone_offset_hz: float) -> float:
    """Carrier-to-signal power ratio in dB.

    The carrier amplitude comes from projecting onto the grid-snapped
    tone (an exact integer number of periods per frame); signal power is
    the total minus the carrier line.
    """
    nyq = w.sample_rate_hz / 2
    if abs(tone_offset_hz) >= nyq:
        raise BandExceedsNyquist(f"tone offset {tone_offset_hz} beyond Nyquist {nyq}")
    f = snap_to_grid(tone_offset_hz, w.samples.size, w.sample_rate_hz)
    amp = project_tone(w, f)
    p_tone = abs(amp) ** 2
    p_sig = power(w) - p_tone
    if p_sig <= max(p_tone, 1e-300) * 1e-12:
        raise NoSignalPower("signal residual below numerical floor")
    if p_tone == 0.0:
        return -400.0
    return float(10.0 * np.log10(p_tone / p_sig))


def photodiode(w: Waveform, pd: PdSpec) -> tuple[Waveform, float]:
    """Square-law detection, I = R |E|^2.

    Returns (photocurrent, removed DC). The DC value is diagnostic only;
    an AC-coupled receiver has to re-estimate its bias downstream.
    """
    current = pd.responsivity * np.abs(w.samples) ** 2
    removed = 0.0
    if pd.ac_coupled:
        removed = float(np.mean(current))
        current = current - removed
    return Waveform(current, w.sample_rate_hz), removed


def adc(x: Waveform, rate_hz: float = 80e9, bits: int | None = None) -> Waveform:
    """Receiver ADC: anti-alias lowpass, resample, optional quantization.

    The anti-alias filter is a brick-wall at the new Nyquist. With bits
    set, a mid-rise quantizer spans the waveform's own peak value.
    """
    if rate_hz <= 0:
        raise NonPositiveRate(f"rate_hz = {rate_hz}")
    out = x
    if rate_hz < x.sample_rate_hz:
        spec = np.fft.fft(x.samples)
        freqs = np.fft.fftfreq(x.samples.size, d=1.0 / x.sample_rate_hz)
        spec[np.abs(freqs) > rate_hz / 2] = 0.0
        filtered = np.fft.ifft(spec)
        if not np.iscomplexobj(x.samples):
            filtered = filtered.real
        out = Waveform(filtered, x.sample_rate_hz)
    if rate_hz != x.sample_rate_hz:
        out = resample(out, rate_hz)
    if bits is not None:
        peak = float(np.max(np.abs(out.samples)))
        if peak > 0:
            q = QuantizerSpec(bits=bits, full_scale=peak)
            out = Waveform(quantize_uniform(out.samples, q), out.sample_rate_hz)
    return out


def noise_bandwidth_power(w: Waveform, f_lo: float, f_hi: float) -> float:
    """Convenience wrapper used by calibration tests."""
    return band_power(w, f_lo, f_hi)
