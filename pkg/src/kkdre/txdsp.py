"""Transmit DSP: bits to Gray-mapped QAM, RRC shaping, digital carrier
tone insertion at a target carrier-to-signal power ratio, and peak
normalization of the I/Q rails for the DAC.

Gray label table
----------------
For square QAM with m bits per symbol, the first m/2 bits select the I
level and the last m/2 bits the Q level (MSB first within each group).
Each axis uses the binary-reflected Gray code over levels ordered from
most positive to most negative, so the all-zeros word maps to the
top-right point and horizontally or vertically adjacent points differ in
exactly one bit. QPSK example: 00 -> (+1+1j)/sqrt(2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AllZeroWaveform,
    EmptySymbols,
    LengthNotDivisible,
    ToneAboveNyquist,
    ToneInsideSignalBand,
)
from .sigproc import RrcSpec, Waveform, power, rrc_spectrum, snap_to_grid


def _gray_to_index(g: np.ndarray) -> np.ndarray:
    """Inverse of the binary-reflected Gray code."""
    out = g.copy()
    shift = g >> 1
    while shift.any():
        out ^= shift
        shift >>= 1
    return out


@dataclass(frozen=True)
class ConstellationMap:
    """Gray-labeled square QAM with unit mean energy.

    ``points[v]`` is the constellation point for the m-bit word v
    (MSB first). Built via :func:`make_constellation`.
    """

    bits_per_symbol: int
    points: np.ndarray

    def __post_init__(self):
        m = self.bits_per_symbol
        if self.points.size != 2**m:
            raise EmptySymbols(f"expected {2**m} points, got {self.points.size}")


def make_constellation(bits_per_symbol: int) -> ConstellationMap:
    """Square QAM for 2, 4 or 6 bits per symbol (QPSK, 16-QAM, 64-QAM)."""
    m = bits_per_symbol
    if m not in (2, 4, 6):
        raise EmptySymbols(f"unsupported bits_per_symbol = {m}")
    m_axis = m // 2
    n_axis = 2**m_axis
    # axis levels ordered most positive first; Gray index g maps to level n-1-2*i
    words = np.arange(n_axis)
    idx = _gray_to_index(words)
    axis_levels = (n_axis - 1) - 2 * idx  # word -> amplitude
    vals = np.arange(2**m)
    i_word = vals >> m_axis
    q_word = vals & (n_axis - 1)
    pts = axis_levels[i_word] + 1j * axis_levels[q_word]
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    return ConstellationMap(bits_per_symbol=m, points=pts)


@dataclass(frozen=True)
class ToneSpec:
    """Digitally added carrier: offset from band center and target CSPR."""

    offset_hz: float = 13.9e9
    cspr_db: float = 8.7


@dataclass(frozen=True)
class TxFrame:
    """One transmit frame up to the DAC input."""

    bits: np.ndarray
    symbols: np.ndarray
    waveform: Waveform
    scale_applied: float


def generate_bits(seed: int, n_bits: int) -> np.ndarray:
    """Deterministic pseudo-random bit sequence (uint8 zeros and ones)."""
    if n_bits <= 0:
        raise EmptySymbols(f"n_bits = {n_bits}")
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=n_bits, dtype=np.uint8)


def map_qam(bits: np.ndarray, cmap: ConstellationMap) -> np.ndarray:
    """Map a bit sequence to constellation points, m bits per symbol."""
    m = cmap.bits_per_symbol
    bits = np.asarray(bits)
    if bits.size % m:
        raise LengthNotDivisible(f"{bits.size} bits not divisible by {m}")
    groups = bits.reshape(-1, m).astype(np.int64)
    weights = 1 << np.arange(m - 1, -1, -1)
    return cmap.points[groups @ weights]


def demap_hard(symbols: np.ndarray, cmap: ConstellationMap) -> np.ndarray:
    """Nearest-point hard decision, returns the bit words (not bits)."""
    d = np.abs(symbols[:, None] - cmap.points[None, :])
    return np.argmin(d, axis=1)


def words_to_bits(words: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((words[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def pulse_shape(symbols: np.ndarray, rrc: RrcSpec, baud_hz: float) -> Waveform:
    """RRC pulse shaping, exact in the frequency domain of the frame.

    Output rate is baud * samples_per_symbol and output mean power is the
    symbol mean power (response scaled by sps to undo zero-stuffing).
    """
    symbols = np.asarray(symbols, dtype=complex)
    if symbols.size == 0:
        raise EmptySymbols("no symbols")
    sps = rrc.samples_per_symbol
    up = np.zeros(symbols.size * sps, dtype=complex)
    up[::sps] = symbols
    n = up.size
    shape = rrc_spectrum(n, baud_hz * sps, baud_hz, rrc.rolloff) * sps
    return Waveform(np.fft.ifft(np.fft.fft(up) * shape), baud_hz * sps)


def add_cw_tone(w: Waveform, tone: ToneSpec, signal_edge_hz: float | None = None) -> Waveform:
    """Add the carrier tone at +offset with power set by the target CSPR.

    The tone frequency is snapped to the frame's FFT grid so it is exactly
    periodic in the frame (sub-ppm shift at realistic sizes). When
    ``signal_edge_hz`` is given the tone must sit outside the signal band.
    """
    nyq = w.sample_rate_hz / 2
    if tone.offset_hz >= nyq:
        raise ToneAboveNyquist(f"offset {tone.offset_hz} >= Nyquist {nyq}")
    if signal_edge_hz is not None and tone.offset_hz <= signal_edge_hz:
        raise ToneInsideSignalBand(
            f"offset {tone.offset_hz} inside signal band (edge {signal_edge_hz})"
        )
    f = snap_to_grid(tone.offset_hz, w.samples.size, w.sample_rate_hz)
    amp = np.sqrt(power(w) * 10.0 ** (tone.cspr_db / 10.0))
    out = w.samples + amp * np.exp(2j * np.pi * f * w.time_s)
    return Waveform(out, w.sample_rate_hz)


def normalize_rails(w: Waveform) -> tuple[Waveform, float]:
    """Scale both rails so the larger rail peak is exactly 1.

    Returns the scaled waveform and the applied scale factor.
    """
    peak = max(np.max(np.abs(w.samples.real)), np.max(np.abs(w.samples.imag)))
    if peak == 0:
        raise AllZeroWaveform("cannot normalize an all-zero waveform")
    scale = 1.0 / peak
    return Waveform(w.samples * scale, w.sample_rate_hz), scale


def build_frame(
    seed: int,
    n_symbols: int,
    cmap: ConstellationMap,
    rrc: RrcSpec,
    baud_hz: float,
    tone: ToneSpec,
) -> TxFrame:
    """bits -> symbols -> shaping -> tone -> peak normalization."""
    bits = generate_bits(seed, n_symbols * cmap.bits_per_symbol)
    symbols = map_qam(bits, cmap)
    shaped = pulse_shape(symbols, rrc, baud_hz)
    edge = baud_hz * (1.0 + rrc.rolloff) / 2.0
    with_tone = add_cw_tone(shaped, tone, signal_edge_hz=edge)
    normed, scale = normalize_rails(with_tone)
    return TxFrame(bits=bits, symbols=symbols, waveform=normed, scale_applied=scale)
