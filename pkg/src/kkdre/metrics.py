"""Quality metrics: post-equalization SNR / EVM, hard-decision BER, and
bitwise mutual information (GMI / NGMI) under a circular-Gaussian
auxiliary channel with exact log-sum-exp LLRs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateVariance, LengthMismatch
from .txdsp import ConstellationMap

_LN2 = math.log(2.0)
_SNR_SENTINEL_DB = 200.0


@dataclass(frozen=True)
class MetricReport:
    snr_db: float
    evm_pct: float
    ber: float
    gmi_bits: float
    ngmi: float
    n_symbols: int


def snr_evm(eq_syms: np.ndarray, ref_syms: np.ndarray) -> tuple[float, float]:
    """SNR (dB) and EVM (%) after a least-squares complex scalar fit."""
    eq_syms = np.asarray(eq_syms)
    ref_syms = np.asarray(ref_syms)
    if eq_syms.size != ref_syms.size:
        raise LengthMismatch(f"{eq_syms.size} vs {ref_syms.size} symbols")
    if eq_syms.size < 1000:
        raise LengthMismatch("need at least 1000 symbols")
    g = np.vdot(ref_syms, eq_syms) / np.vdot(ref_syms, ref_syms)
    err = eq_syms - g * ref_syms
    p_fit = float(np.abs(g) ** 2 * np.mean(np.abs(ref_syms) ** 2))
    p_err = float(np.mean(np.abs(err) ** 2))
    if p_err <= p_fit * 1e-20:
        return _SNR_SENTINEL_DB, 0.0
    return 10.0 * math.log10(p_fit / p_err), 100.0 * math.sqrt(p_err / p_fit)


def _check_bits(eq_syms: np.ndarray, tx_bits: np.ndarray, m: int) -> None:
    if tx_bits.size != m * eq_syms.size:
        raise LengthMismatch(f"{tx_bits.size} bits for {eq_syms.size} symbols of {m} bits")


def _fit_scale(eq_syms: np.ndarray, ref_syms: np.ndarray) -> np.ndarray:
    g = np.vdot(ref_syms, eq_syms) / np.vdot(ref_syms, ref_syms)
    if g == 0:
        raise DegenerateVariance("received symbols are orthogonal to the reference")
    return eq_syms / g


def _mixture_ml_sigma2(y: np.ndarray, points: np.ndarray, iters: int = 8) -> float:
    """ML variance of the uniform Gaussian mixture over the constellation.

    EM fixed point, initialized from the nearest-point (decision-directed)
    fit; at high SNR the two coincide.
    """
    d2 = np.abs(y[:, None] - points[None, :]) ** 2
    s2 = float(np.mean(np.min(d2, axis=1)))
    floor = 1e-12 * float(np.mean(np.abs(y) ** 2) + 1e-300)
    s2 = max(s2, floor)
    for _ in range(iters):
        z = -d2 / s2
        z -= z.max(axis=1, keepdims=True)
        w = np.exp(z)
        w /= w.sum(axis=1, keepdims=True)
        s2_new = float(np.sum(w * d2) / y.size)
        if not math.isfinite(s2_new):
            raise DegenerateVariance(f"variance estimate diverged: {s2_new}")
        if abs(s2_new - s2) <= 1e-9 * s2:
            s2 = s2_new
            break
        s2 = max(s2_new, floor)
    return s2


def gmi_ngmi(
    eq_syms: np.ndarray,
    tx_bits: np.ndarray,
    cmap: ConstellationMap,
    chunk: int = 16384,
) -> tuple[float, float]:
    """Bitwise generalized mutual information and its normalized form.

    LLRs use the exact subset-sum circular-Gaussian likelihood with an
    ML-estimated scalar variance; GMI = m - mean over bits of
    log2(1 + exp(-/+ LLR)) with the sign taken from the true bit.
    """
    eq_syms = np.asarray(eq_syms, dtype=complex)
    tx_bits = np.asarray(tx_bits)
    m = cmap.bits_per_symbol
    _check_bits(eq_syms, tx_bits, m)

    weights = 1 << np.arange(m - 1, -1, -1)
    words = tx_bits.reshape(-1, m).astype(np.int64) @ weights
    ref = cmap.points[words]
    y = _fit_scale(eq_syms, ref)

    # variance fit on a subsample keeps the EM cheap on long runs
    step = max(1, y.size // 65536)
    s2 = _mixture_ml_sigma2(y[::step], cmap.points)

    all_words = np.arange(cmap.points.size)
    bit_of = [((all_words >> (m - 1 - i)) & 1).astype(bool) for i in range(m)]
    bits_mat = tx_bits.reshape(-1, m).astype(bool)

    loss_terms = []
    n = y.size
    for lo in range(0, n, chunk):
        sl = slice(lo, min(lo + chunk, n))
        z = -np.abs(y[sl, None] - cmap.points[None, :]) ** 2 / s2
        chunk_loss = 0.0
        for i in range(m):
            a1 = logsumexp(z[:, bit_of[i]], axis=1)
            a0 = logsumexp(z[:, ~bit_of[i]], axis=1)
            llr = a0 - a1
            sgn = np.where(bits_mat[sl, i], 1.0, -1.0)
            chunk_loss += float(np.sum(np.logaddexp(0.0, sgn * llr)))
        loss_terms.append(chunk_loss)
    gmi = m - math.fsum(loss_terms) / (n * _LN2)
    return gmi, gmi / m


def _nearest_words(eq_syms: np.ndarray, cmap: ConstellationMap, chunk: int = 65536) -> np.ndarray:
    out = np.empty(eq_syms.size, dtype=np.int64)
    for lo in range(0, eq_syms.size, chunk):
        sl = slice(lo, min(lo + chunk, eq_syms.size))
        d = np.abs(eq_syms[sl, None] - cmap.points[None, :])
        out[sl] = np.argmin(d, axis=1)
    return out


def ber(eq_syms: np.ndarray, tx_bits: np.ndarray, cmap: ConstellationMap) -> float:
    """Pre-FEC bit error rate from hard nearest-point decisions."""
    eq_syms = np.asarray(eq_syms, dtype=complex)
    tx_bits = np.asarray(tx_bits)
    m = cmap.bits_per_symbol
    _check_bits(eq_syms, tx_bits, m)
    weights = 1 << np.arange(m - 1, -1, -1)
    ref_words = tx_bits.reshape(-1, m).astype(np.int64) @ weights
    ref = cmap.points[ref_words]
    y = _fit_scale(eq_syms, ref)
    words = _nearest_words(y, cmap)
    diff = words ^ ref_words
    errors = np.zeros(diff.size, dtype=np.int64)
    for _ in range(m):
        errors += diff & 1
        diff >>= 1
    return float(np.sum(errors)) / tx_bits.size


def compute_report(
    eq_syms: np.ndarray, tx_bits: np.ndarray, cmap: ConstellationMap
) -> MetricReport:
    """All metrics for one equalized run."""
    weights = 1 << np.arange(cmap.bits_per_symbol - 1, -1, -1)
    words = tx_bits.reshape(-1, cmap.bits_per_symbol).astype(np.int64) @ weights
    ref = cmap.points[words]
    snr_db, evm = snr_evm(eq_syms, ref)
    gmi, ngmi = gmi_ngmi(eq_syms, tx_bits, cmap)
    return MetricReport(
        snr_db=snr_db,
        evm_pct=evm,
        ber=ber(eq_syms, tx_bits, cmap),
        gmi_bits=gmi,
        ngmi=ngmi,
        n_symbols=int(eq_syms.size),
    )
