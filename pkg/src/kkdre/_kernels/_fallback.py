"""Pure-Python kernels, the reference implementations.

The compiled module in ``_native.pyx`` mirrors these exactly (same
candidate ordering, same survivor total order); these stay importable on
any platform and are what the oracle tests pin down.
"""

from __future__ import annotations

import numpy as np


def _candidates(xv: float, levels: np.ndarray, n_soft: int) -> np.ndarray:
    """Indices of the n_soft levels nearest xv, ties toward the lower level."""
    d = np.abs(levels - xv)
    order = np.lexsort((levels, d))
    return order[:n_soft]


def beam_quantize(
    x: np.ndarray,
    levels: np.ndarray,
    taps: np.ndarray,
    n_soft: int,
    beam_width: int,
) -> tuple[np.ndarray, float]:
    """M-algorithm search for the level sequence minimizing filtered-error energy.

    Path cost is sum_n ((e * taps)[n])^2 over the input length with zero
    initial filter state, e being output minus input. Survivors are kept
    by the total order (cost, parent index, candidate index), which makes
    the search fully deterministic.

    Returns (chosen level values, accumulated cost of the best survivor).
    """
    x = np.asarray(x, dtype=float)
    levels = np.asarray(levels, dtype=float)
    taps = np.asarray(taps, dtype=float)
    n = x.size
    mem = taps.size - 1

    costs = np.zeros(1)
    hist = np.zeros((1, mem))  # hist[s, k] = error of survivor s at step i-1-k
    parents = np.zeros((n, beam_width), dtype=np.int64)
    choices = np.zeros((n, beam_width), dtype=np.int64)

    n_surv = 1
    for i in range(n):
        cand = _candidates(x[i], levels, n_soft)
        e = levels[cand] - x[i]
        base = hist[:n_surv] @ taps[1:] if mem else np.zeros(n_surv)
        y = taps[0] * e[None, :] + base[:, None]
        newcost = costs[:n_surv, None] + y * y
        flat = newcost.ravel()
        parent_ids = np.repeat(np.arange(n_surv), e.size)
        cand_ids = np.tile(np.arange(e.size), n_surv)
        order = np.lexsort((cand_ids, parent_ids, flat))
        keep = order[:beam_width]
        k = keep.size
        parents[i, :k] = parent_ids[keep]
        choices[i, :k] = cand[cand_ids[keep]]
        new_hist = np.empty((k, mem))
        if mem:
            new_hist[:, 0] = e[cand_ids[keep]]
            if mem > 1:
                new_hist[:, 1:] = hist[parent_ids[keep], : mem - 1]
        costs = flat[keep]
        hist = new_hist
        n_surv = k

    out_idx = np.empty(n, dtype=np.int64)
    s = 0  # survivors are cost-sorted, index 0 is the winner
    for i in range(n - 1, -1, -1):
        out_idx[i] = choices[i, s]
        s = parents[i, s]
    return levels[out_idx], float(costs[0])


def lms_fse(
    rx2: np.ndarray,
    tx: np.ndarray,
    ntaps: int,
    mu: float,
    passes: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fractionally spaced (2 samples in, 1 symbol out) LMS equalizer.

    Center-spike initialization; ``passes`` training passes over the whole
    frame followed by a frozen-tap decision pass. Windows wrap circularly
    (frames are periodic by construction). Returns (decision outputs,
    final taps, mean-square training error per pass).
    """
    rx2 = np.asarray(rx2, dtype=complex)
    tx = np.asarray(tx, dtype=complex)
    n2 = rx2.size
    n_sym = min(tx.size, n2 // 2)
    half = ntaps // 2
    offs = np.arange(ntaps) - half

    w = np.zeros(ntaps, dtype=complex)
    w[half] = 1.0
    mse = np.zeros(passes)
    for p in range(passes):
        acc = 0.0
        for k in range(n_sym):
            u = rx2[(2 * k + offs) % n2]
            err = tx[k] - np.dot(w, u)
            w = w + mu * err * np.conj(u)
            acc += err.real**2 + err.imag**2
        mse[p] = acc / n_sym

    y = np.empty(n_sym, dtype=complex)
    for k in range(n_sym):
        u = rx2[(2 * k + offs) % n2]
        y[k] = np.dot(w, u)
    return y, w, mse
