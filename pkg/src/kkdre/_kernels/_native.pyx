# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: beam-search quantizer and the LMS inner loop.

Mirrors _fallback.py exactly (candidate ordering and survivor total
order included); see that module for the behavioral contract.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()


ctypedef struct Cand:
    double cost
    long parent
    long pos


cdef int _cand_cmp(const void* a, const void* b) noexcept nogil:
    cdef const Cand* ca = <const Cand*> a
    cdef const Cand* cb = <const Cand*> b
    if ca.cost < cb.cost:
        return -1
    if ca.cost > cb.cost:
        return 1
    if ca.parent < cb.parent:
        return -1
    if ca.parent > cb.parent:
        return 1
    if ca.pos < cb.pos:
        return -1
    if ca.pos > cb.pos:
        return 1
    return 0


cdef inline Py_ssize_t _nearest_below(const double[::1] levels, double xv) noexcept nogil:
    """Largest index with levels[idx] <= xv, or -1."""
    cdef Py_ssize_t lo = 0, hi = levels.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if levels[mid] <= xv:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1


def beam_quantize(x_in, levels_in, taps_in, Py_ssize_t n_soft, Py_ssize_t beam_width):
    """See _fallback.beam_quantize."""
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[::1] levels = np.ascontiguousarray(levels_in, dtype=np.float64)
    cdef double[::1] taps = np.ascontiguousarray(taps_in, dtype=np.float64)

    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_lev = levels.shape[0]
    cdef Py_ssize_t L = taps.shape[0]
    cdef Py_ssize_t mem = L - 1
    cdef Py_ssize_t max_cand = beam_width * n_soft

    parents_arr = np.zeros((n, beam_width), dtype=np.int64)
    choices_arr = np.zeros((n, beam_width), dtype=np.int64)
    cdef long[:, ::1] parents = parents_arr
    cdef long[:, ::1] choices = choices_arr

    cdef Py_ssize_t hist_len = beam_width * mem if mem else 1
    cdef double* costs = <double*> malloc(beam_width * sizeof(double))
    cdef double* new_costs = <double*> malloc(beam_width * sizeof(double))
    cdef double* hist = <double*> malloc(hist_len * sizeof(double))
    cdef double* new_hist = <double*> malloc(hist_len * sizeof(double))
    cdef Cand* cands = <Cand*> malloc(max_cand * sizeof(Cand))
    cdef long* cand_idx = <long*> malloc(n_soft * sizeof(long))
    cdef double* evals = <double*> malloc(n_soft * sizeof(double))
    if (costs == NULL or new_costs == NULL or hist == NULL or new_hist == NULL
            or cands == NULL or cand_idx == NULL or evals == NULL):
        free(costs); free(new_costs); free(hist); free(new_hist)
        free(cands); free(cand_idx); free(evals)
        raise MemoryError()

    cdef Py_ssize_t n_surv = 1, n_cand, i, s, c, j, k, p
    cdef Py_ssize_t lo, hi, nearest
    cdef double xv, d_lo, d_hi, base, y
    cdef double* tmpd
    costs[0] = 0.0
    for k in range(mem):
        hist[k] = 0.0

    try:
        for i in range(n):
            # candidate levels: n_soft nearest, ties toward the lower level
            xv = x[i]
            lo = _nearest_below(levels, xv)
            if lo < 0:
                nearest = 0
            elif lo == n_lev - 1:
                nearest = lo
            else:
                d_lo = xv - levels[lo]
                d_hi = levels[lo + 1] - xv
                nearest = lo if d_lo <= d_hi else lo + 1
            cand_idx[0] = nearest
            lo = nearest - 1
            hi = nearest + 1
            for c in range(1, n_soft):
                d_lo = xv - levels[lo] if lo >= 0 else -1.0
                d_hi = levels[hi] - xv if hi < n_lev else -1.0
                if d_hi < 0.0 or (d_lo >= 0.0 and d_lo <= d_hi):
                    cand_idx[c] = lo
                    lo -= 1
                else:
                    cand_idx[c] = hi
                    hi += 1
            n_cand = n_soft
            for c in range(n_cand):
                evals[c] = levels[cand_idx[c]] - xv

            for s in range(n_surv):
                base = 0.0
                for k in range(mem):
                    base += taps[k + 1] * hist[s * mem + k]
                for c in range(n_cand):
                    y = taps[0] * evals[c] + base
                    cands[s * n_cand + c].cost = costs[s] + y * y
                    cands[s * n_cand + c].parent = s
                    cands[s * n_cand + c].pos = c

            qsort(cands, n_surv * n_cand, sizeof(Cand), _cand_cmp)

            k = n_surv * n_cand
            if k > beam_width:
                k = beam_width
            for j in range(k):
                p = cands[j].parent
                c = cands[j].pos
                new_costs[j] = cands[j].cost
                parents[i, j] = p
                choices[i, j] = cand_idx[c]
                if mem:
                    new_hist[j * mem] = evals[c]
                    for s in range(1, mem):
                        new_hist[j * mem + s] = hist[p * mem + s - 1]
            tmpd = costs; costs = new_costs; new_costs = tmpd
            tmpd = hist; hist = new_hist; new_hist = tmpd
            n_surv = k

        out_arr = np.empty(n, dtype=np.float64)
        s = 0
        for i in range(n - 1, -1, -1):
            out_arr[i] = levels[choices[i, s]]
            s = parents[i, s]
        best_cost = costs[0]
    finally:
        free(costs); free(new_costs); free(hist); free(new_hist)
        free(cands); free(cand_idx); free(evals)

    return out_arr, float(best_cost)


def lms_fse(rx2_in, tx_in, Py_ssize_t ntaps, double mu, Py_ssize_t passes):
    """See _fallback.lms_fse."""
    cdef double complex[::1] rx2 = np.ascontiguousarray(rx2_in, dtype=np.complex128)
    cdef double complex[::1] tx = np.ascontiguousarray(tx_in, dtype=np.complex128)

    cdef Py_ssize_t n2 = rx2.shape[0]
    cdef Py_ssize_t n_sym = tx.shape[0]
    if n2 // 2 < n_sym:
        n_sym = n2 // 2
    cdef Py_ssize_t half = ntaps // 2

    w_arr = np.zeros(ntaps, dtype=np.complex128)
    cdef double complex[::1] w = w_arr
    w[half] = 1.0

    mse_arr = np.zeros(passes, dtype=np.float64)
    cdef double[::1] mse = mse_arr
    y_arr = np.empty(n_sym, dtype=np.complex128)
    cdef double complex[::1] y = y_arr

    cdef Py_ssize_t p, k, j, idx
    cdef double complex acc, err
    cdef double sq
    for p in range(passes):
        sq = 0.0
        for k in range(n_sym):
            acc = 0.0
            for j in range(ntaps):
                idx = (2 * k + j - half) % n2
                if idx < 0:
                    idx += n2
                acc += w[j] * rx2[idx]
            err = tx[k] - acc
            for j in range(ntaps):
                idx = (2 * k + j - half) % n2
                if idx < 0:
                    idx += n2
                w[j] += mu * err * rx2[idx].conjugate()
            sq += err.real * err.real + err.imag * err.imag
        mse[p] = sq / n_sym

    for k in range(n_sym):
        acc = 0.0
        for j in range(ntaps):
            idx = (2 * k + j - half) % n2
            if idx < 0:
                idx += n2
            acc += w[j] * rx2[idx]
        y[k] = acc
    return y_arr, w_arr, mse_arr
