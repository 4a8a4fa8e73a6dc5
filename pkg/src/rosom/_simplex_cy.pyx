# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled revised-simplex pivot kernel.

Twin of ``_simplex_impl.pivot_block`` (same contract, same tie-breaking);
see that module for the return-code documentation. The whole pivot loop runs
in C: pricing, FTRAN, ratio test and the rank-1 basis-inverse update.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

PRICING_DANTZIG = 0
PRICING_BLAND = 1


def pivot_block(double[:, ::1] A, double[::1] cost, unsigned char[::1] allowed,
                double[:, ::1] binv, cnp.int64_t[::1] basis, double[::1] xB,
                long long max_pivots, int pricing, double tol_rc, double tol_piv,
                double cutoff, int use_cutoff, int degen_limit):
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef Py_ssize_t i, j, q, leave, pivots
    cdef int degen_streak = 0
    cdef double rmin, rj, theta, ratio, dp, acc, obj, tie_window
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_arr = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] y = y_arr
    cdef double[::1] d = d_arr
    cdef double brow_j

    pivots = 0
    while pivots < max_pivots:
        # y = cost_B . binv
        for j in range(m):
            acc = 0.0
            for i in range(m):
                acc += cost[basis[i]] * binv[i, j]
            y[j] = acc
        # price: reduced cost r_j = cost_j - y . A_j over allowed columns
        q = -1
        rmin = -tol_rc
        for j in range(n):
            if not allowed[j]:
                continue
            acc = cost[j]
            for i in range(m):
                acc -= y[i] * A[i, j]
            rj = acc
            if rj < rmin:
                rmin = rj
                q = j
                if pricing == PRICING_BLAND:
                    break
        if q < 0:
            return 0, pivots
        # d = binv . A_q
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += binv[i, j] * A[j, q]
            d[i] = acc
        # Harris-style ratio test: candidates may overshoot by at most 1e-9;
        # prefer well-sized pivots to keep the basis inverse conditioned
        dp = 0.0
        for i in range(m):
            if d[i] > dp:
                dp = d[i]
        if dp <= tol_piv:
            return 1, pivots
        tie_window = -1.0
        for i in range(m):
            if d[i] > tol_piv:
                ratio = (xB[i] + 1e-9) / d[i]
                if tie_window < 0.0 or ratio < tie_window:
                    tie_window = ratio
        acc = 1e-7 * dp
        if acc < tol_piv:
            acc = tol_piv
        leave = -1
        for strict in (1, 0):
            floor = acc if strict else tol_piv
            if pricing == PRICING_BLAND:
                for i in range(m):
                    if d[i] > floor and xB[i] / d[i] <= tie_window:
                        if leave < 0 or basis[i] < basis[leave]:
                            leave = i  # anti-cycling leaving rule
            else:
                for i in range(m):
                    if d[i] > floor and xB[i] / d[i] <= tie_window:
                        if leave < 0 or d[i] > d[leave]:
                            leave = i  # stability: largest pivot
            if leave >= 0:
                break
        theta = xB[leave] / d[leave]
        if theta < 0.0:
            theta = 0.0
        # update basic solution and basis inverse (rank-1)
        for i in range(m):
            xB[i] -= theta * d[i]
            if xB[i] < 0.0:
                xB[i] = 0.0
        xB[leave] = theta
        dp = d[leave]
        for j in range(m):
            binv[leave, j] /= dp
        for i in range(m):
            if i == leave:
                continue
            if d[i] != 0.0:
                brow_j = d[i]
                for j in range(m):
                    binv[i, j] -= brow_j * binv[leave, j]
        basis[leave] = q
        pivots += 1

        if theta <= 1e-12:
            degen_streak += 1
            if degen_streak >= degen_limit and pricing == PRICING_DANTZIG:
                return 3, pivots
        else:
            degen_streak = 0
        if use_cutoff:
            obj = 0.0
            for i in range(m):
                obj += cost[basis[i]] * xB[i]
            if obj < cutoff:
                return 4, pivots
    return 2, pivots
