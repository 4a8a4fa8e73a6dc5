"""Pure-Python (numpy) revised-simplex pivot kernel.

This is the fallback twin of the compiled kernel in ``_simplex_cy.pyx``; both
expose the same ``pivot_block`` contract and are selected at import time by
``linsolve``. The kernel runs at most ``max_pivots`` primal simplex pivots on
a standard-form problem (min cost.z s.t. A z = b, z >= 0), maintaining the
dense basis inverse in place. All phase logic, refactorization and status
assembly live in the driver.

Return codes:
    0  optimal (no entering column priced out)
    1  unbounded (entering column with no blocking row)
    2  pivot budget exhausted
    3  degenerate-pivot streak hit ``degen_limit`` (driver switches pricing)
    4  objective fell below ``cutoff`` (only checked when ``use_cutoff``)
"""

import numpy as np

PRICING_DANTZIG = 0
PRICING_BLAND = 1


def pivot_block(A, cost, allowed, binv, basis, xB, max_pivots, pricing,
                tol_rc, tol_piv, cutoff, use_cutoff, degen_limit):
    """Run pivots in place; mutates binv, basis and xB. Returns (code, count)."""
    m = A.shape[0]
    degen_streak = 0
    pivots = 0
    big = np.inf
    while pivots < max_pivots:
        # reduced costs r = cost - (cost_B . binv) . A over allowed columns
        y = cost[basis] @ binv
        r = cost - y @ A
        if pricing == PRICING_BLAND:
            cand = np.flatnonzero(allowed & (r < -tol_rc))
            if cand.size == 0:
                return 0, pivots
            q = int(cand[0])
        else:
            r_masked = np.where(allowed, r, big)
            q = int(np.argmin(r_masked))
            if r_masked[q] >= -tol_rc:
                return 0, pivots
        d = binv @ A[:, q]
        dmax = d.max(initial=0.0)
        if dmax <= tol_piv:
            return 1, pivots
        elig = d > tol_piv
        dsafe = np.where(elig, d, 1.0)
        ratios = np.where(elig, xB / dsafe, big)
        # Harris-style window: candidate rows may overshoot by at most 1e-9
        theta_max = np.where(elig, (xB + 1e-9) / dsafe, big).min()
        cand = elig & (ratios <= theta_max)
        # prefer well-sized pivots to keep the basis inverse conditioned
        strong = cand & (d > 1e-7 * dmax)
        ties = np.flatnonzero(strong if strong.any() else cand)
        if pricing == PRICING_BLAND:
            leave = int(ties[np.argmin(basis[ties])])  # anti-cycling leaving rule
        else:
            leave = int(ties[np.argmax(d[ties])])  # stability: largest pivot
        theta = max(ratios[leave], 0.0)

        xB -= theta * d
        xB[leave] = theta
        np.maximum(xB, 0.0, out=xB)
        dp = d[leave]
        brow = binv[leave] / dp
        binv -= np.outer(d, brow)
        binv[leave] = brow
        basis[leave] = q
        pivots += 1

        if theta <= 1e-12:
            degen_streak += 1
            if degen_streak >= degen_limit and pricing == PRICING_DANTZIG:
                return 3, pivots
        else:
            degen_streak = 0
        if use_cutoff and cost[basis] @ xB < cutoff:
            return 4, pivots
    return 2, pivots
