"""Worst-case (pessimization) oracles over uncertainty sets.

Computes the true robust value of fixed decisions by maximizing the
sum-of-maxima left-hand side over the uncertainty set, either by enumerating
all maximizer assignments (one affine maximization each) or by a big-M MILP
with one binary per (term, function). A closed-form fast path covers the
common sign-symmetric absolute-value structure, where the worst case follows
from aligning each term's sign; the automatic dispatcher prefers it because
it is exact and independent of the term count.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linsolve
from .linsolve import LinearProgram, MILP, Status
from .model import SumOfMaxProblem, evaluate_lhs
from .uncertainty import Box, Ellipsoid, UncertaintySet

ENUM_CAP = 10 ** 6
_CHUNK = 65536


class OracleError(Exception):
    pass


class EnumerationCapExceeded(OracleError):
    """Too many assignments; use true_value_milp."""


class UnsupportedSet(OracleError):
    """The set admits no linear representation; use true_value_enum."""


@dataclass(frozen=True)
class WorstCase:
    value: float
    zeta: np.ndarray
    assignment: Optional[tuple] = None
    optimal: bool = True


def max_affine(uset: UncertaintySet, c, c0: float = 0.0) -> WorstCase:
    """Exact maximizer of c0 + c.zeta over the set."""
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.size != uset.dim:
        raise OracleError(f"coefficient dimension {c.size} != set dimension {uset.dim}")
    value, zeta = uset.max_affine(c, c0)
    return WorstCase(value, zeta)


def violated_scenario(uset: UncertaintySet, coef, const: float, rhs: float = 0.0,
                      tol: float = 1e-7) -> Optional[np.ndarray]:
    """A zeta with const + coef.zeta > rhs + tol, or None when none exists."""
    wc = max_affine(uset, coef, const)
    if wc.value > rhs + tol:
        return wc.zeta
    return None


def _term_coefficients(problem: SumOfMaxProblem, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != problem.n_x:
        raise OracleError("x dimension mismatch")
    base_c, base_c0 = problem.base.zeta_affine(x)
    term_c = []
    term_c0 = []
    for term in problem.terms:
        cs = np.empty((len(term), problem.n_zeta))
        c0s = np.empty(len(term))
        for j, f in enumerate(term):
            cs[j], c0s[j] = f.zeta_affine(x)
        term_c.append(cs)
        term_c0.append(c0s)
    return base_c, base_c0, term_c, term_c0


def true_value_enum(problem: SumOfMaxProblem, x, *, cap: int = ENUM_CAP,
                    stop_above: Optional[float] = None) -> WorstCase:
    """Exact true value by enumerating all |J|^|I| assignments.

    Each assignment reduces to one affine maximization over the set
    (vectorized in chunks for closed-form sets). With stop_above, returns the
    first assignment (in lexicographic order) whose worst case exceeds the
    threshold, flagged non-optimal.
    """
    total = problem.assignment_count()
    if total > cap:
        raise EnumerationCapExceeded(
            f"{total} assignments exceed the cap {cap}; use true_value_milp")
    base_c, base_c0, term_c, term_c0 = _term_coefficients(problem, x)
    counts = [len(t) for t in problem.terms]
    n_terms = len(counts)

    best_val = -math.inf
    best_zeta = None
    best_assign = None
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        digits = np.array(np.unravel_index(idx, counts)).T  # (chunk, I), lexicographic
        coefs = np.tile(base_c, (idx.size, 1))
        consts = np.full(idx.size, base_c0)
        for i in range(n_terms):
            coefs += term_c[i][digits[:, i]]
            consts += term_c0[i][digits[:, i]]
        vals, Z = problem.uset.max_affine_batch(coefs, consts)
        if stop_above is not None:
            hits = np.flatnonzero(vals > stop_above)
            if hits.size:
                k = int(hits[0])
                return WorstCase(float(vals[k]), Z[k], tuple(int(v) for v in digits[k]),
                                 optimal=False)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_zeta = Z[k].copy()
            best_assign = tuple(int(v) for v in digits[k])
    if stop_above is not None and best_val <= stop_above:
        return WorstCase(best_val, best_zeta, best_assign, optimal=True)
    return WorstCase(best_val, best_zeta, best_assign)


def true_value_milp(problem: SumOfMaxProblem, x, *, stop_above: Optional[float] = None,
                    time_limit: Optional[float] = None) -> WorstCase:
    """Exact true value via the big-M integer formulation.

    Requires a set with a (lifted) linear representation; big-M constants are
    instance-scaled interval bounds over the set's bounding box plus 1 slack.
    With stop_above, any incumbent above the threshold is returned
    immediately, flagged non-optimal.
    """
    hrep = problem.uset.lifted_hrep()
    if hrep is None:
        raise UnsupportedSet(
            f"{problem.uset.kind} has no linear representation; use true_value_enum")
    P, Q, r = hrep
    L = problem.n_zeta
    n_u = Q.shape[1]
    base_c, base_c0, term_c, term_c0 = _term_coefficients(problem, x)
    lo, hi = problem.uset.bounding_box()

    def interval(c, c0):
        ub = c0 + np.sum(np.maximum(c * lo, c * hi))
        lb = c0 + np.sum(np.minimum(c * lo, c * hi))
        return lb, ub

    counts = [len(t) for t in problem.terms]
    n_i = len(counts)
    n_z = sum(counts)
    # variables: [zeta (L), u (n_u), y (n_i), z (n_z binaries)]
    n = L + n_u + n_i + n_z
    obj = np.zeros(n)
    obj[:L] = -base_c
    obj[L + n_u: L + n_u + n_i] = -1.0

    A_ub = []
    b_ub = []
    zoff = L + n_u + n_i
    pos = 0
    for i in range(n_i):
        ubs = [interval(term_c[i][j], term_c0[i][j])[1] for j in range(counts[i])]
        for j in range(counts[i]):
            lbj = interval(term_c[i][j], term_c0[i][j])[0]
            M = max(ubs) - lbj + 1.0
            row = np.zeros(n)
            row[:L] = -term_c[i][j]
            row[L + n_u + i] = 1.0
            row[zoff + pos + j] = M
            A_ub.append(row)
            b_ub.append(term_c0[i][j] + M)
        pos += counts[i]
    if P.shape[0]:
        blk = np.zeros((P.shape[0], n))
        blk[:, :L] = P
        blk[:, L:L + n_u] = Q
        A_ub.append(blk)
        b_ub.append(r)
    A_ub = np.vstack([np.atleast_2d(a) for a in A_ub])
    b_ub = np.concatenate([np.atleast_1d(b) for b in b_ub])

    A_eq = np.zeros((n_i, n))
    pos = 0
    for i in range(n_i):
        A_eq[i, zoff + pos: zoff + pos + counts[i]] = 1.0
        pos += counts[i]
    b_eq = np.ones(n_i)

    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    lb[:L] = lo
    ub[:L] = hi

    milp = MILP(LinearProgram(obj, A_ub, b_ub, A_eq, b_eq, lb, ub),
                list(range(zoff, zoff + n_z)))
    res = linsolve.solve_milp(
        milp, time_limit=time_limit,
        early_stop_below=None if stop_above is None else base_c0 - stop_above)
    if res.status != Status.OPTIMAL:
        raise OracleError(f"true-value MILP did not solve: {res.status}")
    value = base_c0 - res.value
    zeta = res.x[:L].copy()
    assign = []
    pos = 0
    for i in range(n_i):
        zvals = res.x[zoff + pos: zoff + pos + counts[i]]
        assign.append(int(np.argmax(zvals)))
        pos += counts[i]
    return WorstCase(value, zeta, tuple(assign), optimal=not res.flags)


def _abs_structure(problem: SumOfMaxProblem):
    """Detect |alpha_i(x) + beta_i(x).zeta| terms with pairwise-disjoint
    zeta supports over a sign-symmetric set centered at zero."""
    uset = problem.uset
    if isinstance(uset, (Box, Ellipsoid)):
        if np.any(uset.center != 0.0):
            return False
    else:
        return False
    seen = set()
    base_supp = set(problem.base.zeta_support().tolist())
    for term in problem.terms:
        if len(term) != 2:
            return False
        f, g = term
        scale = max(1.0, np.abs(f.zeta_linear).max(initial=0.0),
                    np.abs(f.cross).max(initial=0.0), abs(f.constant),
                    np.abs(f.x_linear).max(initial=0.0))
        if not (abs(f.constant + g.constant) <= 1e-12 * scale
                and np.allclose(f.x_linear, -g.x_linear, rtol=0, atol=1e-12 * scale)
                and np.allclose(f.zeta_linear, -g.zeta_linear, rtol=0, atol=1e-12 * scale)
                and np.allclose(f.cross, -g.cross, rtol=0, atol=1e-12 * scale)):
            return False
        supp = set(f.zeta_support().tolist()) | set(g.zeta_support().tolist())
        if supp & seen or supp & base_supp:
            return False
        seen |= supp
    return True


def true_value_struct(problem: SumOfMaxProblem, x) -> WorstCase:
    """Closed-form true value for sums of |affine| with disjoint supports over
    a sign-symmetric Box/Ellipsoid centered at zero: each absolute value is
    sign-aligned with the worst direction, so the maximum is
    sum_i |alpha_i| plus the set's support function of the aligned gradient.
    """
    if not _abs_structure(problem):
        raise OracleError("problem lacks the sign-symmetric |.| structure")
    base_c, base_c0, term_c, term_c0 = _term_coefficients(problem, x)
    alphas = np.array([c0[0] for c0 in term_c0])
    signs = np.where(alphas >= 0, 1.0, -1.0)
    v = base_c.copy()
    for i in range(len(problem.terms)):
        v += signs[i] * term_c[i][0]
    uset = problem.uset
    if isinstance(uset, Box):
        zeta = uset.radius * np.where(v < 0, -1.0, 1.0)
        value = base_c0 + float(np.abs(alphas).sum()) + uset.radius * float(np.abs(v).sum())
    else:
        nv = float(np.linalg.norm(v))
        zeta = uset.center.copy() if nv == 0 else uset.radius * v / nv
        value = base_c0 + float(np.abs(alphas).sum()) + uset.radius * nv
    assign = tuple(0 if term_c0[i][0] + term_c[i][0] @ zeta >= 0 else 1
                   for i in range(len(problem.terms)))
    check = evaluate_lhs(problem, zeta, x)
    if abs(check - value) > 1e-6 * (1.0 + abs(value)):
        raise OracleError("structured oracle self-check failed")
    return WorstCase(value, zeta, assign)


def true_value(problem: SumOfMaxProblem, x, *, oracle: str = "auto",
               cap: int = ENUM_CAP, stop_above: Optional[float] = None,
               time_limit: Optional[float] = None) -> WorstCase:
    """Dispatch to the cheapest applicable oracle.

    auto: closed-form structure when it applies, else enumeration within the
    cap, else the MILP for linear-representable sets.
    """
    if oracle == "struct":
        return true_value_struct(problem, x)
    if oracle == "enum":
        return true_value_enum(problem, x, cap=cap, stop_above=stop_above)
    if oracle == "milp":
        return true_value_milp(problem, x, stop_above=stop_above, time_limit=time_limit)
    if oracle != "auto":
        raise OracleError(f"unknown oracle {oracle!r}")
    if _abs_structure(problem):
        return true_value_struct(problem, x)
    if problem.assignment_count() <= cap:
        return true_value_enum(problem, x, cap=cap, stop_above=stop_above)
    if problem.uset.lifted_hrep() is not None:
        return true_value_milp(problem, x, stop_above=stop_above, time_limit=time_limit)
    raise EnumerationCapExceeded(
        "assignment count exceeds the cap and the set admits no MILP; "
        "reduce the instance or raise the cap")
