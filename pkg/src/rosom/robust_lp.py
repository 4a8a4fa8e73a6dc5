"""Solving RobustLPs: exact dualization and scenario-cut outer approximation.

Dualization replaces each robust row over a polyhedral set by its LP-duality
deterministic rows (split-variable l1 linearization for boxes, one multiplier
block per H-representation row otherwise). The scenario-cut loop works for
any set with a worst-case oracle: the master LP holds the sampled rows (one
per robust row at the set's nominal point initially), each round pessimizes
every robust row at the master optimum and adds all violated cuts, and the
loop stops when no violation exceeds the tolerance. Cut rounds warm-start
the master from the previous optimal basis (rows are only appended).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linsolve
from .linsolve import LinearProgram, LPResult, Status
from .reformulate import RobustLP
from .uncertainty import Box

MAX_CUTS = 10000
SAFETY_BOUND = 1e7


class RobustSolveError(Exception):
    pass


class NonPolyhedralError(RobustSolveError):
    """dualize() needs every robust row's set in (lifted) H-representation."""


@dataclass
class CutSolveResult:
    status: Status
    x: Optional[np.ndarray] = None
    value: float = np.nan           # value of the returned point
    lower_bound: float = np.nan     # final master optimum (relaxation value)
    rounds: int = 0
    n_cuts: int = 0
    cut_log: list = field(default_factory=list)  # (robust row index, zeta)
    master_values: list = field(default_factory=list)
    max_residual: float = np.nan
    iterations: int = 0
    flags: frozenset = frozenset()


class _RowGroup:
    """Robust rows sharing one uncertainty set, vectorized for pessimization."""

    def __init__(self, uset, indices, rows, n_vars):
        self.uset = uset
        self.indices = indices
        self.rows = rows
        m = len(rows)
        L = uset.dim
        self.const = np.array([r.form.constant for r in rows])
        # rows may predate later variables; pad with zero columns
        self.A = np.zeros((m, n_vars))
        self.C = np.zeros((m, L, n_vars))
        self.B = np.zeros((m, L))
        for k, r in enumerate(rows):
            w = r.form.n_x
            self.A[k, :w] = r.form.x_linear
            self.C[k, :, :w] = r.form.cross
            self.B[k] = r.form.zeta_linear
        self.has_cross = bool(np.abs(self.C).max(initial=0.0) > 0.0)

    def pessimize(self, v):
        """Worst-case values, maximizers, and the rows' deterministic parts.

        Reading each row as (zeta part)(zeta) <= rhs with
        rhs = -(const + a.v), the deterministic part is -rhs; the violation
        tolerance scales with 1 + |rhs|.
        """
        coef = self.B + (np.einsum("mln,n->ml", self.C, v) if self.has_cross else 0.0)
        const = self.const + self.A @ v
        vals, Z = self.uset.max_affine_batch(coef, const)
        return vals, Z, const

    def cut_row(self, k, zeta):
        """Linear row in the variables for robust row k fixed at zeta."""
        coef = self.A[k] + zeta @ self.C[k]
        coef[np.abs(coef) < 1e-20] = 0.0  # drop cancellation dust only
        rhs = -(self.const[k] + self.B[k] @ zeta)
        return coef, rhs


def _groups(rlp: RobustLP):
    by_set = {}
    for idx, row in enumerate(rlp.robust_rows):
        by_set.setdefault(id(row.uset), (row.uset, []))[1].append(idx)
    out = []
    for uset, indices in by_set.values():
        out.append(_RowGroup(uset, indices, [rlp.robust_rows[i] for i in indices],
                             rlp.n_vars))
    return out


class _CutState:
    """Master assembly shared by the cut loops."""

    def __init__(self, rlp: RobustLP):
        self.rlp = rlp
        self.A_det, self.b_det, E, f = rlp.det_matrices()
        self.E = E if E.size else None
        self.f = f if E.size else None
        self.lb, self.ub = rlp.bounds()
        self.c = rlp.objective_vector()
        self.groups = _groups(rlp)
        self.cut_rows = []
        self.cut_rhs = []
        self.cut_log = []   # active cuts, parallel to cut_rows
        self.full_log = []  # every cut ever added
        self.seen = set()
        self.total_added = 0
        self.warm = None
        self.values = []
        self.iterations = 0
        self.boxed = False
        self.lb_eff, self.ub_eff = self.lb, self.ub
        # seed each row at the nominal point, plus axis-extreme members when
        # the budget allows: bounds adjustable directions from round one
        n_rows = len(rlp.robust_rows)
        for g in self.groups:
            seeds = g.uset.seed_points()
            if n_rows * seeds.shape[0] > 6000:
                seeds = seeds[:1]
            for k in range(len(g.indices)):
                for z in seeds:
                    self.add_cut(g, k, z)

    def add_cut(self, group, k_local, zeta):
        ridx = group.indices[k_local]
        key = (ridx, np.round(zeta, 12).tobytes())
        if key in self.seen:
            return False
        self.seen.add(key)
        coef, rhs = group.cut_row(k_local, zeta)
        self.cut_rows.append(coef)
        self.cut_rhs.append(rhs)
        self.cut_log.append((ridx, zeta.copy()))
        self.full_log.append((ridx, zeta.copy()))
        self.total_added += 1
        return True

    def solve_master(self, cutoff_below=None):
        if self.cut_rows:
            A = np.vstack([self.A_det, np.vstack(self.cut_rows)])
            b = np.concatenate([self.b_det, np.asarray(self.cut_rhs)])
        else:
            A, b = self.A_det, self.b_det
        lp = LinearProgram(self.c, A, b, self.E, self.f, self.lb_eff, self.ub_eff)
        res = linsolve.solve_lp(lp, warm=self.warm, cutoff_below=cutoff_below)
        self.iterations += res.iterations
        if res.status == Status.UNBOUNDED and not self.boxed:
            # tighten with a slack safety box; cuts found under it stay valid
            self.boxed = True
            self.lb_eff = np.maximum(self.lb, -SAFETY_BOUND)
            self.ub_eff = np.minimum(self.ub, SAFETY_BOUND)
            self.warm = None
            return self.solve_master(cutoff_below)
        if res.status == Status.OPTIMAL:
            self.warm = res.basis
            self.values.append(res.value)
        return res

    def violations(self, v):
        """Per-group (vals, Z, relative tolerance scales) at the point v."""
        out = []
        for g in self.groups:
            vals, Z, det = g.pessimize(v)
            out.append((g, vals, Z, 1.0 + np.abs(det)))
        return out

    def guard_box(self, v):
        if self.boxed and np.any(np.abs(v) >= 0.99 * SAFETY_BOUND):
            raise RobustSolveError(
                "master optimum pinned at the safety box; problem unbounded?")


def scenario_cut_solve(rlp: RobustLP, tol: float = 1e-7,
                       max_cuts: int = MAX_CUTS,
                       cutoff_below: Optional[float] = None) -> CutSolveResult:
    """Outer approximation of the robust rows by scenario cuts.

    Per-row violation tolerance is tol * (1 + |rhs|) with the row read as
    (zeta part) <= rhs at the current point. When every robust row carries a
    relief variable (analysis variable or d), the stabilized in-out variant
    runs: query points between a repaired-feasible center and the master
    optimum, which converges far faster on smooth (ellipsoidal) rows and
    certifies the returned value by feasibility. Rows without relief (robust
    side constraints on x) use the plain Kelley loop, as does cutoff_below.
    """
    state = _CutState(rlp)
    if cutoff_below is None and _inout_applicable(rlp):
        return _inout_loop(rlp, state, tol, max_cuts)
    return _kelley_loop(rlp, state, tol, max_cuts, cutoff_below)


def _inout_applicable(rlp: RobustLP) -> bool:
    """The stabilized loop needs every robust row to carry a relief variable
    and the relief variables to be free of deterministic rows and bounds, so
    that exact completion keeps points feasible."""
    if not rlp.robust_rows:
        return False
    relief_vars = set()
    for r in rlp.robust_rows:
        if r.relief is None:
            return False
        relief_vars.add(r.relief)
    for pairs, _ in rlp.det_rows + rlp.eq_rows:
        for j, coef in pairs:
            if coef != 0.0 and j in relief_vars:
                return False
    lb, ub = rlp.bounds()
    for var in relief_vars:
        if np.isfinite(ub[var]):
            return False
    return True


def _repair(rlp: RobustLP, state: _CutState, v):
    """Exact feasible completion: set every relief variable to the worst case
    of its rows, level by level (epigraph variables first, then d). Returns
    the cheapest point sharing the non-relief coordinates of v."""
    v2 = v.copy()
    lb, ub = state.lb, state.ub
    levels = sorted({r.relief_level for r in rlp.robust_rows})
    for level in levels:
        level_vars = {r.relief for r in rlp.robust_rows if r.relief_level == level}
        for var in level_vars:
            v2[var] = 0.0
        best = dict.fromkeys(level_vars, -np.inf)
        for g, vals, _, _ in state.violations(v2):
            for k, ridx in enumerate(g.indices):
                row = rlp.robust_rows[ridx]
                if row.relief_level == level:
                    best[row.relief] = max(best[row.relief], float(vals[k]))
        for var, val in best.items():
            if np.isfinite(val):
                v2[var] = min(max(val, lb[var]), ub[var])
    return v2


def _inout_loop(rlp, state, tol, max_cuts):
    """Stabilized cut loop: a proximal (L1-regularized) master picks points
    near the certified center, which avoids burning rounds on the huge
    degenerate optimal faces the plain master has while the cut set is
    coarse; the plain master supplies the valid lower bound every few
    rounds. The returned point is feasible by exact completion, so its value
    is a certified upper bound and the gap to the master bound is the
    reported accuracy."""
    d_var = rlp.d_var
    n = rlp.n_vars
    s_best = None
    val_best = np.inf
    lb = -np.inf
    mu = None
    reg_warm = None
    rounds = 0
    eye = np.eye(n)
    reg_block = np.block([[eye, -eye], [-eye, -eye]])
    check_every = 2
    while True:
        rounds += 1
        need_lb = (rounds - 1) % check_every == 0 or s_best is None
        if need_lb:
            res = state.solve_master()
            if res.status != Status.OPTIMAL:
                return CutSolveResult(res.status, rounds=rounds,
                                      n_cuts=state.total_added,
                                      cut_log=state.full_log,
                                      master_values=state.values,
                                      iterations=state.iterations)
            lb = max(lb, res.value)
            v_plain = res.x
            state.guard_box(v_plain)
            if s_best is None:
                s_best = _repair(rlp, state, v_plain)
                val_best = float(s_best[d_var])
            else:
                rp = _repair(rlp, state, v_plain)
                if float(rp[d_var]) < val_best:
                    val_best = float(rp[d_var])
                    s_best = rp
        if val_best - lb <= tol * (1.0 + abs(val_best)):
            return CutSolveResult(Status.OPTIMAL, s_best, val_best, lb, rounds,
                                  state.total_added, state.full_log, state.values,
                                  0.0, state.iterations)

        # proximal master: min d + mu ||v - s||_1 over the same cut rows
        # (regularization rows first so appended cuts keep warm bases valid;
        # mu is fixed for the whole solve so the cost vector never changes,
        # and is kept well below the unit objective gradient on d)
        if mu is None:
            mu = max(1e-12, 1e-3 * (1.0 + abs(val_best)) / (2.0 * n))
        if state.cut_rows:
            A_cuts = np.vstack([state.A_det, np.vstack(state.cut_rows)])
            b_cuts = np.concatenate([state.b_det, np.asarray(state.cut_rhs)])
        else:
            A_cuts, b_cuts = state.A_det, state.b_det
        m0 = A_cuts.shape[0]
        Areg = np.vstack([reg_block,
                          np.hstack([A_cuts, np.zeros((m0, n))])])
        breg = np.concatenate([s_best, -s_best, b_cuts])
        creg = np.zeros(2 * n)
        creg[d_var] = 1.0
        creg[n:] = mu
        lpreg = LinearProgram(creg, Areg, breg,
                              A_eq=np.hstack([state.E, np.zeros((state.E.shape[0], n))])
                              if state.E is not None else None,
                              b_eq=state.f,
                              lb=np.concatenate([state.lb_eff, np.zeros(n)]),
                              ub=np.concatenate([state.ub_eff, np.full(n, np.inf)]))
        rreg = linsolve.solve_lp(lpreg, warm=reg_warm)
        state.iterations += rreg.iterations
        if rreg.status != Status.OPTIMAL:
            # fall back on the plain master point this round
            rreg = None
            reg_warm = None
            res = state.solve_master()
            if res.status != Status.OPTIMAL:
                return CutSolveResult(res.status, rounds=rounds,
                                      n_cuts=state.total_added,
                                      cut_log=state.full_log,
                                      master_values=state.values,
                                      iterations=state.iterations)
            lb = max(lb, res.value)
            v_q = res.x
        else:
            reg_warm = rreg.basis
            v_q = rreg.x[:n]

        added = 0
        for lam in (0.5, 1.0):
            q = s_best + lam * (v_q - s_best)
            for g, vals, Z, scales in state.violations(q):
                for k in range(len(g.indices)):
                    if vals[k] > tol * scales[k]:
                        if state.add_cut(g, k, Z[k]):
                            added += 1
            rq = _repair(rlp, state, q)
            if float(rq[d_var]) < val_best:
                val_best = float(rq[d_var])
                s_best = rq
        if added == 0:
            # query region feasible: force an LB refresh; if the gap is still
            # open the next plain master round will generate fresh cuts
            res = state.solve_master()
            if res.status == Status.OPTIMAL:
                lb = max(lb, res.value)
                rp = _repair(rlp, state, res.x)
                if float(rp[d_var]) < val_best:
                    val_best = float(rp[d_var])
                    s_best = rp
                for g, vals, Z, scales in state.violations(res.x):
                    for k in range(len(g.indices)):
                        if vals[k] > tol * scales[k]:
                            if state.add_cut(g, k, Z[k]):
                                added += 1
            if added == 0:
                return CutSolveResult(Status.OPTIMAL, s_best, val_best, lb, rounds,
                                      state.total_added, state.full_log,
                                      state.values, 0.0, state.iterations,
                                      flags=frozenset(["gap"]))
        if state.total_added > max_cuts:
            raise RobustSolveError(f"cut budget {max_cuts} exceeded")


def _kelley_loop(rlp, state, tol, max_cuts, cutoff_below):
    n_robust = len(rlp.robust_rows)
    cut_born = [0] * len(state.cut_rows)
    cut_active = [0] * len(state.cut_rows)
    rounds = 0
    while True:
        rounds += 1
        n_before = len(state.cut_rows)
        res = state.solve_master(cutoff_below)
        if res.status != Status.OPTIMAL:
            return CutSolveResult(res.status, rounds=rounds, n_cuts=state.total_added,
                                  cut_log=state.full_log, master_values=state.values,
                                  iterations=state.iterations)
        v = res.x
        state.guard_box(v)
        if n_before:
            rows = np.vstack(state.cut_rows[:n_before])
            rhs = np.asarray(state.cut_rhs[:n_before])
            slack = rhs - rows @ v
            tight = slack <= 1e-7 * (1.0 + np.abs(rhs))
            for k in np.flatnonzero(tight):
                cut_active[k] = rounds
        worst = 0.0
        added = 0
        blocked = 0
        for g, vals, Z, scales in state.violations(v):
            tols = tol * scales
            for k in range(len(g.indices)):
                worst = max(worst, float(vals[k] / scales[k]))
                if vals[k] > tols[k]:
                    if state.add_cut(g, k, Z[k]):
                        added += 1
                    else:
                        blocked += 1
        cut_born.extend([rounds] * (len(state.cut_rows) - n_before))
        cut_active.extend([rounds] * (len(state.cut_rows) - n_before))
        if added == 0:
            if blocked:
                raise RobustSolveError(
                    f"cut loop stalled with relative residual {worst:.3e} "
                    f"on {blocked} rows")
            return CutSolveResult(Status.OPTIMAL, v, res.value, res.value, rounds,
                                  state.total_added, state.full_log, state.values,
                                  worst, state.iterations, flags=res.flags)
        if state.total_added > max_cuts:
            raise RobustSolveError(f"cut budget {max_cuts} exceeded")

        # bundle hygiene: long-slack cuts leave the master (and may re-enter);
        # keeps it small and the basis well conditioned near convergence
        if len(state.cut_rows) > max(120, 4 * n_robust) and rounds % 4 == 0:
            keep = [k for k in range(len(state.cut_rows))
                    if rounds - cut_active[k] < 4 or rounds - cut_born[k] < 2]
            if len(keep) < len(state.cut_rows):
                dropped = set(range(len(state.cut_rows))) - set(keep)
                for k in dropped:
                    key = (state.cut_log[k][0],
                           np.round(state.cut_log[k][1], 12).tobytes())
                    state.seen.discard(key)
                state.cut_rows = [state.cut_rows[k] for k in keep]
                state.cut_rhs = [state.cut_rhs[k] for k in keep]
                state.cut_log = [state.cut_log[k] for k in keep]
                cut_born = [cut_born[k] for k in keep]
                cut_active = [cut_active[k] for k in keep]
                state.warm = None


def dualize(rlp: RobustLP) -> tuple:
    """Deterministic LP equivalent of the RobustLP via row-wise duality.

    Returns (LinearProgram, var_names); the first rlp.n_vars variables are
    the original ones. Box rows use the explicit split-variable l1
    linearization; every other set must expose a lifted H-representation.
    """
    n0 = rlp.n_vars
    names = list(rlp.var_names)
    cols = n0
    det_rows = []  # (pairs, rhs)
    eq_rows = []
    for pairs, rhs in rlp.det_rows:
        det_rows.append((list(pairs), rhs))
    for pairs, rhs in rlp.eq_rows:
        eq_rows.append((list(pairs), rhs))

    for ridx, row in enumerate(rlp.robust_rows):
        form = row.form
        uset = row.uset
        L = uset.dim
        a = form.x_linear
        bz = form.zeta_linear
        C = form.cross
        if isinstance(uset, Box):
            t0 = cols
            for l in range(L):
                names.append(f"t[{ridx}][{l}]")
            cols += L
            ctr, rho = uset.center, uset.radius
            main = [(j, c) for j, c in enumerate(a + C.T @ ctr) if c != 0.0]
            main += [(t0 + l, rho) for l in range(L)]
            det_rows.append((main, -form.constant - float(bz @ ctr)))
            for l in range(L):
                cpairs = [(j, c) for j, c in enumerate(C[l]) if c != 0.0]
                det_rows.append((cpairs + [(t0 + l, -1.0)], -bz[l]))
                cpairs = [(j, -c) for j, c in enumerate(C[l]) if c != 0.0]
                det_rows.append((cpairs + [(t0 + l, -1.0)], bz[l]))
        else:
            hrep = uset.lifted_hrep()
            if hrep is None:
                raise NonPolyhedralError(
                    f"robust row {ridx} has a non-polyhedral set ({uset.kind}); "
                    "use scenario_cut_solve")
            P, Q, r = hrep
            mh = P.shape[0]
            lam0 = cols
            for k in range(mh):
                names.append(f"lam[{ridx}][{k}]")
            cols += mh
            # max over the set of (bz + C v).zeta = min r.lam
            #   s.t. P^T lam = bz + C v, Q^T lam = 0, lam >= 0
            main = [(j, c) for j, c in enumerate(a) if c != 0.0]
            main += [(lam0 + k, rk) for k, rk in enumerate(r) if rk != 0.0]
            det_rows.append((main, -form.constant))
            for l in range(L):
                pairs = [(lam0 + k, P[k, l]) for k in range(mh) if P[k, l] != 0.0]
                pairs += [(j, -C[l, j]) for j in range(n0) if C[l, j] != 0.0]
                eq_rows.append((pairs, bz[l]))
            for u in range(Q.shape[1]):
                pairs = [(lam0 + k, Q[k, u]) for k in range(mh) if Q[k, u] != 0.0]
                eq_rows.append((pairs, 0.0))

    lbv = np.full(cols, -np.inf)
    ubv = np.full(cols, np.inf)
    lb0, ub0 = rlp.bounds()
    lbv[:n0] = lb0
    ubv[:n0] = ub0
    lbv[n0:] = np.where([nm.startswith("lam") for nm in names[n0:]], 0.0, -np.inf)

    A = np.zeros((len(det_rows), cols))
    b = np.zeros(len(det_rows))
    for i, (pairs, rhs) in enumerate(det_rows):
        for j, cv in pairs:
            A[i, j] += cv
        b[i] = rhs
    Em = np.zeros((len(eq_rows), cols))
    fm = np.zeros(len(eq_rows))
    for i, (pairs, rhs) in enumerate(eq_rows):
        for j, cv in pairs:
            Em[i, j] += cv
        fm[i] = rhs
    cv = np.zeros(cols)
    cv[rlp.d_var] = 1.0
    lp = LinearProgram(cv, A if len(det_rows) else None, b if len(det_rows) else None,
                       Em if len(eq_rows) else None, fm if len(eq_rows) else None,
                       lbv, ubv)
    return lp, names


def solve_dualized(rlp: RobustLP) -> LPResult:
    lp, _ = dualize(rlp)
    return linsolve.solve_lp(lp)


def solve_robust(rlp: RobustLP, via: str = "cuts", tol: float = 1e-7,
                 max_cuts: int = MAX_CUTS) -> CutSolveResult:
    """Uniform entry point: via in {"cuts", "dual", "auto"}.

    auto prefers dualization when every robust set is polyhedral and the
    multiplier blocks stay small, else scenario cuts.
    """
    if via == "auto":
        extras = 0
        polyhedral = True
        for row in rlp.robust_rows:
            hrep = None if isinstance(row.uset, Box) else row.uset.lifted_hrep()
            if isinstance(row.uset, Box):
                extras += row.uset.dim
            elif hrep is not None:
                extras += hrep[0].shape[0]
            else:
                polyhedral = False
                break
        via = "dual" if polyhedral and extras <= 20000 else "cuts"
    if via == "dual":
        res = solve_dualized(rlp)
        return CutSolveResult(res.status, res.x[: rlp.n_vars] if res.x is not None else None,
                              res.value, rounds=1, iterations=res.iterations)
    if via != "cuts":
        raise ValueError(f"unknown strategy {via!r}")
    return scenario_cut_solve(rlp, tol=tol, max_cuts=max_cuts)
