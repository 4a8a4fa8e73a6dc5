"""Internal dense LP solver and branch-and-bound MILP solver.

Every other module funnels its optimization through here; there is no
external solver dependency. The LP path is a two-phase revised primal
simplex over a standard-form problem (min c.z, Az = b, z >= 0) with a dense
basis inverse. The pivot loop is the hot kernel: a compiled Cython version
is preferred and a numpy fallback is selected at import time (set
ROSOM_PURE_PYTHON=1 to force the fallback).

Row-heavy problems (many more rows than variables, as produced by cut
generation) are transparently solved through their explicit LP dual, which
keeps the basis at the size of the variable count and makes warm starts
across appended-row rounds cheap: appended primal rows are appended dual
columns, so the previous optimal basis stays valid.

Tolerances stated here are inherited by all modules: feasibility 1e-8,
integrality 1e-6.
"""

import heapq
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

if os.environ.get("ROSOM_PURE_PYTHON"):
    from . import _simplex_impl as _kernel

    KERNEL_NAME = "python"
else:
    try:
        from . import _simplex_cy as _kernel  # type: ignore[attr-defined]

        KERNEL_NAME = "cython"
    except ImportError:
        from . import _simplex_impl as _kernel

        KERNEL_NAME = "python"

FEAS_TOL = 1e-8
INT_TOL = 1e-6
RC_TOL = 1e-9
DEGEN_LIMIT = 60
REFACTOR_EVERY = 400

_DANTZIG = 0
_BLAND = 1


def kernel_name() -> str:
    """Which pivot kernel was selected at import ("cython" or "python")."""
    return KERNEL_NAME


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LinSolveError(Exception):
    """Internal solver failure (cycling guard or numerical breakdown)."""


def _as_matrix(a, n):
    if a is None:
        return np.zeros((0, n))
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    return a


def _as_vec(b, m):
    if b is None:
        return np.zeros(m)
    return np.asarray(b, dtype=float).reshape(-1)


@dataclass
class LinearProgram:
    """min c.v  s.t.  A_ub v <= b_ub,  A_eq v = f,  lb <= v <= ub."""

    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A_ub = _as_matrix(self.A_ub, n)
        self.b_ub = _as_vec(self.b_ub, self.A_ub.shape[0])
        self.A_eq = _as_matrix(self.A_eq, n)
        self.b_eq = _as_vec(self.b_eq, self.A_eq.shape[0])
        self.lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float).reshape(-1).copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).reshape(-1).copy()
        if self.A_ub.shape != (self.b_ub.size, n) or self.A_eq.shape != (self.b_eq.size, n):
            raise ValueError("inconsistent LP dimensions")
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("inconsistent bound dimensions")
        for arr in (self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise ValueError("bounds must not be NaN")

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class WarmBasis:
    routing: str
    key: tuple
    basis_enc: np.ndarray  # structural column index, or -(row+1) for artificials
    binv: np.ndarray
    row_scale: Optional[np.ndarray] = None


@dataclass
class LPResult:
    status: Status
    x: Optional[np.ndarray] = None
    value: float = np.nan
    dual_ub: Optional[np.ndarray] = None
    dual_eq: Optional[np.ndarray] = None
    dual_objective: float = np.nan
    iterations: int = 0
    basis: Optional[WarmBasis] = None
    flags: frozenset = frozenset()


class _Core:
    """Two-phase simplex on standard form min cs.z, As z = bs (>=0), z >= 0.

    Rows are equilibrated (scaled by their max absolute entry) for pivot
    stability; row_factor folds the scaling and the sign normalization so
    duals of the unscaled rows are y_std * row_factor.
    """

    def __init__(self, As, bs, cs, max_pivots=None, row_scale=None):
        self.m, self.n_struct = As.shape
        if row_scale is None:
            mags = np.abs(As).max(axis=1, initial=0.0)
            row_scale = 1.0 / np.maximum(mags, 1e-8)
            row_scale = np.minimum(row_scale, 1e8)
        self.row_scale = row_scale
        As = As * row_scale[:, None]
        bs = np.asarray(bs, dtype=float) * row_scale
        # artificial identity block lives in the same matrix; phase masks pick
        self.A = np.ascontiguousarray(np.hstack([As, np.eye(self.m)]))
        flip = bs < 0
        if flip.any():
            self.A[flip, : self.n_struct] *= -1.0
        self.row_sign = np.where(flip, -1.0, 1.0)
        self.row_factor = self.row_sign * row_scale
        self.bs_true = np.abs(bs)
        # deterministic rhs perturbation breaks degenerate ties (removed for
        # the reported solution after the final factorization)
        u = np.random.Generator(np.random.PCG64(0x5EED)).uniform(0.5, 1.5, self.m)
        self._pert_unit = u * (1.0 + self.bs_true)
        self.set_perturbation(1e-9)
        self.cs = np.concatenate([cs, np.zeros(self.m)])
        self.tol_rc = RC_TOL * (1.0 + np.abs(cs).max(initial=0.0))
        self.tol_piv = 1e-9
        self.max_pivots = max_pivots or (200 * (self.m + self.n_struct) + 20000)
        self.pivots = 0

    def set_perturbation(self, scale):
        self._pert_scale = scale
        self.bs = self.bs_true + scale * self._pert_unit

    def _refactor(self, basis):
        B = self.A[:, basis]
        try:
            binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise LinSolveError("singular basis during refactorization") from exc
        xB = binv @ self.bs
        if xB.min(initial=0.0) < -1e-6 * (1.0 + self.bs.max(initial=0.0)):
            raise LinSolveError("basis lost primal feasibility")
        np.maximum(xB, 0.0, out=xB)
        return binv, xB

    def _run(self, cost, allowed, basis, binv, xB, cutoff=None, pricing=_DANTZIG,
             refactor_every=REFACTOR_EVERY):
        use_cut = cutoff is not None
        cut = cutoff if use_cut else 0.0
        since_refactor = 0
        while True:
            budget = min(refactor_every - since_refactor, self.max_pivots - self.pivots)
            if budget <= 0:
                if self.pivots >= self.max_pivots:
                    raise LinSolveError("cycling guard exceeded")
                binv, xB = self._refactor(basis)
                since_refactor = 0
                continue
            code, k = _kernel.pivot_block(
                self.A, cost, allowed, binv, basis, xB, budget, pricing,
                self.tol_rc, self.tol_piv, cut, use_cut, DEGEN_LIMIT)
            self.pivots += k
            since_refactor += k
            if code == 3:
                pricing = _BLAND
                binv, xB = self._refactor(basis)
                since_refactor = 0
                continue
            if code == 2:
                continue
            if code == 0 and since_refactor > 0:
                # confirm optimality on a fresh factorization
                binv, xB = self._refactor(basis)
                since_refactor = 0
                code2, k2 = _kernel.pivot_block(
                    self.A, cost, allowed, binv, basis, xB, 2, pricing,
                    self.tol_rc, self.tol_piv, cut, use_cut, DEGEN_LIMIT)
                self.pivots += k2
                since_refactor += k2
                if k2 > 0 or code2 != 0:
                    continue
            return code, basis, binv, xB

    def solve(self, warm_basis=None, warm_binv=None, cutoff=None):
        """Returns (code, basis, binv, xB); code 0 optimal, 1 unbounded, 4 cutoff.

        For code 0 the returned xB is the basic solution for the true
        (unperturbed) rhs; if removing the perturbation breaks feasibility,
        the solve repeats with a smaller perturbation.
        """
        for attempt in range(4):
            try:
                code, basis, binv, xB = self._solve_once(
                    warm_basis, warm_binv, cutoff, _DANTZIG, REFACTOR_EVERY)
            except LinSolveError:
                if warm_basis is not None:
                    raise  # caller falls back to a cold solve
                self.pivots = 0
                code, basis, binv, xB = self._solve_once(
                    None, None, cutoff, _BLAND, 60)
            if code != 0:
                return code, basis, binv, xB
            x_true = binv @ self.bs_true
            if x_true.min(initial=0.0) >= -1e-7 * (1.0 + self.bs_true.max(initial=0.0)):
                np.maximum(x_true, 0.0, out=x_true)
                return code, basis, binv, x_true
            if warm_basis is not None:
                raise LinSolveError("warm basis infeasible for the true rhs")
            self.set_perturbation(self._pert_scale * 1e-3)
            self.pivots = 0
        raise LinSolveError("perturbation removal failed repeatedly")

    def _solve_once(self, warm_basis, warm_binv, cutoff, pricing, refactor_every):
        n, m = self.n_struct, self.m
        allowed = np.zeros(n + m, dtype=np.uint8)
        allowed[:n] = 1
        if warm_basis is not None:
            basis = warm_basis.copy()
            if warm_binv is not None:
                binv = warm_binv.copy()
                xB = binv @ self.bs
                if xB.min(initial=0.0) < -1e-7 * (1.0 + self.bs.max(initial=0.0)):
                    binv, xB = self._refactor(basis)
                else:
                    np.maximum(xB, 0.0, out=xB)
            else:
                binv, xB = self._refactor(basis)
            return self._run(self.cs, allowed, basis, binv, xB, cutoff=cutoff,
                             pricing=pricing, refactor_every=refactor_every)

        # phase I: artificial basis
        basis = np.arange(n, n + m, dtype=np.int64)
        binv = np.eye(m)
        xB = self.bs.copy()
        cost1 = np.zeros(n + m)
        cost1[n:] = 1.0
        code, basis, binv, xB = self._run(cost1, allowed, basis, binv, xB,
                                          pricing=pricing, refactor_every=refactor_every)
        if code == 1:
            raise LinSolveError("phase I reported unbounded")
        infeas = cost1[basis] @ xB
        if infeas > FEAS_TOL * (1.0 + np.abs(self.bs).sum()):
            return -1, basis, binv, xB  # infeasible
        self._drive_out_artificials(basis, binv, xB)
        return self._run(self.cs, allowed, basis, binv, xB, cutoff=cutoff,
                         pricing=pricing, refactor_every=refactor_every)

    def _drive_out_artificials(self, basis, binv, xB):
        n = self.n_struct
        in_basis = set(basis.tolist())
        for i in range(self.m):
            if basis[i] < n:
                continue
            xB[i] = 0.0
            row = binv[i] @ self.A[:, :n]
            cands = np.flatnonzero(np.abs(row) > 1e-9)
            q = next((int(j) for j in cands if int(j) not in in_basis), None)
            if q is None:
                continue  # redundant row; artificial stays basic at zero
            d = binv @ self.A[:, q]
            dp = d[i]
            brow = binv[i] / dp
            binv -= np.outer(d, brow)
            binv[i] = brow
            in_basis.discard(int(basis[i]))
            in_basis.add(q)
            basis[i] = q  # xB unchanged: the leaving artificial sits at zero


def _encode_basis(basis, n_struct):
    enc = basis.astype(np.int64).copy()
    art = enc >= n_struct
    enc[art] = -(enc[art] - n_struct + 1)
    return enc


def _decode_basis(enc, n_struct):
    dec = enc.copy()
    art = dec < 0
    dec[art] = n_struct + (-dec[art] - 1)
    return dec


# ---------------------------------------------------------------------------
# primal (direct) routing


class _PrimalForm:
    def __init__(self, lp: LinearProgram):
        n = lp.n
        cols = []  # per original var: ("shift", lo) | ("neg", ub) | ("split",)
        self.lp = lp
        G = [lp.A_ub]
        h = [lp.b_ub.copy()]
        extra_rows = []
        extra_rhs = []
        col_coef = []
        cs = []
        self.shift_const = 0.0
        for j in range(n):
            lo, hi = lp.lb[j], lp.ub[j]
            if np.isfinite(lo):
                cols.append(("shift", lo))
                cs.append(lp.c[j])
                self.shift_const += lp.c[j] * lo
                col_coef.append(1.0)
                if np.isfinite(hi):
                    r = np.zeros(n)
                    r[j] = 1.0
                    extra_rows.append(r)
                    extra_rhs.append(hi)
            elif np.isfinite(hi):
                cols.append(("neg", hi))
                cs.append(-lp.c[j])
                self.shift_const += lp.c[j] * hi
                col_coef.append(-1.0)
            else:
                cols.append(("split",))
                cs.append(lp.c[j])
                cs.append(-lp.c[j])
                col_coef.append(None)
        self.cols = cols

        m_ub = lp.A_ub.shape[0]
        G_all = np.vstack([lp.A_ub] + ([np.vstack(extra_rows)] if extra_rows else []))
        h_all = np.concatenate([lp.b_ub, np.asarray(extra_rhs)]) if extra_rhs else lp.b_ub.copy()
        self.m_ub_orig = m_ub
        m1 = G_all.shape[0]
        m2 = lp.A_eq.shape[0]

        # rewrite rows in z coordinates
        def to_z(M):
            out = []
            for j, spec in enumerate(cols):
                if spec[0] == "split":
                    out.append(M[:, j])
                    out.append(-M[:, j])
                elif spec[0] == "neg":
                    out.append(-M[:, j])
                else:
                    out.append(M[:, j])
            return np.column_stack(out) if out else np.zeros((M.shape[0], 0))

        # rhs adjustment: subtract contribution of fixed offsets
        off_v = np.array([spec[1] if spec[0] != "split" else 0.0 for spec in cols])
        hz = h_all - G_all @ off_v
        fz = lp.b_eq - lp.A_eq @ off_v
        Gz = to_z(G_all)
        Ez = to_z(lp.A_eq)
        n_z = len(cs)
        slack = np.vstack([np.eye(m1), np.zeros((m2, m1))]) if m1 else np.zeros((m1 + m2, 0))
        As = np.hstack([np.vstack([Gz, Ez]) if (m1 + m2) else np.zeros((0, n_z)), slack])
        bs = np.concatenate([hz, fz])
        cs_full = np.concatenate([np.asarray(cs), np.zeros(m1)])
        self.G_all, self.h_all = G_all, h_all
        self.m1, self.m2 = m1, m2
        self.n_struct_z = len(cs)
        self.core = _Core(As, bs, cs_full)

    def extract(self, basis, binv, xB):
        z = np.zeros(self.core.n_struct)
        for i, bcol in enumerate(basis):
            if bcol < self.core.n_struct:
                z[bcol] = xB[i]
        v = np.zeros(self.lp.n)
        k = 0
        for j, spec in enumerate(self.cols):
            if spec[0] == "split":
                v[j] = z[k] - z[k + 1]
                k += 2
            elif spec[0] == "neg":
                v[j] = spec[1] - z[k]
                k += 1
            else:
                v[j] = spec[1] + z[k]
                k += 1
        y = self.core.cs[basis] @ binv
        y_rows = y * self.core.row_factor
        lam_all = np.maximum(0.0, -y_rows[: self.m1])
        mu = -y_rows[self.m1 : self.m1 + self.m2]
        value = float(self.lp.c @ v)
        dual_obj = float(-self.h_all @ lam_all - self.lp.b_eq @ mu + self._bound_terms(basis, binv))
        return v, value, lam_all[: self.m_ub_orig], mu, dual_obj

    def _bound_terms(self, basis, binv):
        y = self.core.cs[basis] @ binv
        rc = self.core.cs - y @ self.core.A
        total = 0.0
        k = 0
        for spec in self.cols:
            if spec[0] == "split":
                k += 2
            elif spec[0] == "neg":
                total -= spec[1] * max(0.0, rc[k])
                k += 1
            else:
                total += spec[1] * max(0.0, rc[k])
                k += 1
        return total


# ---------------------------------------------------------------------------
# dual routing (row-heavy LPs)


class _DualForm:
    """Solves min c.v, Gv <= h, Ev = f (bounds absorbed into G) via its dual.

    min-form dual: min h.lam + f.mu  s.t.  G^T lam + E^T mu = -c, lam >= 0.
    Columns are ordered [mu+, mu-, lam_bounds, lam_ub_rows...] so appending
    rows to A_ub appends lam columns at the end, keeping warm bases valid
    across cut rounds as long as bounds and equalities are unchanged.
    """

    def __init__(self, lp: LinearProgram, row_scale=None):
        self.lp = lp
        n = lp.n
        bound_rows = []
        bound_rhs = []
        for j in range(n):
            if np.isfinite(lp.ub[j]):
                r = np.zeros(n)
                r[j] = 1.0
                bound_rows.append(r)
                bound_rhs.append(lp.ub[j])
            if np.isfinite(lp.lb[j]):
                r = np.zeros(n)
                r[j] = -1.0
                bound_rows.append(r)
                bound_rhs.append(-lp.lb[j])
        nb = len(bound_rows)
        G = np.vstack(([np.vstack(bound_rows)] if bound_rows else []) + [lp.A_ub])
        h = np.concatenate([np.asarray(bound_rhs), lp.b_ub]) if bound_rhs else lp.b_ub.copy()
        self.G, self.h = G, h
        self.n_bound = nb
        self.m1 = G.shape[0]
        self.m2 = lp.A_eq.shape[0]
        E = lp.A_eq
        blocks = []
        cost = []
        if self.m2:
            blocks += [E.T, -E.T]
            cost += [lp.b_eq, -lp.b_eq]
        blocks.append(G.T)
        cost.append(h)
        As = np.hstack(blocks)
        cs = np.concatenate(cost)
        bs = -lp.c
        self.core = _Core(As, bs, cs, row_scale=row_scale)
        self.key = (n, self.m2, nb,
                    hash((lp.lb.tobytes(), lp.ub.tobytes(), lp.b_eq.tobytes())))

    def extract(self, basis, binv, xB):
        w = np.zeros(self.core.n_struct)
        for i, bcol in enumerate(basis):
            if bcol < self.core.n_struct:
                w[bcol] = xB[i]
        mu = (w[: self.m2] - w[self.m2 : 2 * self.m2]) if self.m2 else np.zeros(0)
        lam = w[2 * self.m2 :]
        y = self.core.cs[basis] @ binv
        v = y * self.core.row_factor
        value = float(self.lp.c @ v)
        dual_obj = float(-self.h @ lam - self.lp.b_eq @ mu)
        lam_orig = lam[self.n_bound:]
        return v, value, lam_orig, mu, dual_obj


def _residuals(lp: LinearProgram, v):
    res = 0.0
    if lp.A_ub.shape[0]:
        res = max(res, float(np.max(lp.A_ub @ v - lp.b_ub, initial=0.0)))
    if lp.A_eq.shape[0]:
        res = max(res, float(np.max(np.abs(lp.A_eq @ v - lp.b_eq), initial=0.0)))
    res = max(res, float(np.max(lp.lb - v, initial=0.0)))
    res = max(res, float(np.max(v - lp.ub, initial=0.0)))
    return res


def _rhs_scale(lp: LinearProgram):
    parts = [np.abs(lp.b_ub).max(initial=0.0), np.abs(lp.b_eq).max(initial=0.0)]
    fin = lp.lb[np.isfinite(lp.lb)]
    if fin.size:
        parts.append(np.abs(fin).max())
    fin = lp.ub[np.isfinite(lp.ub)]
    if fin.size:
        parts.append(np.abs(fin).max())
    return max(parts)


def _want_dual(lp: LinearProgram) -> bool:
    n = lp.n
    m = lp.A_ub.shape[0] + lp.A_eq.shape[0] + int(np.isfinite(lp.lb).sum()) + int(np.isfinite(lp.ub).sum())
    return m > 2 * n + 60


def solve_lp(lp: LinearProgram, *, warm: Optional[WarmBasis] = None,
             cutoff_below: Optional[float] = None,
             routing: Optional[str] = None) -> LPResult:
    """Solve the LP; deterministic for fixed input.

    warm: a WarmBasis from a previous solve of the same LP with (possibly)
    rows appended to A_ub; honored only for dual routing.
    cutoff_below: stop phase II early once a feasible point with objective
    below this value is found (result flagged "cutoff"); forces primal
    routing since intermediate dual iterates are not primal feasible.
    """
    if routing is None:
        if cutoff_below is not None:
            routing = "primal"
        elif warm is not None and warm.routing == "dual":
            routing = "dual"
        else:
            routing = "dual" if _want_dual(lp) else "primal"

    if routing == "dual":
        return _solve_dual_routed(lp, warm)
    return _solve_primal_routed(lp, cutoff_below)


def _solve_primal_routed(lp: LinearProgram, cutoff_below) -> LPResult:
    form = _PrimalForm(lp)
    cut = None
    if cutoff_below is not None:
        cut = cutoff_below - form.shift_const
    code, basis, binv, xB = form.core.solve(cutoff=cut)
    if code == -1:
        return LPResult(Status.INFEASIBLE, iterations=form.core.pivots)
    if code == 1:
        return LPResult(Status.UNBOUNDED, iterations=form.core.pivots)
    v, value, lam, mu, dual_obj = form.extract(basis, binv, xB)
    flags = frozenset(["cutoff"]) if code == 4 else frozenset()
    res = _residuals(lp, v)
    if res > 1e-6 * (1.0 + _rhs_scale(lp)):
        raise LinSolveError(f"primal residual {res:.3e} exceeds tolerance")
    return LPResult(Status.OPTIMAL, v, value, lam, mu, dual_obj,
                    iterations=form.core.pivots, flags=flags)


def _solve_dual_routed(lp: LinearProgram, warm, probe_ok=True) -> LPResult:
    scale = warm.row_scale if (warm is not None and warm.routing == "dual") else None
    form = _DualForm(lp, row_scale=scale)
    wb = None
    wbinv = None
    if warm is not None and warm.routing == "dual" and warm.key == form.key:
        dec = _decode_basis(warm.basis_enc, form.core.n_struct)
        if dec.max(initial=-1) < form.core.n_struct + form.core.m:
            wb = dec
            wbinv = warm.binv
    try:
        code, basis, binv, xB = form.core.solve(warm_basis=wb, warm_binv=wbinv)
    except LinSolveError:
        if wb is None:
            raise
        form = _DualForm(lp)
        code, basis, binv, xB = form.core.solve()
    if code == 1:
        # dual unbounded below -> primal infeasible
        return LPResult(Status.INFEASIBLE, iterations=form.core.pivots)
    if code == -1:
        # dual infeasible -> primal unbounded or infeasible; probe feasibility
        if not probe_ok:
            raise LinSolveError("feasibility probe recursed")
        feasible = _primal_feasible_probe(lp)
        st = Status.UNBOUNDED if feasible else Status.INFEASIBLE
        return LPResult(st, iterations=form.core.pivots)
    v, value, lam, mu, dual_obj = form.extract(basis, binv, xB)
    res = _residuals(lp, v)
    if res > 1e-6 * (1.0 + _rhs_scale(lp)):
        # numerical trouble in the dual route; fall back to the direct path
        return _solve_primal_routed(lp, None)
    token = WarmBasis("dual", form.key, _encode_basis(basis, form.core.n_struct),
                      binv.copy(), form.core.row_scale)
    return LPResult(Status.OPTIMAL, v, value, lam, mu, dual_obj,
                    iterations=form.core.pivots, basis=token)


def _primal_feasible_probe(lp: LinearProgram) -> bool:
    n = lp.n
    bound_rows = []
    bound_rhs = []
    for j in range(n):
        if np.isfinite(lp.ub[j]):
            r = np.zeros(n)
            r[j] = 1.0
            bound_rows.append(r)
            bound_rhs.append(lp.ub[j])
        if np.isfinite(lp.lb[j]):
            r = np.zeros(n)
            r[j] = -1.0
            bound_rows.append(r)
            bound_rhs.append(-lp.lb[j])
    G = np.vstack([lp.A_ub] + ([np.vstack(bound_rows)] if bound_rows else []) +
                  ([lp.A_eq, -lp.A_eq] if lp.A_eq.shape[0] else []))
    h = np.concatenate([lp.b_ub] + ([np.asarray(bound_rhs)] if bound_rhs else []) +
                       ([lp.b_eq, -lp.b_eq] if lp.A_eq.shape[0] else []))
    if G.shape[0] == 0:
        return True
    # min t  s.t.  Gv - t <= h, t >= 0; feasible iff min t == 0
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A = np.hstack([G, -np.ones((G.shape[0], 1))])
    lbp = np.full(n + 1, -np.inf)
    lbp[-1] = 0.0
    probe = LinearProgram(c, A_ub=A, b_ub=h, lb=lbp)
    res = _solve_dual_routed(probe, None, probe_ok=False)
    if res.status != Status.OPTIMAL:
        raise LinSolveError("feasibility probe did not solve")
    return res.value <= 1e-7 * (1.0 + _rhs_scale(lp))


# ---------------------------------------------------------------------------
# MILP: branch and bound on binary variables


@dataclass
class MILP:
    lp: LinearProgram
    binaries: list

    def __post_init__(self):
        n = self.lp.n
        for j in self.binaries:
            if not 0 <= j < n:
                raise ValueError("binary index out of range")
        self.binaries = list(self.binaries)


@dataclass
class MILPResult:
    status: Status
    x: Optional[np.ndarray] = None
    value: float = np.nan
    bound: float = np.nan
    nodes: int = 0
    flags: frozenset = frozenset()


def solve_milp(milp: MILP, *, gap_tol: float = 1e-7,
               time_limit: Optional[float] = None,
               early_stop_below: Optional[float] = None) -> MILPResult:
    """Best-bound branch and bound, branching on the most fractional binary.

    Minimization. Returns incumbent and best bound; flags "time_limit" when
    interrupted and "early_stop" when early_stop_below triggered. The depth
    cap 10*|binaries| is unreachable for binary branching and guards bugs.
    """
    lp = milp.lp
    base_lb = lp.lb.copy()
    base_ub = lp.ub.copy()
    for j in milp.binaries:
        base_lb[j] = max(base_lb[j], 0.0)
        base_ub[j] = min(base_ub[j], 1.0)

    t0 = time.monotonic()
    depth_cap = 10 * max(1, len(milp.binaries))
    counter = 0
    heap = []
    incumbent = None
    inc_val = np.inf
    nodes = 0
    flags = set()

    def node_lp(lbv, ubv):
        return LinearProgram(lp.c, lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq, lbv, ubv)

    root = solve_lp(node_lp(base_lb, base_ub))
    nodes += 1
    if root.status == Status.INFEASIBLE:
        return MILPResult(Status.INFEASIBLE, nodes=nodes)
    if root.status == Status.UNBOUNDED:
        return MILPResult(Status.UNBOUNDED, nodes=nodes)
    heapq.heappush(heap, (root.value, counter, base_lb, base_ub, root, 0))

    open_bound = np.inf
    while heap:
        bound, _, lbv, ubv, res, depth = heapq.heappop(heap)
        open_bound = bound
        if bound >= inc_val - gap_tol:
            break
        if depth > depth_cap:
            raise LinSolveError("branch-and-bound depth cap exceeded")
        frac = np.array([abs(res.x[j] - round(res.x[j])) for j in milp.binaries])
        if (frac <= INT_TOL).all():
            if res.value < inc_val - 1e-12:
                inc_val = res.value
                incumbent = res.x.copy()
                for j in milp.binaries:
                    incumbent[j] = round(incumbent[j])
                if early_stop_below is not None and inc_val < early_stop_below:
                    flags.add("early_stop")
                    break
            open_bound = np.inf
            continue
        j = milp.binaries[int(np.argmax(frac))]
        for fix in (0.0, 1.0):
            if time_limit is not None and time.monotonic() - t0 > time_limit:
                flags.add("time_limit")
                break
            lb2 = lbv.copy()
            ub2 = ubv.copy()
            lb2[j] = ub2[j] = fix
            child = solve_lp(node_lp(lb2, ub2))
            nodes += 1
            if child.status == Status.UNBOUNDED:
                raise LinSolveError("unbounded node relaxation in branch and bound")
            if child.status != Status.OPTIMAL:
                continue
            if child.value < inc_val - 1e-12:
                counter += 1
                heapq.heappush(heap, (child.value, counter, lb2, ub2, child, depth + 1))
        if "time_limit" in flags:
            break
        open_bound = np.inf

    best_bound = min([b for b, *_ in heap] + [open_bound, inc_val])
    if incumbent is None:
        if "time_limit" in flags:
            return MILPResult(Status.INFEASIBLE, bound=best_bound, nodes=nodes, flags=frozenset(flags))
        return MILPResult(Status.INFEASIBLE, bound=best_bound, nodes=nodes)
    return MILPResult(Status.OPTIMAL, incumbent, inc_val, best_bound, nodes, frozenset(flags))
