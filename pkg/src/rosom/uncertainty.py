"""Uncertainty set variants and their worst-case (pessimization) primitives.

Every set is nonempty, closed, convex and bounded, and knows how to maximize
an affine function over itself: boxes, ellipsoids, truncated ellipsoids,
V-polytopes and simplex products in closed form, H-polytopes and budgeted
sets through one LP in (lifted) H-representation. These primitives back the
oracle module and the scenario-cut engine.

All instances are immutable after construction and safe to share.
"""

import numpy as np

from . import linsolve
from .linsolve import LinearProgram, Status


class SetError(ValueError):
    """Invalid uncertainty-set data (empty, unbounded or malformed)."""


def _freeze(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    if not np.all(np.isfinite(a)):
        raise SetError("set data must be finite")
    a.setflags(write=False)
    return a


class UncertaintySet:
    """Base class; concrete variants implement the primitives below."""

    kind = "abstract"

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def nominal_point(self) -> np.ndarray:
        """The seed scenario: center, barycenter or first vertex."""
        raise NotImplementedError

    def max_affine(self, c, c0=0.0):
        """Exact maximizer of c0 + c.zeta; returns (value, zeta)."""
        vals, Z = self.max_affine_batch(np.asarray(c, dtype=float).reshape(1, -1),
                                        np.array([c0], dtype=float))
        return float(vals[0]), Z[0]

    def max_affine_batch(self, C, c0s):
        """Row-wise max_affine; closed-form variants vectorize this."""
        C = np.asarray(C, dtype=float)
        vals = np.empty(C.shape[0])
        Z = np.empty_like(C)
        for i in range(C.shape[0]):
            vals[i], Z[i] = self._max_affine_single(C[i], float(c0s[i]))
        return vals, Z

    def _max_affine_single(self, c, c0):
        raise NotImplementedError

    def bounding_box(self):
        """Axis-aligned (lo, hi) enclosing the set, for interval arithmetic."""
        raise NotImplementedError

    def membership_residual(self, zeta) -> float:
        """0 when zeta is in the set; positive max constraint violation."""
        raise NotImplementedError

    def lifted_hrep(self):
        """(P, Q, r) with set = {zeta: exists u, P zeta + Q u <= r}; None if
        not polyhedral."""
        return None

    def vertices(self, cap=100000):
        """Explicit vertex list, or None when unsupported/over cap."""
        return None

    def seed_points(self):
        """Nominal point plus axis-extreme members, used to seed cut loops so
        masters start bounded in every adjustable direction."""
        return np.atleast_2d(self.nominal_point())

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return self is other or (type(self) is type(other) and self.to_dict() == other.to_dict())

    def __hash__(self):
        return id(self)


class Box(UncertaintySet):
    """{zeta : |zeta_i - center_i| <= radius}."""

    kind = "box"

    def __init__(self, center, radius):
        self.center = _freeze(np.atleast_1d(center))
        self.radius = float(radius)
        if self.radius < 0:
            raise SetError("box radius must be nonnegative")

    @property
    def dim(self):
        return self.center.size

    def nominal_point(self):
        return self.center.copy()

    def max_affine_batch(self, C, c0s):
        C = np.asarray(C, dtype=float)
        vals = c0s + C @ self.center + self.radius * np.abs(C).sum(axis=1)
        signs = np.where(C < 0, -1.0, 1.0)  # zero coefficients move to +radius
        Z = self.center + self.radius * signs
        return vals, Z

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def membership_residual(self, zeta):
        return float(np.max(np.abs(zeta - self.center) - self.radius, initial=0.0))

    def lifted_hrep(self):
        L = self.dim
        P = np.vstack([np.eye(L), -np.eye(L)])
        r = np.concatenate([self.center + self.radius, -(self.center - self.radius)])
        return P, np.zeros((2 * L, 0)), r

    def vertices(self, cap=100000):
        L = self.dim
        if 2 ** L > cap:
            return None
        if self.radius == 0.0:
            return self.center.reshape(1, -1)
        grid = np.array(np.meshgrid(*[[-1.0, 1.0]] * L, indexing="ij")).reshape(L, -1).T
        return self.center + self.radius * grid

    def seed_points(self):
        eyes = self.radius * np.vstack([np.eye(self.dim), -np.eye(self.dim)])
        return np.vstack([self.center[None, :], self.center + eyes])

    def to_dict(self):
        return {"kind": "box", "center": self.center.tolist(), "radius": self.radius}


class Ellipsoid(UncertaintySet):
    """{zeta : ||zeta - center||_2 <= radius}."""

    kind = "ellipsoid"

    def __init__(self, center, radius):
        self.center = _freeze(np.atleast_1d(center))
        self.radius = float(radius)
        if self.radius < 0:
            raise SetError("ellipsoid radius must be nonnegative")

    @property
    def dim(self):
        return self.center.size

    def nominal_point(self):
        return self.center.copy()

    def max_affine_batch(self, C, c0s):
        C = np.asarray(C, dtype=float)
        norms = np.linalg.norm(C, axis=1)
        vals = c0s + C @ self.center + self.radius * norms
        safe = np.where(norms > 0, norms, 1.0)
        Z = self.center + self.radius * C / safe[:, None]
        Z[norms == 0] = self.center
        return vals, Z

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def membership_residual(self, zeta):
        return max(0.0, float(np.linalg.norm(zeta - self.center) - self.radius))

    def seed_points(self):
        eyes = self.radius * np.vstack([np.eye(self.dim), -np.eye(self.dim)])
        return np.vstack([self.center[None, :], self.center + eyes])

    def to_dict(self):
        return {"kind": "ellipsoid", "center": self.center.tolist(), "radius": self.radius}


class TruncatedEllipsoid(UncertaintySet):
    """{zeta >= 0 : ||zeta - center||_2 <= radius} with center >= 0.

    The affine maximizer solves the KKT system by scalar bisection on the
    ball multiplier: zeta_i(mu) = max(0, center_i + c_i / (2 mu)) with
    g(mu) = ||zeta(mu) - center|| nonincreasing; when all c_i <= 0 and the
    mu -> 0+ limit point is inside the ball, that limit is optimal.
    """

    kind = "truncated_ellipsoid"

    def __init__(self, center, radius):
        self.center = _freeze(np.atleast_1d(center))
        self.radius = float(radius)
        if self.radius < 0:
            raise SetError("radius must be nonnegative")
        if np.any(self.center < 0):
            raise SetError("truncated ellipsoid requires a nonnegative center")

    @property
    def dim(self):
        return self.center.size

    def nominal_point(self):
        return self.center.copy()

    def max_affine_batch(self, C, c0s):
        C = np.asarray(C, dtype=float)
        m, L = C.shape
        d = self.center
        om = self.radius
        Z = np.tile(d, (m, 1))
        active = np.ones(m, dtype=bool)

        zero_rows = np.all(C == 0.0, axis=1)
        active &= ~zero_rows

        # all-nonpositive rows whose unconstrained-in-orthant point fits the ball
        nonpos = np.all(C <= 0.0, axis=1) & active
        if nonpos.any():
            lim = np.where(C[nonpos] == 0.0, d, 0.0)
            fits = np.linalg.norm(lim - d, axis=1) <= om + 1e-15
            idx = np.flatnonzero(nonpos)[fits]
            Z[idx] = lim[fits]
            active[idx] = False

        idx = np.flatnonzero(active)
        if idx.size and om > 0:
            Ca = C[idx]

            def g(mu):
                z = np.maximum(0.0, d + Ca / (2.0 * mu[:, None]))
                return np.linalg.norm(z - d, axis=1)

            lo = np.full(idx.size, 1.0)
            hi = np.full(idx.size, 1.0)
            for _ in range(600):
                bad = g(lo) < om  # lo must sit on the g >= om side
                if not bad.any():
                    break
                lo[bad] *= 0.5
            for _ in range(600):
                bad = g(hi) > om
                if not bad.any():
                    break
                hi[bad] *= 2.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                high_side = g(mid) > om
                lo = np.where(high_side, mid, lo)
                hi = np.where(high_side, hi, mid)
            mu = 0.5 * (lo + hi)
            Z[idx] = np.maximum(0.0, d + Ca / (2.0 * mu[:, None]))
        elif idx.size:
            Z[idx] = d  # radius zero: the center is the whole set
        vals = c0s + (C * Z).sum(axis=1)
        return vals, Z

    def bounding_box(self):
        return np.maximum(0.0, self.center - self.radius), self.center + self.radius

    def membership_residual(self, zeta):
        r = max(0.0, float(np.linalg.norm(zeta - self.center) - self.radius))
        return max(r, float(np.max(-np.asarray(zeta), initial=0.0)))

    def seed_points(self):
        eyes = self.radius * np.vstack([np.eye(self.dim), -np.eye(self.dim)])
        pts = np.maximum(0.0, self.center + eyes)
        return np.vstack([self.center[None, :], pts])

    def to_dict(self):
        return {"kind": "truncated_ellipsoid", "center": self.center.tolist(), "radius": self.radius}


class VPolytope(UncertaintySet):
    """Convex hull of an explicit vertex list."""

    kind = "vpolytope"

    def __init__(self, vertices):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] < 1:
            raise SetError("vpolytope needs at least one vertex")
        self.V = _freeze(V)

    @property
    def dim(self):
        return self.V.shape[1]

    def nominal_point(self):
        return self.V[0].copy()

    def max_affine_batch(self, C, c0s):
        C = np.asarray(C, dtype=float)
        scores = C @ self.V.T
        best = np.argmax(scores, axis=1)
        vals = c0s + scores[np.arange(C.shape[0]), best]
        return vals, self.V[best].copy()

    def bounding_box(self):
        return self.V.min(axis=0), self.V.max(axis=0)

    def membership_residual(self, zeta):
        # zeta in conv(V) iff the distance LP has value ~0
        S, L = self.V.shape
        c = np.zeros(S + 1)
        c[-1] = 1.0
        rows = []
        rhs = []
        for sign in (1.0, -1.0):
            blk = np.hstack([sign * self.V.T, -np.ones((L, 1))])
            rows.append(blk)
            rhs.append(sign * np.asarray(zeta, dtype=float))
        A = np.vstack(rows)
        b = np.concatenate(rhs)
        lb = np.zeros(S + 1)
        res = linsolve.solve_lp(LinearProgram(
            c, A_ub=A, b_ub=b,
            A_eq=np.concatenate([np.ones(S), [0.0]]).reshape(1, -1), b_eq=[1.0], lb=lb))
        if res.status != Status.OPTIMAL:
            return np.inf
        return max(0.0, float(res.value))

    def lifted_hrep(self):
        S, L = self.V.shape
        I = np.eye(L)
        P = np.vstack([I, -I, np.zeros((2 + S, L))])
        Q = np.vstack([-self.V.T, self.V.T, np.ones((1, S)), -np.ones((1, S)), -np.eye(S)])
        r = np.concatenate([np.zeros(2 * L), [1.0, -1.0], np.zeros(S)])
        return P, Q, r

    def vertices(self, cap=100000):
        return None if self.V.shape[0] > cap else self.V.copy()

    def seed_points(self):
        k = min(self.V.shape[0], 2 * self.dim + 1)
        return self.V[:k].copy()

    def to_dict(self):
        return {"kind": "vpolytope", "vertices": self.V.tolist()}


class HPolytope(UncertaintySet):
    """{zeta : A zeta <= b}; must be nonempty and bounded (checked eagerly
    by maximizing +-e_i, 2L LP solves at construction)."""

    kind = "hpolytope"

    def __init__(self, A, b):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[1] < 1:
            raise SetError("hpolytope A must be a matrix with at least one column")
        self.A = _freeze(A)
        self.b = _freeze(np.atleast_1d(b))
        if self.b.size != A.shape[0]:
            raise SetError("hpolytope A/b shape mismatch")
        lo = np.empty(A.shape[1])
        hi = np.empty(A.shape[1])
        extremes = []
        for i in range(A.shape[1]):
            e = np.zeros(A.shape[1])
            e[i] = 1.0
            for sign, out in ((1.0, hi), (-1.0, lo)):
                res = linsolve.solve_lp(LinearProgram(-sign * e, A_ub=self.A, b_ub=self.b))
                if res.status == Status.INFEASIBLE:
                    raise SetError("hpolytope is empty")
                if res.status == Status.UNBOUNDED:
                    raise SetError("hpolytope is unbounded")
                out[i] = sign * -res.value
                extremes.append(res.x)
        self._lo, self._hi = lo, hi
        self._extremes = np.vstack(extremes)
        self._nominal = 0.5 * (lo + hi)
        if self.membership_residual(self._nominal) > 1e-9:
            # box midpoint may fall outside; use a feasible point instead
            res = linsolve.solve_lp(LinearProgram(np.zeros(A.shape[1]), A_ub=self.A, b_ub=self.b))
            self._nominal = res.x

    @property
    def dim(self):
        return self.A.shape[1]

    def nominal_point(self):
        return self._nominal.copy()

    def _max_affine_single(self, c, c0):
        res = linsolve.solve_lp(LinearProgram(-np.asarray(c, dtype=float), A_ub=self.A, b_ub=self.b))
        if res.status != Status.OPTIMAL:
            raise SetError("hpolytope pessimization LP failed")
        return c0 - res.value, res.x

    def bounding_box(self):
        return self._lo.copy(), self._hi.copy()

    def membership_residual(self, zeta):
        return float(np.max(self.A @ zeta - self.b, initial=0.0))

    def lifted_hrep(self):
        return self.A.copy(), np.zeros((self.A.shape[0], 0)), self.b.copy()

    def seed_points(self):
        return np.vstack([self._nominal[None, :], self._extremes])

    def to_dict(self):
        return {"kind": "hpolytope", "a": self.A.tolist(), "b": self.b.tolist()}


class Budgeted(UncertaintySet):
    """{zeta : sum_{j<=i} |zeta_j| <= Gamma_i for all i, ||zeta||_inf <= 1},
    handled through the lifted representation -u <= zeta <= u,
    sum_{j<=i} u_j <= Gamma_i, u <= 1."""

    kind = "budgeted"

    def __init__(self, budgets):
        g = np.atleast_1d(np.asarray(budgets, dtype=float))
        if np.any(np.diff(g) < 0):
            raise SetError("budgets must be nondecreasing")
        if np.any(g < 0):
            raise SetError("budgets must be nonnegative")
        self.budgets = _freeze(g)

    @property
    def dim(self):
        return self.budgets.size

    def nominal_point(self):
        return np.zeros(self.dim)

    def _max_affine_single(self, c, c0):
        L = self.dim
        P, Q, r = self.lifted_hrep()
        obj = np.concatenate([-np.asarray(c, dtype=float), np.zeros(L)])
        res = linsolve.solve_lp(LinearProgram(obj, A_ub=np.hstack([P, Q]), b_ub=r))
        if res.status != Status.OPTIMAL:
            raise SetError("budgeted pessimization LP failed")
        return c0 - res.value, res.x[:L]

    def bounding_box(self):
        m = np.minimum(1.0, self.budgets)
        return -m, m

    def membership_residual(self, zeta):
        z = np.abs(np.asarray(zeta, dtype=float))
        res = float(np.max(z - 1.0, initial=0.0))
        res = max(res, float(np.max(np.cumsum(z) - self.budgets, initial=0.0)))
        return res

    def seed_points(self):
        m = np.minimum(1.0, self.budgets)
        eyes = np.vstack([np.diag(m), -np.diag(m)])
        return np.vstack([np.zeros((1, self.dim)), eyes])

    def lifted_hrep(self):
        L = self.dim
        I = np.eye(L)
        tri = np.tril(np.ones((L, L)))
        P = np.vstack([I, -I, np.zeros((L, L)), np.zeros((L, L))])
        Q = np.vstack([-I, -I, tri, I])
        r = np.concatenate([np.zeros(2 * L), self.budgets, np.ones(L)])
        return P, Q, r

    def to_dict(self):
        return {"kind": "budgeted", "budgets": self.budgets.tolist()}


class SimplexProduct(UncertaintySet):
    """zeta partitioned into blocks, each constrained to the standard simplex."""

    kind = "simplex_product"

    def __init__(self, blocks):
        blocks = [int(s) for s in blocks]
        if not blocks or any(s < 1 for s in blocks):
            raise SetError("blocks must be positive sizes")
        self.blocks = tuple(blocks)
        starts = np.concatenate([[0], np.cumsum(blocks)])
        self._starts = starts

    @property
    def dim(self):
        return int(self._starts[-1])

    def nominal_point(self):
        z = np.empty(self.dim)
        for k, s in enumerate(self.blocks):
            z[self._starts[k]:self._starts[k + 1]] = 1.0 / s
        return z

    def max_affine_batch(self, C, c0s):
        C = np.asarray(C, dtype=float)
        vals = np.asarray(c0s, dtype=float).copy()
        Z = np.zeros_like(C)
        for k in range(len(self.blocks)):
            a, b = self._starts[k], self._starts[k + 1]
            blk = C[:, a:b]
            best = np.argmax(blk, axis=1)
            vals += blk[np.arange(C.shape[0]), best]
            Z[np.arange(C.shape[0]), a + best] = 1.0
        return vals, Z

    def bounding_box(self):
        return np.zeros(self.dim), np.ones(self.dim)

    def membership_residual(self, zeta):
        z = np.asarray(zeta, dtype=float)
        res = float(np.max(-z, initial=0.0))
        for k in range(len(self.blocks)):
            a, b = self._starts[k], self._starts[k + 1]
            res = max(res, abs(float(z[a:b].sum()) - 1.0))
        return res

    def lifted_hrep(self):
        L = self.dim
        K = len(self.blocks)
        sums = np.zeros((K, L))
        for k in range(K):
            sums[k, self._starts[k]:self._starts[k + 1]] = 1.0
        P = np.vstack([-np.eye(L), sums, -sums])
        r = np.concatenate([np.zeros(L), np.ones(K), -np.ones(K)])
        return P, np.zeros((P.shape[0], 0)), r

    def seed_points(self):
        nom = self.nominal_point()
        pts = [nom]
        for k in range(len(self.blocks)):
            a, b = self._starts[k], self._starts[k + 1]
            for s in range(self.blocks[k]):
                z = nom.copy()
                z[a:b] = 0.0
                z[a + s] = 1.0
                pts.append(z)
        return np.vstack(pts)

    def vertices(self, cap=100000):
        count = 1
        for s in self.blocks:
            count *= s
            if count > cap:
                return None
        combos = np.array(np.meshgrid(*[np.arange(s) for s in self.blocks],
                                      indexing="ij")).reshape(len(self.blocks), -1).T
        Z = np.zeros((count, self.dim))
        for k in range(len(self.blocks)):
            Z[np.arange(count), self._starts[k] + combos[:, k]] = 1.0
        return Z

    def to_dict(self):
        return {"kind": "simplex_product", "blocks": list(self.blocks)}


class LiftedPolytope(UncertaintySet):
    """Internal polyhedral set {zeta: exists u, P zeta + Q u <= r}; produced
    by region splitting in the common-factor reformulation. Not serializable."""

    kind = "_lifted"

    def __init__(self, P, Q, r, bounding=None):
        self.P = _freeze(P)
        self.Q = _freeze(Q)
        self.r = _freeze(np.atleast_1d(r))
        self._box = bounding
        self._nominal = None

    @property
    def dim(self):
        return self.P.shape[1]

    def is_empty(self) -> bool:
        L, nu = self.P.shape[1], self.Q.shape[1]
        res = linsolve.solve_lp(LinearProgram(
            np.zeros(L + nu), A_ub=np.hstack([self.P, self.Q]), b_ub=self.r))
        return res.status == Status.INFEASIBLE

    def nominal_point(self):
        if self._nominal is None:
            L, nu = self.P.shape[1], self.Q.shape[1]
            pts = []
            for i in range(L):
                e = np.zeros(L + nu)
                e[i] = 1.0
                for sign in (1.0, -1.0):
                    res = linsolve.solve_lp(LinearProgram(
                        -sign * e, A_ub=np.hstack([self.P, self.Q]), b_ub=self.r))
                    if res.status != Status.OPTIMAL:
                        raise SetError("lifted polytope is empty or unbounded")
                    pts.append(res.x[:L])
            self._nominal = np.mean(pts, axis=0)
        return self._nominal.copy()

    def _max_affine_single(self, c, c0):
        L, nu = self.P.shape[1], self.Q.shape[1]
        obj = np.concatenate([-np.asarray(c, dtype=float), np.zeros(nu)])
        res = linsolve.solve_lp(LinearProgram(obj, A_ub=np.hstack([self.P, self.Q]), b_ub=self.r))
        if res.status != Status.OPTIMAL:
            raise SetError("lifted-polytope pessimization LP failed")
        return c0 - res.value, res.x[:L]

    def bounding_box(self):
        if self._box is None:
            lo = np.empty(self.dim)
            hi = np.empty(self.dim)
            for i in range(self.dim):
                e = np.zeros(self.dim)
                e[i] = 1.0
                hi[i] = self._max_affine_single(e, 0.0)[0]
                lo[i] = -self._max_affine_single(-e, 0.0)[0]
            self._box = (lo, hi)
        return self._box[0].copy(), self._box[1].copy()

    def membership_residual(self, zeta):
        L, nu = self.P.shape[1], self.Q.shape[1]
        if nu == 0:
            return float(np.max(self.P @ zeta - self.r, initial=0.0))
        # choose the auxiliary u minimizing the violation
        c = np.zeros(nu + 1)
        c[-1] = 1.0
        A = np.hstack([self.Q, -np.ones((self.Q.shape[0], 1))])
        b = self.r - self.P @ zeta
        lb = np.full(nu + 1, -np.inf)
        lb[-1] = 0.0
        res = linsolve.solve_lp(LinearProgram(c, A_ub=A, b_ub=b, lb=lb))
        if res.status != Status.OPTIMAL:
            return np.inf
        return max(0.0, float(res.value))

    def lifted_hrep(self):
        return self.P.copy(), self.Q.copy(), self.r.copy()

    def to_dict(self):
        raise SetError("internal lifted polytopes are not serializable")

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)


_KINDS = {
    "box": lambda d: Box(d["center"], d["radius"]),
    "ellipsoid": lambda d: Ellipsoid(d["center"], d["radius"]),
    "truncated_ellipsoid": lambda d: TruncatedEllipsoid(d["center"], d["radius"]),
    "vpolytope": lambda d: VPolytope(d["vertices"]),
    "hpolytope": lambda d: HPolytope(d["a"], d["b"]),
    "budgeted": lambda d: Budgeted(d["budgets"]),
    "simplex_product": lambda d: SimplexProduct(d["blocks"]),
}


def set_from_dict(d: dict) -> UncertaintySet:
    try:
        kind = d["kind"]
    except (TypeError, KeyError):
        raise SetError("uncertainty set needs a 'kind'") from None
    if kind not in _KINDS:
        raise SetError(f"unknown uncertainty set kind {kind!r}")
    try:
        return _KINDS[kind](d)
    except KeyError as exc:
        raise SetError(f"missing field for {kind}: {exc}") from None
