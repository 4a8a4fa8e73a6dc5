"""Deterministic, seedable generators for the worked examples and for
property-test instances.

All randomness flows through the xoshiro256** stream in rng.py, so every
generator is a pure function of its arguments including the seed, and the
serialized instances are byte-identical across runs (and reproducible from
the documented generator constants in other languages).
"""

import numpy as np

from .model import BiaffineForm, RobustSide, SumOfMaxProblem, VarBound
from .rng import Xoshiro256StarStar
from .uncertainty import (Box, Budgeted, Ellipsoid, HPolytope, SimplexProduct,
                          TruncatedEllipsoid, VPolytope)


def toy1() -> SumOfMaxProblem:
    """min d s.t. max{x, x+z} + max{x, x-z} <= d for z in [-1,1], x >= 0.

    Exact optimum 1; the fixed-analysis-variable reformulation gives 2 and
    the affinely adjustable one recovers 1.
    """
    def f(sign):
        return BiaffineForm(0.0, [1.0, 0.0], [sign], np.zeros((1, 2)))

    terms = [[f(0.0), f(1.0)], [f(0.0), f(-1.0)]]
    return SumOfMaxProblem(2, 1, BiaffineForm.build(2, 1), terms,
                           Box([0.0], 1.0), [VarBound(0, lower=0.0)])


def toy2() -> SumOfMaxProblem:
    """Four maxima over the unit box in the plane: exact 2, fixed analysis
    variables 8, affine rules 4."""
    def f(s1, s2):
        return BiaffineForm(0.0, [1.0, 0.0], [s1, s2], np.zeros((2, 2)))

    terms = [[f(0.0, 0.0), f(1.0, 1.0)],
             [f(0.0, 0.0), f(1.0, -1.0)],
             [f(0.0, 0.0), f(-1.0, 1.0)],
             [f(0.0, 0.0), f(-1.0, -1.0)]]
    return SumOfMaxProblem(2, 1, BiaffineForm.build(2, 2), terms,
                           Box([0.0, 0.0], 1.0), [VarBound(0, lower=0.0)])


def regression(n: int = 15, omega: float = 0.05, seed: int = 0):
    """Least-absolute-deviations fit with multiplicative regressor error.

    Observations x_i ~ U[0,100], measurement errors zeta uniform in the L2
    ball of radius omega, noise e_i ~ N(0,1), responses
    y_i = 2 + 5 (1 + zeta_i) x_i + e_i. Decision variables (b0, b1, d);
    term i is |y_i - b0 - b1 (1 + zeta_i) x_i| over Ellipsoid(0, omega).

    Returns (problem, data) with the generated draws.
    """
    if n < 2:
        raise ValueError("need at least two observations")
    gen = Xoshiro256StarStar(seed)
    beta0, beta1 = 2.0, 5.0
    xs = np.array(gen.uniforms(n, 0.0, 100.0))
    zeta = np.array(gen.ball_point(n, omega))
    eps = np.array(gen.normals(n))
    ys = beta0 + beta1 * (1.0 + zeta) * xs + eps

    terms = []
    for i in range(n):
        cross = np.zeros((n, 3))
        cross[i, 1] = -xs[i]
        f = BiaffineForm(ys[i], [-1.0, -xs[i], 0.0], np.zeros(n), cross)
        terms.append([f, f.negated()])
    problem = SumOfMaxProblem(3, 2, BiaffineForm.build(3, n), terms,
                              Ellipsoid(np.zeros(n), omega), [])
    data = {"x": xs, "y": ys, "zeta": zeta, "eps": eps,
            "beta0": beta0, "beta1": beta1, "omega": omega}
    return problem, data


def regression_true_value(data, beta0: float, beta1: float) -> float:
    """Closed form of the exact robust objective at fixed coefficients:
    sum_i |y_i - b0 - b1 x_i| + omega |b1| ||x||_2."""
    resid = data["y"] - beta0 - beta1 * data["x"]
    return float(np.abs(resid).sum()
                 + data["omega"] * abs(beta1) * np.linalg.norm(data["x"]))


def inventory(T: int = 12, omega: float = 10.0, dbar: float = 5.0,
              c_h: float = 1.0, c_b: float = 2.0, x0: float = 0.0,
              seed: int = 0, pure_ellipsoid: bool = False) -> SumOfMaxProblem:
    """Single-item inventory with backlogging and affine order rules.

    Orders q_i = q0_i + sum_{t<i} Q_it * demand_t; period cost is
    max{c_h s_i, -c_b s_i} on the stock s_i = x0 + sum_{j<=i} (q_j - d_j).
    Demand lives in the nonnegative-truncated ball around dbar (or the pure
    ellipsoid when flagged); order rules must stay nonnegative for every
    demand, which adds robust side rows. The instance is deterministic;
    seed is accepted for interface uniformity.
    """
    del seed
    if T < 1:
        raise ValueError("need at least one period")
    q0 = list(range(T))
    Q = {}
    col = T
    for i in range(1, T):
        for t in range(i):
            Q[(i, t)] = col
            col += 1
    d_index = col
    n_x = col + 1

    terms = []
    for t in range(T):
        xl = np.zeros(n_x)
        zl = np.zeros(T)
        cross = np.zeros((T, n_x))
        for i in range(t + 1):
            xl[q0[i]] = 1.0
            zl[i] = -1.0
            for tau in range(i):
                cross[tau, Q[(i, tau)]] += 1.0
        s_t = BiaffineForm(x0, xl, zl, cross)
        terms.append([s_t.scaled(c_h), s_t.scaled(-c_b)])

    sides = []
    for i in range(T):
        if i == 0:
            sides.append(VarBound(q0[0], lower=0.0))
            continue
        xl = np.zeros(n_x)
        xl[q0[i]] = -1.0
        cross = np.zeros((T, n_x))
        for tau in range(i):
            cross[tau, Q[(i, tau)]] = -1.0
        sides.append(RobustSide(BiaffineForm(0.0, xl, np.zeros(T), cross)))

    center = np.full(T, dbar)
    uset = Ellipsoid(center, omega) if pure_ellipsoid else TruncatedEllipsoid(center, omega)
    return SumOfMaxProblem(n_x, d_index, BiaffineForm.build(n_x, T), terms, uset, sides)


def brachy_like(n_points: int = 6, n_catheters: int = 2, n_sides: int = 3,
                seed: int = 0, n_dwell: int = 2) -> SumOfMaxProblem:
    """Synthetic dose-planning instance with cone-side uncertainty.

    Dose at point i is sum_k zeta_k . B_ik t_k with nonnegative dose-rate
    matrices B_ik ((sides, dwell positions) per catheter), dwell times t >= 0
    and zeta_k in the standard simplex per catheter. Each point contributes
    max{0, under-dose penalty, over-dose penalty}. Magnitudes are chosen so
    the nominal optimum is moderate (order 10).
    """
    if n_sides < 1 or n_catheters < 1 or n_points < 1:
        raise ValueError("sizes must be positive")
    gen = Xoshiro256StarStar(seed)
    K, S, P = n_catheters, n_sides, n_dwell
    L = K * S
    n_x = K * P + 1
    d_index = n_x - 1

    B = np.empty((n_points, K, S, P))
    for i in range(n_points):
        for k in range(K):
            for s in range(S):
                for p_ in range(P):
                    B[i, k, s, p_] = gen.uniform(0.2, 1.2)
    lows = np.array([gen.uniform(8.0, 12.0) for _ in range(n_points)])
    highs = lows + np.array([gen.uniform(2.0, 6.0) for _ in range(n_points)])
    al = np.array([gen.uniform(0.5, 2.0) for _ in range(n_points)])
    be = np.array([gen.uniform(0.5, 2.0) for _ in range(n_points)])

    terms = []
    for i in range(n_points):
        dose_cross = np.zeros((L, n_x))
        for k in range(K):
            dose_cross[k * S:(k + 1) * S, k * P:(k + 1) * P] = B[i, k]
        zero = BiaffineForm.build(n_x, L)
        under = BiaffineForm(al[i] * lows[i], np.zeros(n_x), np.zeros(L),
                             -al[i] * dose_cross)
        over = BiaffineForm(-be[i] * highs[i], np.zeros(n_x), np.zeros(L),
                            be[i] * dose_cross)
        terms.append([zero, under, over])

    sides = [VarBound(j, lower=0.0) for j in range(K * P)]
    return SumOfMaxProblem(n_x, d_index, BiaffineForm.build(n_x, L), terms,
                           SimplexProduct([S] * K), sides)


def _random_set(gen: Xoshiro256StarStar, kind: str, L: int):
    if kind == "box":
        return Box(np.zeros(L), gen.uniform(0.5, 1.5))
    if kind == "ellipsoid":
        return Ellipsoid(np.zeros(L), gen.uniform(0.5, 1.5))
    if kind == "truncated_ellipsoid":
        center = np.array(gen.uniforms(L, 0.5, 2.0))
        return TruncatedEllipsoid(center, gen.uniform(0.5, 2.0))
    if kind == "vpolytope":
        n_v = 3 + (gen.next_uint64() % (L + 2))
        return VPolytope(np.array(gen.uniforms(int(n_v) * L, -1.0, 1.0)).reshape(-1, L))
    if kind == "hpolytope":
        rows = [np.eye(L), -np.eye(L)]
        rhs = [np.ones(L), np.ones(L)]
        for _ in range(2):
            rows.append(np.array(gen.uniforms(L, -1.0, 1.0)).reshape(1, -1))
            rhs.append(np.array([gen.uniform(0.5, 1.0)]))
        return HPolytope(np.vstack(rows), np.concatenate(rhs))
    if kind == "budgeted":
        steps = np.array(gen.uniforms(L, 0.3, 1.0))
        return Budgeted(np.cumsum(steps))
    if kind == "simplex_product":
        blocks = []
        rem = L
        while rem:
            s = min(rem, 2 + int(gen.next_uint64() % 2))
            if rem - s == 1:
                s += 1 if s < rem else 0
            blocks.append(min(s, rem))
            rem -= blocks[-1]
        return SimplexProduct(blocks)
    raise ValueError(f"unknown set kind {kind!r}")


def random_instance(n_x: int = 2, L: int = 2, n_terms: int = 2, n_funcs: int = 2,
                    set_kind: str = "box", seed: int = 0,
                    cross_scale: float = 1.0) -> SumOfMaxProblem:
    """Random biaffine instance with coefficients uniform in [-100, 100].

    n_x counts the real decision variables; the objective variable d is
    appended after them. Real variables are bounded to [-1, 1] so every
    reformulation has a finite optimum.
    """
    gen = Xoshiro256StarStar(seed)
    uset = _random_set(gen, set_kind, L)
    total = n_x + 1
    d_index = n_x

    def rand_form():
        const = gen.uniform(-100.0, 100.0)
        xl = np.concatenate([np.array(gen.uniforms(n_x, -100.0, 100.0)), [0.0]])
        zl = np.array(gen.uniforms(L, -100.0, 100.0))
        cross = np.zeros((L, total))
        cross[:, :n_x] = cross_scale * np.array(
            gen.uniforms(L * n_x, -100.0, 100.0)).reshape(L, n_x)
        return BiaffineForm(const, xl, zl, cross)

    base = rand_form()
    terms = [[rand_form() for _ in range(n_funcs)] for _ in range(n_terms)]
    sides = [VarBound(j, lower=-1.0, upper=1.0) for j in range(n_x)]
    return SumOfMaxProblem(total, d_index, base, terms, uset, sides)
