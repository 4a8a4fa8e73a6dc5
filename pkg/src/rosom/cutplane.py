"""Cutting-plane drivers: grow a master problem from true-value pessimization.

The vertex-based driver adds the epigraph block of the worst-case scenario
found in each iteration; the row-based driver adds the robust linear row of
the worst-case maximizer assignment instead; the combined driver adds both.
Masters start from the nominal scenario. LB is the master value (a
relaxation, always valid), UB is the true value of the master optimum; the
loop stops on the absolute criterion UB - LB < eps or the dimensionless
2(UB - LB)/(1 + |UB + LB|) < eps.

When the row driver sees an assignment it already added, it falls back to
adding the vertex block for the new scenario, which prevents stalls.
"""

import io
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import oracle, robust_lp
from .linsolve import Status
from .model import BiaffineForm, Solution, SumOfMaxProblem, combine_forms
from .reformulate import RobustLP, _add_vertex_block, _attach_sides, _pad_form_to, _skeleton


class CutPlaneError(Exception):
    pass


@dataclass
class CutPlaneConfig:
    epsilon: float = 1e-6
    stopping: str = "absolute"      # "absolute" | "relative"
    oracle: str = "auto"            # "auto" | "enum" | "milp"
    lazy_oracle: bool = False       # stop the oracle at the first value > LB
    lazy_master: bool = False       # stop the master once its value < UB
    max_iterations: int = 1000
    oracle_time_limit_s: Optional[float] = 60.0
    cut_tol: float = 1e-7
    enum_cap: int = 10 ** 6

    def __post_init__(self):
        if self.epsilon <= 0:
            raise CutPlaneError("epsilon must be positive")
        if self.stopping not in ("absolute", "relative"):
            raise CutPlaneError(f"unknown stopping rule {self.stopping!r}")

    def gap(self, lb: float, ub: float) -> float:
        if self.stopping == "absolute":
            return ub - lb
        return 2.0 * (ub - lb) / (1.0 + abs(ub + lb))


@dataclass
class TraceEntry:
    iteration: int
    lb: float
    ub: float
    gap: float
    cuts: int
    millis: float
    zeta: Optional[np.ndarray] = None
    assignment: Optional[tuple] = None


@dataclass
class CutPlaneTrace:
    entries: list = field(default_factory=list)
    converged: bool = False
    flag: str = ""

    def to_csv(self, include_timing: bool = True) -> str:
        out = io.StringIO()
        out.write("iteration,LB,UB,gap,cuts,millis\n")
        for e in self.entries:
            ms = repr(round(e.millis, 3)) if include_timing else ""
            ub = repr(e.ub) if np.isfinite(e.ub) else "inf"
            gap = repr(e.gap) if np.isfinite(e.gap) else "inf"
            out.write(f"{e.iteration},{e.lb!r},{ub},{gap},{e.cuts},{ms}\n")
        return out.getvalue()

    @property
    def iterations(self) -> int:
        return len(self.entries)


def _master_skeleton(p: SumOfMaxProblem, method: str) -> RobustLP:
    rlp = _skeleton(p, method)
    _attach_sides(rlp, p)
    return rlp


def _assignment_row(master: RobustLP, p: SumOfMaxProblem, assignment, tag: str):
    forms = [_pad_form_to(p.base, master.n_vars)]
    forms += [_pad_form_to(p.terms[i][j], master.n_vars)
              for i, j in enumerate(assignment)]
    row = combine_forms(forms)
    xl = row.x_linear.copy()
    xl[master.d_var] -= 1.0
    master.add_robust(BiaffineForm(row.constant, xl, row.zeta_linear, row.cross),
                      p.uset, tag=tag)


def solve_nominal(p: SumOfMaxProblem):
    """Exact epigraph LP at the nominal scenario only (no robustness)."""
    master = _master_skeleton(p, "nominal")
    _add_vertex_block(master, p, p.uset.nominal_point(), "nom")
    res = robust_lp.scenario_cut_solve(master)
    if res.status != Status.OPTIMAL:
        raise CutPlaneError(f"nominal master did not solve: {res.status}")
    sol = Solution(res.x[: p.n_x].copy(), res.value, "nominal")
    return sol, res


def _drive(p: SumOfMaxProblem, cfg: CutPlaneConfig, add_vertex: bool,
           add_row: bool, method: str):
    master = _master_skeleton(p, method)
    nominal = p.uset.nominal_point()
    _add_vertex_block(master, p, nominal, "v0")
    vertex_keys = {np.round(nominal, 12).tobytes()}
    seen_assignments = set()
    trace = CutPlaneTrace()
    lb = -np.inf
    ub_best = np.inf
    x_star = None
    t_start = time.monotonic()

    for k in range(1, cfg.max_iterations + 1):
        t0 = time.monotonic()
        cutoff = ub_best if (cfg.lazy_master and np.isfinite(ub_best)) else None
        res = robust_lp.scenario_cut_solve(master, tol=cfg.cut_tol,
                                           cutoff_below=cutoff)
        if res.status != Status.OPTIMAL:
            raise CutPlaneError(f"master did not solve: {res.status}")
        master_exact = "cutoff" not in res.flags
        if master_exact and res.value > lb:
            lb = res.value
        x_star = res.x[: p.n_x].copy()

        stop_above = None
        if cfg.lazy_oracle and np.isfinite(lb):
            stop_above = lb
        wc = oracle.true_value(p, x_star, oracle=cfg.oracle, cap=cfg.enum_cap,
                               stop_above=stop_above,
                               time_limit=cfg.oracle_time_limit_s)
        ub_k = wc.value if wc.optimal else np.inf
        if wc.optimal:
            ub_best = min(ub_best, wc.value)
        gap = cfg.gap(lb, ub_k) if np.isfinite(ub_k) else np.inf
        millis = (time.monotonic() - t0) * 1000.0
        cuts = (len(vertex_keys) - 1) + len(seen_assignments)
        trace.entries.append(TraceEntry(k, lb, ub_k, gap, cuts, millis,
                                        wc.zeta.copy(), wc.assignment))

        if wc.optimal and master_exact and gap < cfg.epsilon:
            trace.converged = True
            break

        zkey = np.round(wc.zeta, 12).tobytes()
        progressed = False
        if add_row:
            if wc.assignment not in seen_assignments:
                seen_assignments.add(wc.assignment)
                _assignment_row(master, p, wc.assignment,
                                tag=f"assign{wc.assignment}")
                progressed = True
            elif not add_vertex and zkey not in vertex_keys:
                # duplicate assignment: fall back to the vertex block
                vertex_keys.add(zkey)
                _add_vertex_block(master, p, wc.zeta, f"v{k}")
                progressed = True
        if add_vertex and zkey not in vertex_keys:
            vertex_keys.add(zkey)
            _add_vertex_block(master, p, wc.zeta, f"v{k}")
            progressed = True
        if not progressed:
            trace.flag = "stalled"
            break
    else:
        trace.flag = "max_iterations"

    sol = Solution(x_star, lb, method)
    return sol, trace


def algorithm1(p: SumOfMaxProblem, cfg: CutPlaneConfig = None):
    """Cutting planes on scenario vertex blocks."""
    return _drive(p, cfg or CutPlaneConfig(), add_vertex=True, add_row=False,
                  method="alg1")


def algorithm2(p: SumOfMaxProblem, cfg: CutPlaneConfig = None):
    """Cutting planes on robust assignment rows."""
    return _drive(p, cfg or CutPlaneConfig(), add_vertex=False, add_row=True,
                  method="alg2")


def combined(p: SumOfMaxProblem, cfg: CutPlaneConfig = None):
    """Both cut families per iteration."""
    return _drive(p, cfg or CutPlaneConfig(), add_vertex=True, add_row=True,
                  method="combined")
