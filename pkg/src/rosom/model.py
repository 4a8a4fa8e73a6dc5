"""Problem model: biaffine forms, sums-of-maxima problems and their JSON form.

A biaffine form is affine in the uncertain vector zeta for fixed decisions x
and affine in x for fixed zeta:

    value(zeta, x) = constant + x_linear.x + zeta_linear.zeta + zeta.cross.x

A problem minimizes a designated decision variable d subject to one
sum-of-maxima constraint over a declared uncertainty set, plus side
constraints (robust linear rows and deterministic variable bounds). All model
values are immutable after construction.
"""

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .uncertainty import SetError, UncertaintySet, set_from_dict


class ProblemFormatError(ValueError):
    """Malformed or inconsistent problem data."""


def _freeze(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


class BiaffineForm:
    __slots__ = ("constant", "x_linear", "zeta_linear", "cross")

    def __init__(self, constant, x_linear, zeta_linear, cross):
        self.constant = float(constant)
        self.x_linear = _freeze(np.atleast_1d(x_linear))
        self.zeta_linear = _freeze(np.atleast_1d(zeta_linear))
        cross = np.asarray(cross, dtype=float)
        if cross.ndim != 2:
            raise ProblemFormatError("cross must be a matrix (rows = zeta components)")
        self.cross = _freeze(cross)
        if self.cross.shape != (self.zeta_linear.size, self.x_linear.size):
            raise ProblemFormatError(
                f"cross shape {self.cross.shape} does not match "
                f"(L={self.zeta_linear.size}, n_x={self.x_linear.size})")
        for arr in (self.x_linear, self.zeta_linear, self.cross):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ProblemFormatError("form coefficients must be finite")
        if not np.isfinite(self.constant):
            raise ProblemFormatError("form constant must be finite")

    @classmethod
    def build(cls, n_x, L, constant=0.0, x_linear=None, zeta_linear=None, cross=None):
        return cls(constant,
                   np.zeros(n_x) if x_linear is None else x_linear,
                   np.zeros(L) if zeta_linear is None else zeta_linear,
                   np.zeros((L, n_x)) if cross is None else cross)

    @property
    def n_x(self):
        return self.x_linear.size

    @property
    def n_zeta(self):
        return self.zeta_linear.size

    def value(self, zeta, x):
        zeta = np.asarray(zeta, dtype=float)
        x = np.asarray(x, dtype=float)
        return float(self.constant + self.x_linear @ x + self.zeta_linear @ zeta
                     + zeta @ self.cross @ x)

    def zeta_affine(self, x):
        """Coefficients (c, c0) of the affine function of zeta at fixed x."""
        x = np.asarray(x, dtype=float)
        return self.zeta_linear + self.cross @ x, self.constant + float(self.x_linear @ x)

    def x_affine(self, zeta):
        """Coefficients (a, a0) of the affine function of x at fixed zeta."""
        zeta = np.asarray(zeta, dtype=float)
        return self.x_linear + self.cross.T @ zeta, self.constant + float(self.zeta_linear @ zeta)

    def is_zeta_free(self, tol=0.0):
        return (np.abs(self.zeta_linear).max(initial=0.0) <= tol
                and np.abs(self.cross).max(initial=0.0) <= tol)

    def zeta_support(self):
        """Indices of zeta coordinates the form can depend on."""
        mask = self.zeta_linear != 0.0
        if self.cross.size:
            mask = mask | (np.abs(self.cross).sum(axis=1) != 0.0)
        return np.flatnonzero(mask)

    def scaled(self, s):
        return BiaffineForm(s * self.constant, s * self.x_linear,
                            s * self.zeta_linear, s * self.cross)

    def negated(self):
        return self.scaled(-1.0)

    def embed(self, n_vars, col_of):
        """Re-home the form into a larger variable space.

        col_of maps each original x column to its new index.
        """
        xl = np.zeros(n_vars)
        xl[col_of] = self.x_linear
        cr = np.zeros((self.n_zeta, n_vars))
        cr[:, col_of] = self.cross
        return BiaffineForm(self.constant, xl, self.zeta_linear, cr)

    def to_dict(self):
        return {"constant": self.constant,
                "x_linear": self.x_linear.tolist(),
                "zeta_linear": self.zeta_linear.tolist(),
                "cross": self.cross.tolist()}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["constant"], d["x_linear"], d["zeta_linear"], d["cross"])
        except KeyError as exc:
            raise ProblemFormatError(f"form missing field {exc}") from None

    def __eq__(self, other):
        return (isinstance(other, BiaffineForm)
                and self.constant == other.constant
                and np.array_equal(self.x_linear, other.x_linear)
                and np.array_equal(self.zeta_linear, other.zeta_linear)
                and np.array_equal(self.cross, other.cross))

    def __repr__(self):
        return f"BiaffineForm(n_x={self.n_x}, L={self.n_zeta}, constant={self.constant})"


def combine_forms(forms, weights=None):
    """Weighted sum of biaffine forms sharing dimensions."""
    if weights is None:
        weights = [1.0] * len(forms)
    f0 = forms[0]
    constant = 0.0
    xl = np.zeros(f0.n_x)
    zl = np.zeros(f0.n_zeta)
    cr = np.zeros((f0.n_zeta, f0.n_x))
    for f, w in zip(forms, weights):
        constant += w * f.constant
        xl += w * f.x_linear
        zl += w * f.zeta_linear
        cr += w * f.cross
    return BiaffineForm(constant, xl, zl, cr)


@dataclass(frozen=True)
class Solution:
    """A solved decision vector with its reported value and method tag."""

    x: np.ndarray
    value: float
    method: str

    def to_dict(self):
        return {"x": np.asarray(self.x, dtype=float).tolist(),
                "value": float(self.value), "method": self.method}


@dataclass(frozen=True)
class RobustSide:
    """Side constraint form(zeta, x) <= 0 for every zeta in the set."""

    form: BiaffineForm


@dataclass(frozen=True)
class VarBound:
    """Deterministic bound lower <= x[var] <= upper (None = unbounded)."""

    var: int
    lower: Optional[float] = None
    upper: Optional[float] = None


SideConstraint = Union[RobustSide, VarBound]


class SumOfMaxProblem:
    """min x[d_index]  s.t.  base(z,x) + sum_i max_j terms[i][j](z,x) <= x[d_index]
    for all z in the uncertainty set, plus side constraints."""

    __slots__ = ("n_x", "d_index", "base", "terms", "uset", "side_constraints")

    def __init__(self, n_x, d_index, base, terms, uset, side_constraints=()):
        self.n_x = int(n_x)
        self.d_index = int(d_index)
        self.base = base
        self.terms = tuple(tuple(t) for t in terms)
        self.uset = uset
        self.side_constraints = tuple(side_constraints)
        self._validate()

    def _validate(self):
        if self.n_x < 1:
            raise ProblemFormatError("need at least one decision variable")
        if not 0 <= self.d_index < self.n_x:
            raise ProblemFormatError("d_index out of range")
        if not isinstance(self.uset, UncertaintySet):
            raise ProblemFormatError("uset must be an UncertaintySet")
        L = self.uset.dim
        if not self.terms:
            raise ProblemFormatError("need at least one max term")
        for i, term in enumerate(self.terms):
            if not term:
                raise ProblemFormatError(f"empty max term at index {i}")
        for f in self.all_forms():
            if f.n_x != self.n_x or f.n_zeta != L:
                raise ProblemFormatError("form dimensions do not match problem")
        for sc in self.side_constraints:
            if isinstance(sc, VarBound):
                if not 0 <= sc.var < self.n_x:
                    raise ProblemFormatError("bound variable index out of range")
                lo = -np.inf if sc.lower is None else sc.lower
                hi = np.inf if sc.upper is None else sc.upper
                if lo > hi:
                    raise ProblemFormatError("empty variable bound interval")
            elif not isinstance(sc, RobustSide):
                raise ProblemFormatError(f"unknown side constraint {sc!r}")

    @property
    def n_terms(self):
        return len(self.terms)

    @property
    def n_zeta(self):
        return self.uset.dim

    def all_forms(self):
        yield self.base
        for term in self.terms:
            yield from term
        for sc in self.side_constraints:
            if isinstance(sc, RobustSide):
                yield sc.form

    def robust_sides(self):
        return [sc.form for sc in self.side_constraints if isinstance(sc, RobustSide)]

    def var_bounds(self):
        lb = np.full(self.n_x, -np.inf)
        ub = np.full(self.n_x, np.inf)
        for sc in self.side_constraints:
            if isinstance(sc, VarBound):
                if sc.lower is not None:
                    lb[sc.var] = max(lb[sc.var], sc.lower)
                if sc.upper is not None:
                    ub[sc.var] = min(ub[sc.var], sc.upper)
        return lb, ub

    def assignment_count(self):
        total = 1
        for term in self.terms:
            total *= len(term)
        return total

    def __eq__(self, other):
        return (isinstance(other, SumOfMaxProblem)
                and self.to_dict() == other.to_dict())

    def to_dict(self):
        side = []
        for sc in self.side_constraints:
            if isinstance(sc, RobustSide):
                side.append({"type": "robust", "form": sc.form.to_dict()})
            else:
                side.append({"type": "bound", "var": sc.var,
                             "lower": sc.lower, "upper": sc.upper})
        return {"n_x": self.n_x, "d_index": self.d_index,
                "set": self.uset.to_dict(),
                "base": self.base.to_dict(),
                "terms": [[f.to_dict() for f in term] for term in self.terms],
                "side_constraints": side}

    @classmethod
    def from_dict(cls, d):
        try:
            uset = set_from_dict(d["set"])
            base = BiaffineForm.from_dict(d["base"])
            terms = [[BiaffineForm.from_dict(f) for f in term] for term in d["terms"]]
            side = []
            for sc in d.get("side_constraints", []):
                if sc.get("type") == "robust":
                    side.append(RobustSide(BiaffineForm.from_dict(sc["form"])))
                elif sc.get("type") == "bound":
                    side.append(VarBound(int(sc["var"]), sc.get("lower"), sc.get("upper")))
                else:
                    raise ProblemFormatError(f"unknown side constraint type {sc.get('type')!r}")
            return cls(d["n_x"], d["d_index"], base, terms, uset, side)
        except SetError as exc:
            raise ProblemFormatError(str(exc)) from exc
        except (KeyError, TypeError) as exc:
            raise ProblemFormatError(f"malformed problem document: {exc}") from exc


def evaluate_lhs(problem: SumOfMaxProblem, zeta, x) -> float:
    """base(zeta,x) + sum_i max_j term_ij(zeta,x)."""
    zeta = np.asarray(zeta, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if zeta.size != problem.n_zeta or x.size != problem.n_x:
        raise ProblemFormatError("zeta or x dimension mismatch")
    total = problem.base.value(zeta, x)
    for term in problem.terms:
        total += max(f.value(zeta, x) for f in term)
    return total


def parse_problem(text: str) -> SumOfMaxProblem:
    """Parse the JSON problem document; inverse of serialize_problem."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"invalid JSON: {exc}") from exc
    return SumOfMaxProblem.from_dict(doc)


def serialize_problem(problem: SumOfMaxProblem) -> str:
    """Canonical JSON (sorted keys, two-space indent, no NaN)."""
    try:
        return json.dumps(problem.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"
    except ValueError as exc:
        raise ProblemFormatError(f"problem not serializable: {exc}") from exc
