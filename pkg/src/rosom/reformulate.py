"""Reformulations of sums-of-maxima problems.

Each operation transforms a SumOfMaxProblem into a RobustLP: finitely many
variables, deterministic linear rows, and robust rows (biaffine in zeta and
the variables, required <= 0 for every zeta in their set). Conservative
reformulations (rcr, aarcr, sum_split) bound the exact optimum from above;
eorlc, vertex_enumeration, the special cases and the scenario formulation
are exact. Solving is delegated to the robust_lp module so one pessimization
engine serves every formulation and every set.
"""

import itertools

import numpy as np

from .model import BiaffineForm, RobustSide, SumOfMaxProblem, VarBound, combine_forms
from .uncertainty import (Box, Ellipsoid, LiftedPolytope, SimplexProduct,
                          UncertaintySet)


class ReformulationError(ValueError):
    pass


class CapExceeded(ReformulationError):
    pass


class UnsupportedSet(ReformulationError):
    pass


class RobustRow:
    """form(zeta, v) <= 0 for all zeta in uset; tag records provenance.

    relief names a variable with coefficient -1 in the form whose increase
    repairs any violation (an analysis variable or d); relief_level orders
    repairs when relief variables feed other rows (epigraph variables first,
    then d). Rows without relief (robust side constraints on x) disable the
    stabilized in-out cut loop.
    """

    __slots__ = ("form", "uset", "tag", "relief", "relief_level")

    def __init__(self, form: BiaffineForm, uset: UncertaintySet, tag: str = "",
                 relief=None, relief_level: int = 0):
        self.form = form
        self.uset = uset
        self.tag = tag
        self.relief = relief
        self.relief_level = relief_level


class RobustLP:
    """Finite variables + deterministic rows + robust rows; minimize d.

    The variable registry (var_names) maps every analysis variable to its
    origin. Built incrementally by the reformulations; treated as immutable
    by the solvers.
    """

    def __init__(self):
        self.var_names = []
        self.lb = []
        self.ub = []
        self.det_rows = []   # (coef vector over vars, rhs): coef.v <= rhs
        self.eq_rows = []    # (coef, rhs): coef.v == rhs
        self.robust_rows = []
        self.objective = None
        self.d_var = None
        self.x_indices = None
        self.n_zeta = 0
        self.exact = False
        self.method = ""

    @property
    def n_vars(self):
        return len(self.var_names)

    def add_var(self, name, lb=-np.inf, ub=np.inf):
        self.var_names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        return len(self.var_names) - 1

    def add_det_row(self, coef_pairs, rhs):
        """coef_pairs: list of (var index, coefficient)."""
        self.det_rows.append((list(coef_pairs), float(rhs)))

    def add_eq_row(self, coef_pairs, rhs):
        self.eq_rows.append((list(coef_pairs), float(rhs)))

    def add_robust(self, form, uset, tag="", relief=None, relief_level=0):
        self.robust_rows.append(RobustRow(form, uset, tag, relief, relief_level))

    def det_matrices(self):
        n = self.n_vars
        A = np.zeros((len(self.det_rows), n))
        b = np.zeros(len(self.det_rows))
        for r, (pairs, rhs) in enumerate(self.det_rows):
            for j, c in pairs:
                A[r, j] += c
            b[r] = rhs
        E = np.zeros((len(self.eq_rows), n))
        f = np.zeros(len(self.eq_rows))
        for r, (pairs, rhs) in enumerate(self.eq_rows):
            for j, c in pairs:
                E[r, j] += c
            f[r] = rhs
        return A, b, E, f

    def bounds(self):
        return np.asarray(self.lb, dtype=float), np.asarray(self.ub, dtype=float)

    def objective_vector(self):
        c = np.zeros(self.n_vars)
        c[self.d_var] = 1.0
        return c


def _pad_form(form: BiaffineForm, n_vars: int, extra_pairs=()):
    """Embed a problem-space form into the RobustLP variable space and add
    linear-variable contributions: extra_pairs = [(var, coef)] or
    [(var, coef, zeta_col)] for cross entries."""
    xl = np.zeros(n_vars)
    xl[: form.n_x] = form.x_linear
    cr = np.zeros((form.n_zeta, n_vars))
    cr[:, : form.n_x] = form.cross
    zl = form.zeta_linear.copy()
    for entry in extra_pairs:
        if len(entry) == 2:
            j, c = entry
            xl[j] += c
        else:
            j, c, zrow = entry
            cr[zrow, j] += c
    return BiaffineForm(form.constant, xl, zl, cr)


def _skeleton(p: SumOfMaxProblem, method: str) -> RobustLP:
    """x variables, bounds, objective and the robust side rows of p."""
    rlp = RobustLP()
    lb, ub = p.var_bounds()
    for i in range(p.n_x):
        name = "d" if i == p.d_index else f"x[{i}]"
        rlp.add_var(name, lb[i], ub[i])
    rlp.d_var = p.d_index
    rlp.x_indices = np.arange(p.n_x)
    rlp.n_zeta = p.n_zeta
    rlp.method = method
    return rlp


def _attach_sides(rlp: RobustLP, p: SumOfMaxProblem):
    for k, form in enumerate(p.robust_sides()):
        rlp.add_robust(_pad_form_to(form, rlp.n_vars), p.uset, tag=f"side[{k}]")


def _pad_form_to(form: BiaffineForm, n_vars: int):
    if form.n_x == n_vars:
        return form
    return _pad_form(form, n_vars)


def rcr(p: SumOfMaxProblem) -> RobustLP:
    """RC of the exact-when-deterministic reformulation: one fixed analysis
    variable per max term; conservative because all terms take their worst
    cases simultaneously."""
    rlp = _skeleton(p, "rcr")
    y = [rlp.add_var(f"y[{i}]") for i in range(p.n_terms)]
    top_extra = [(yi, 1.0) for yi in y] + [(rlp.d_var, -1.0)]
    rlp.add_robust(_pad_form(p.base, rlp.n_vars, top_extra), p.uset, tag="top",
                   relief=rlp.d_var, relief_level=1)
    for i, term in enumerate(p.terms):
        for j, f in enumerate(term):
            rlp.add_robust(_pad_form(f, rlp.n_vars, [(y[i], -1.0)]), p.uset,
                           tag=f"epi[{i},{j}]", relief=y[i], relief_level=0)
    _attach_sides(rlp, p)
    return rlp


def aarcr(p: SumOfMaxProblem) -> RobustLP:
    """Affinely adjustable variant: y_i = v_i + w_i.zeta with w_i over the
    full zeta vector (restricting components can add conservatism, so it is
    never attempted)."""
    rlp = _skeleton(p, "aarcr")
    L = p.n_zeta
    v = [rlp.add_var(f"v[{i}]") for i in range(p.n_terms)]
    w = [[rlp.add_var(f"w[{i}][{l}]") for l in range(L)] for i in range(p.n_terms)]
    top_extra = [(rlp.d_var, -1.0)]
    for i in range(p.n_terms):
        top_extra.append((v[i], 1.0))
        top_extra.extend((w[i][l], 1.0, l) for l in range(L))
    rlp.add_robust(_pad_form(p.base, rlp.n_vars, top_extra), p.uset, tag="top",
                   relief=rlp.d_var, relief_level=1)
    for i, term in enumerate(p.terms):
        for j, f in enumerate(term):
            extra = [(v[i], -1.0)] + [(w[i][l], -1.0, l) for l in range(L)]
            rlp.add_robust(_pad_form(f, rlp.n_vars, extra), p.uset,
                           tag=f"epi[{i},{j}]", relief=v[i], relief_level=0)
    _attach_sides(rlp, p)
    return rlp


def _is_zero_form(f: BiaffineForm) -> bool:
    return (f.constant == 0.0 and not f.x_linear.any() and not f.zeta_linear.any()
            and not f.cross.any())


def _negative_multiple(f: BiaffineForm, g: BiaffineForm):
    """lam > 0 with g = -lam * f, or None."""
    fv = np.concatenate([[f.constant], f.x_linear, f.zeta_linear, f.cross.ravel()])
    gv = np.concatenate([[g.constant], g.x_linear, g.zeta_linear, g.cross.ravel()])
    nz = np.flatnonzero(fv)
    if nz.size == 0:
        return None
    lam = -gv[nz[0]] / fv[nz[0]]
    if lam <= 0:
        return None
    if np.allclose(gv, -lam * fv, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(fv).max())):
        return lam
    return None


def preprocess_terms(p: SumOfMaxProblem, rlp: RobustLP):
    """EORLC preprocessing (always applied; a no-op when inapplicable).

    1. Terms with several zeta-free functions get them collapsed into one new
       analysis variable (with deterministic epigraph rows).
    2. Term pairs of the shape a*max{0, f} + b*max{0, -(b/a) f} are merged
       into the single term max{a f, -b f}.

    Returns the preprocessed term lists as forms over rlp's variable space.
    """
    collapse = {}
    for i, term in enumerate(p.terms):
        zf = [j for j, f in enumerate(term) if f.is_zeta_free()]
        if len(zf) >= 2:
            collapse[i] = (zf, rlp.add_var(f"u[{i}]"))
    n = rlp.n_vars  # final width: pad all forms to it
    terms = []
    for i, term in enumerate(p.terms):
        if i in collapse:
            zf, u = collapse[i]
            for j in zf:
                f = term[j]
                pairs = [(k, c) for k, c in enumerate(f.x_linear) if c != 0.0]
                rlp.add_det_row(pairs + [(u, -1.0)], -f.constant)
            keep = [_pad_form_to(term[j], n) for j in range(len(term)) if j not in zf]
            xl = np.zeros(n)
            xl[u] = 1.0
            uform = BiaffineForm(0.0, xl, np.zeros(p.n_zeta), np.zeros((p.n_zeta, n)))
            terms.append(keep + [uform])
        else:
            terms.append([_pad_form_to(f, n) for f in term])

    # pairwise merge of max{0,f} / max{0,-lam f} terms
    merged = []
    used = [False] * len(terms)
    for i in range(len(terms)):
        if used[i]:
            continue
        ti = terms[i]
        cand = None
        if len(ti) == 2 and any(_is_zero_form(f) for f in ti):
            fi = ti[0] if _is_zero_form(ti[1]) else ti[1]
            if not _is_zero_form(fi):
                for k in range(i + 1, len(terms)):
                    if used[k]:
                        continue
                    tk = terms[k]
                    if len(tk) != 2 or not any(_is_zero_form(f) for f in tk):
                        continue
                    fk = tk[0] if _is_zero_form(tk[1]) else tk[1]
                    if _is_zero_form(fk):
                        continue
                    if _negative_multiple(fi, fk) is not None:
                        cand = (k, fi, fk)
                        break
        if cand is None:
            merged.append(ti)
        else:
            k, fi, fk = cand
            used[k] = True
            merged.append([fi, fk])
        used[i] = True
    return merged


def eorlc(p: SumOfMaxProblem, cap: int = 10 ** 5) -> RobustLP:
    """Enumeration of robust linear constraints: one robust row per
    assignment of a maximizer to each term; exact."""
    rlp = _skeleton(p, "eorlc")
    rlp.exact = True
    terms = preprocess_terms(p, rlp)
    count = 1
    for t in terms:
        count *= len(t)
        if count > cap:
            raise CapExceeded(f"eorlc would enumerate more than {cap} rows")
    base = _pad_form_to(p.base, rlp.n_vars)
    d_col = rlp.d_var
    for assign in itertools.product(*[range(len(t)) for t in terms]):
        chosen = [base] + [terms[i][j] for i, j in enumerate(assign)]
        row = combine_forms(chosen)
        xl = row.x_linear.copy()
        xl[d_col] -= 1.0
        row = BiaffineForm(row.constant, xl, row.zeta_linear, row.cross)
        rlp.add_robust(row, p.uset, tag=f"eorlc{assign}", relief=rlp.d_var)
    _attach_sides(rlp, p)
    return rlp


def _add_vertex_block(rlp: RobustLP, p: SumOfMaxProblem, zeta, label: str):
    """Epigraph rows of the sum-of-max constraint at one fixed zeta."""
    y = [rlp.add_var(f"y^{label}[{i}]") for i in range(p.n_terms)]
    a, a0 = p.base.x_affine(zeta)
    pairs = [(j, c) for j, c in enumerate(a) if c != 0.0]
    pairs += [(yi, 1.0) for yi in y] + [(rlp.d_var, -1.0)]
    rlp.add_det_row(pairs, -a0)
    for i, term in enumerate(p.terms):
        for f in term:
            a, a0 = f.x_affine(zeta)
            pairs = [(j, c) for j, c in enumerate(a) if c != 0.0]
            pairs.append((y[i], -1.0))
            rlp.add_det_row(pairs, -a0)
    return y


def vertex_enumeration(p: SumOfMaxProblem, cap: int = 10 ** 5) -> RobustLP:
    """Exact epigraph formulation at every extreme point of the set; plain LP
    (robust side rows are expanded at the same vertices)."""
    verts = p.uset.vertices(cap)
    if verts is None:
        if p.uset.kind in ("ellipsoid", "truncated_ellipsoid"):
            raise UnsupportedSet(
                f"{p.uset.kind} has no finite vertex list; use eorlc or a cutting-plane method")
        if p.uset.kind in ("box", "vpolytope", "simplex_product"):
            raise CapExceeded(f"vertex count exceeds the cap {cap}")
        raise UnsupportedSet(
            f"vertex enumeration is not supported for {p.uset.kind}; "
            "use eorlc or a cutting-plane method")
    rlp = _skeleton(p, "vertex")
    rlp.exact = True
    for k, zeta in enumerate(verts):
        _add_vertex_block(rlp, p, zeta, str(k))
    for form in p.robust_sides():
        for zeta in verts:
            a, a0 = form.x_affine(zeta)
            pairs = [(j, c) for j, c in enumerate(a) if c != 0.0]
            rlp.add_det_row(pairs, -a0)
    return rlp


def default_partition(n_terms: int, n_groups: int):
    """Consecutive index blocks of (near) equal size."""
    if not 1 <= n_groups <= n_terms:
        raise ReformulationError("group count must be in 1..n_terms")
    bounds = np.linspace(0, n_terms, n_groups + 1).round().astype(int)
    return [list(range(bounds[g], bounds[g + 1])) for g in range(n_groups)]


def sum_split(p: SumOfMaxProblem, partition, adjustable: bool = False,
              per_group_cap: int = 10 ** 5) -> RobustLP:
    """Partition the terms into groups, merge the maxima inside each group
    exactly (EORLC on the group), and keep one analysis variable per group.
    Refining the partition never decreases the value; singleton groups
    reproduce rcr and the single full group is exact."""
    seen = set()
    for g in partition:
        for i in g:
            if i in seen or not 0 <= i < p.n_terms:
                raise ReformulationError("partition must be a disjoint cover of the terms")
            seen.add(i)
    if len(seen) != p.n_terms:
        raise ReformulationError("partition must cover every term")

    rlp = _skeleton(p, "split")
    L = p.n_zeta
    yg = []
    wg = []
    for g in range(len(partition)):
        yg.append(rlp.add_var(f"y_g[{g}]"))
        wg.append([rlp.add_var(f"w_g[{g}][{l}]") for l in range(L)] if adjustable else None)

    top_extra = [(rlp.d_var, -1.0)]
    for g in range(len(partition)):
        top_extra.append((yg[g], 1.0))
        if adjustable:
            top_extra.extend((wg[g][l], 1.0, l) for l in range(L))
    rlp.add_robust(_pad_form(p.base, rlp.n_vars, top_extra), p.uset, tag="top",
                   relief=rlp.d_var, relief_level=1)

    for g, group in enumerate(partition):
        count = 1
        for i in group:
            count *= len(p.terms[i])
        if count > per_group_cap:
            raise CapExceeded(f"group {g} would merge more than {per_group_cap} functions")
        for assign in itertools.product(*[range(len(p.terms[i])) for i in group]):
            chosen = [_pad_form_to(p.terms[i][j], rlp.n_vars)
                      for i, j in zip(group, assign)]
            row = combine_forms(chosen) if chosen else BiaffineForm.build(rlp.n_vars, L)
            xl = row.x_linear.copy()
            xl[yg[g]] -= 1.0
            cr = row.cross.copy()
            if adjustable:
                for l in range(L):
                    cr[l, wg[g][l]] -= 1.0
            rlp.add_robust(BiaffineForm(row.constant, xl, row.zeta_linear, cr),
                           p.uset, tag=f"group[{g}]{assign}", relief=yg[g],
                           relief_level=0)
    _attach_sides(rlp, p)
    return rlp


# ---------------------------------------------------------------------------
# special cases with exact RC-R


def special_product_sets(p: SumOfMaxProblem, block_map) -> RobustLP:
    """Case 1: the set is a product across declared zeta blocks and term i
    only touches block i, so every analysis variable attains its worst case
    simultaneously and rcr is exact."""
    if len(block_map) != p.n_terms:
        raise ReformulationError("block_map must assign one zeta block per term")
    blocks = [set(b) for b in block_map]
    for i in range(p.n_terms):
        for k in range(i + 1, p.n_terms):
            if blocks[i] & blocks[k]:
                raise ReformulationError("zeta blocks must be pairwise disjoint")
    covered = set().union(*blocks) if blocks else set()
    base_supp = set(p.base.zeta_support().tolist())
    if base_supp & covered:
        raise ReformulationError("base term may not touch any term block")
    for i, term in enumerate(p.terms):
        for f in term:
            supp = set(f.zeta_support().tolist())
            if not supp <= blocks[i]:
                raise ReformulationError(f"term {i} depends on a foreign zeta block")
    if isinstance(p.uset, Box):
        pass  # a box is a product of per-coordinate intervals
    elif isinstance(p.uset, SimplexProduct):
        starts = p.uset._starts
        simplex_blocks = [set(range(starts[k], starts[k + 1]))
                          for k in range(len(p.uset.blocks))]
        for b in blocks:
            rem = set(b)
            for sb in simplex_blocks:
                if rem & sb:
                    if not sb <= b:
                        raise ReformulationError(
                            "term blocks must align with the simplex blocks")
                    rem -= sb
            if rem:
                raise ReformulationError("term blocks must align with the simplex blocks")
    else:
        raise ReformulationError(
            f"{p.uset.kind} is not a product across the declared blocks")
    rlp = rcr(p)
    rlp.method = "special_product"
    rlp.exact = True
    return rlp


def special_centrosymmetric_abs(p: SumOfMaxProblem) -> RobustLP:
    """Case 2: every term is |alpha_i(x) + beta_i(x).zeta| with pairwise
    disjoint beta supports over a sign-symmetric set centered at 0. The
    absolute value moves to the zeta-free part, whose epigraph variables are
    exact because they no longer depend on zeta."""
    if not isinstance(p.uset, (Box, Ellipsoid)) or np.any(p.uset.center != 0.0):
        raise ReformulationError(
            "set must be a Box or Ellipsoid centered at the origin")
    seen = set()
    base_supp = set(p.base.zeta_support().tolist())
    firsts = []
    for i, term in enumerate(p.terms):
        if len(term) != 2:
            raise ReformulationError(f"term {i} is not an absolute value")
        f, g = term
        lam = _negative_multiple(f, g)
        if lam is None or abs(lam - 1.0) > 1e-12:
            raise ReformulationError(f"term {i} is not an absolute value")
        supp = set(f.zeta_support().tolist())
        if supp & seen:
            raise ReformulationError("beta supports must be pairwise disjoint")
        if supp & base_supp:
            raise ReformulationError("base term must not share zeta support with a term")
        seen |= supp
        firsts.append(f)

    rlp = _skeleton(p, "special_abs")
    rlp.exact = True
    t = [rlp.add_var(f"t[{i}]") for i in range(p.n_terms)]
    for i, f in enumerate(firsts):
        for sign in (1.0, -1.0):
            pairs = [(j, sign * c) for j, c in enumerate(f.x_linear) if c != 0.0]
            pairs.append((t[i], -1.0))
            rlp.add_det_row(pairs, -sign * f.constant)
    row = _pad_form_to(p.base, rlp.n_vars)
    zl = row.zeta_linear.copy()
    cr = row.cross.copy()
    xl = row.x_linear.copy()
    xl[rlp.d_var] -= 1.0
    for i, f in enumerate(firsts):
        xl[t[i]] += 1.0
        zl += f.zeta_linear
        cr[:, : p.n_x] += f.cross
    rlp.add_robust(BiaffineForm(row.constant, xl, zl, cr), p.uset, tag="top",
                   relief=rlp.d_var)
    _attach_sides(rlp, p)
    return rlp


def _affine_zeta(spec, L):
    a0, avec = spec
    avec = np.asarray(avec, dtype=float).reshape(-1)
    if avec.size != L:
        raise ReformulationError("alpha/beta vector length must equal the zeta dimension")
    return float(a0), avec


def special_common_factor(p: SumOfMaxProblem, alphas, betas) -> RobustLP:
    """Case 3: term i is alpha_i(zeta) + beta_i(zeta) * g_ij(x). When every
    beta_i is nonnegative on the set the factored rcr is exact; otherwise the
    set is split into the 2^|I| sign regions of the betas (polyhedral sets
    only), with min-epigraph variables on the negative side. Empty regions
    are dropped."""
    L = p.n_zeta
    if len(alphas) != p.n_terms or len(betas) != p.n_terms:
        raise ReformulationError("need alpha and beta per term")
    alphas = [_affine_zeta(a, L) for a in alphas]
    betas = [_affine_zeta(b, L) for b in betas]

    # recover g_ij(x) and verify the factorization
    g = []
    for i, term in enumerate(p.terms):
        a0, avec = alphas[i]
        b0, bvec = betas[i]
        gi = []
        for j, f in enumerate(term):
            const = f.constant - a0
            zl = f.zeta_linear - avec
            if abs(b0) > 1e-12:
                c = const / b0
                w = f.x_linear / b0
            else:
                nz = np.flatnonzero(bvec)
                if nz.size == 0:
                    raise ReformulationError(f"beta[{i}] is identically zero")
                l = nz[0]
                c = zl[l] / bvec[l]
                w = f.cross[l] / bvec[l]
            scale = 1.0 + abs(f.constant) + np.abs(f.x_linear).max(initial=0.0) \
                + np.abs(f.zeta_linear).max(initial=0.0) + np.abs(f.cross).max(initial=0.0)
            ok = (abs(const - b0 * c) <= 1e-9 * scale
                  and np.allclose(f.x_linear, b0 * w, rtol=0, atol=1e-9 * scale)
                  and np.allclose(zl, c * bvec, rtol=0, atol=1e-9 * scale)
                  and np.allclose(f.cross, np.outer(bvec, w), rtol=0, atol=1e-9 * scale))
            if not ok:
                raise ReformulationError(
                    f"term ({i},{j}) does not factor through the declared alpha/beta")
            gi.append((c, w))
        g.append(gi)

    beta_min = []
    for b0, bvec in betas:
        val, _ = p.uset.max_affine(-bvec, -b0)
        beta_min.append(-val)

    rlp = _skeleton(p, "special_factor")
    rlp.exact = True
    m = [rlp.add_var(f"m[{i}]") for i in range(p.n_terms)]
    for i, gi in enumerate(g):
        for c, w in gi:
            pairs = [(j, cv) for j, cv in enumerate(w) if cv != 0.0]
            pairs.append((m[i], -1.0))
            rlp.add_det_row(pairs, -c)

    def region_row(pos_set, uset, tag):
        # base + sum alpha_i + sum_{pos} beta_i m_i + sum_{neg} beta_i n_i - d <= 0
        row = _pad_form_to(p.base, rlp.n_vars)
        const = row.constant
        xl = row.x_linear.copy()
        zl = row.zeta_linear.copy()
        cr = row.cross.copy()
        xl[rlp.d_var] -= 1.0
        for i in range(p.n_terms):
            a0, avec = alphas[i]
            b0, bvec = betas[i]
            const += a0
            zl += avec
            var = m[i] if i in pos_set else n[i]
            xl[var] += b0
            cr[:, var] += bvec
        rlp.add_robust(BiaffineForm(const, xl, zl, cr), uset, tag=tag,
                       relief=rlp.d_var)

    if all(bm >= -1e-12 for bm in beta_min):
        n = m  # unused on the all-nonnegative branch
        region_row(set(range(p.n_terms)), p.uset, tag="factored")
        _attach_sides(rlp, p)
        return rlp

    hrep = p.uset.lifted_hrep()
    if hrep is None:
        raise UnsupportedSet(
            "sign-indefinite beta requires a polyhedral set (box, hpolytope, "
            "vpolytope or budgeted)")
    n = [rlp.add_var(f"n[{i}]") for i in range(p.n_terms)]
    for i, gi in enumerate(g):
        for c, w in gi:
            pairs = [(j, -cv) for j, cv in enumerate(w) if cv != 0.0]
            pairs.append((n[i], 1.0))
            rlp.add_det_row(pairs, c)  # n_i <= g_ij(x)

    P, Q, r = hrep
    for pos in itertools.chain.from_iterable(
            itertools.combinations(range(p.n_terms), k) for k in range(p.n_terms + 1)):
        pos_set = set(pos)
        extraP = []
        extraR = []
        for i in range(p.n_terms):
            b0, bvec = betas[i]
            if i in pos_set:
                extraP.append(-bvec)
                extraR.append(b0)
            else:
                extraP.append(bvec)
                extraR.append(-b0)
        region = LiftedPolytope(np.vstack([P] + [np.atleast_2d(e) for e in extraP]),
                                np.vstack([Q, np.zeros((len(extraP), Q.shape[1]))]),
                                np.concatenate([r, extraR]))
        if region.is_empty():
            continue
        region_row(pos_set, region, tag=f"region{tuple(sorted(pos_set))}")
    _attach_sides(rlp, p)
    return rlp


# ---------------------------------------------------------------------------
# biaffine-uncertainty reduction and the scenario formulation


class TriaffineConstraint:
    """base(z2, x) + sum_i z1_i * terms[i](z2, x) <= x[d_index], required for
    every ||z1||_inf <= rho and every z2 in a second uncertainty set."""

    def __init__(self, n_x, d_index, base, terms):
        self.n_x = int(n_x)
        self.d_index = int(d_index)
        self.base = base
        self.terms = list(terms)
        for f in [base] + self.terms:
            if f.n_x != self.n_x:
                raise ReformulationError("triaffine form dimensions disagree")
        if not 0 <= self.d_index < self.n_x:
            raise ReformulationError("d_index out of range")


def biaffine_reduce(t: TriaffineConstraint, box_radius: float,
                    z2: UncertaintySet) -> SumOfMaxProblem:
    """Eliminate the box-uncertain factor: maximizing over ||z1||_inf <= rho
    turns each bilinear term into rho * |terms[i](z2, x)|, a sum-of-maxima
    problem with |J| = 2 per term over the remaining set."""
    rho = float(box_radius)
    if rho < 0:
        raise ReformulationError("box radius must be nonnegative")
    terms = []
    for f in t.terms:
        scaled = f.scaled(rho)
        terms.append([scaled, scaled.negated()])
    return SumOfMaxProblem(t.n_x, t.d_index, t.base, terms, z2, [])


def scenario_formulation(p: SumOfMaxProblem) -> RobustLP:
    """Appendix-style scenario LP for simplex-product uncertainty: analysis
    variables z_k per block, w_iks per block vertex and shift variables
    y_ijk summing to zero across blocks; equivalent to aarcr on these sets."""
    if not isinstance(p.uset, SimplexProduct):
        raise UnsupportedSet("scenario formulation requires a simplex-product set")
    uset = p.uset
    K = len(uset.blocks)
    starts = uset._starts
    nI = p.n_terms

    rlp = _skeleton(p, "scenario")
    z = [rlp.add_var(f"z_k[{k}]") for k in range(K)]
    w = [[[rlp.add_var(f"w_iks[{i}][{k}][{s}]") for s in range(uset.blocks[k])]
          for k in range(K)] for i in range(nI)]
    y = [[[rlp.add_var(f"y_ijk[{i}][{j}][{k}]") for k in range(K)]
          for j in range(len(p.terms[i]))] for i in range(nI)]

    rlp.add_det_row([(zk, 1.0) for zk in z] + [(rlp.d_var, -1.0)], 0.0)
    for k in range(K):
        for s in range(uset.blocks[k]):
            pairs = [(z[k], -1.0)] + [(w[i][k][s], 1.0) for i in range(nI)]
            rlp.add_det_row(pairs, 0.0)
    for i, term in enumerate(p.terms):
        for j, f in enumerate(term):
            folded = combine_forms([f, p.base.scaled(1.0 / nI)])
            for k in range(K):
                for s in range(uset.blocks[k]):
                    l = starts[k] + s
                    # block-k part of the folded form at zeta_k = e_s; the
                    # zeta-free part is charged to block 0
                    const = folded.zeta_linear[l]
                    coefs = folded.cross[l].copy()
                    if k == 0:
                        const += folded.constant
                        coefs = coefs + folded.x_linear
                    pairs = [(col, c) for col, c in enumerate(coefs) if c != 0.0]
                    pairs.append((y[i][j][k], 1.0))
                    pairs.append((w[i][k][s], -1.0))
                    rlp.add_det_row(pairs, -const)
            rlp.add_eq_row([(y[i][j][k], 1.0) for k in range(K)], 0.0)
    _attach_sides(rlp, p)
    return rlp
