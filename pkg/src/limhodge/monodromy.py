"""Monodromy weight filtrations of nilpotent endomorphisms.

weight_filtration implements the classical top-and-bottom peeling recursion
and asserts both defining properties before returning.  The relative
filtration is built by induction on the number of jumps of the base
filtration; at each step the extension freedom is a finite-dimensional affine
space and the shift conditions cut it by an exact linear system, so existence
is decided exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import NonCommuting, NotCompatible, NotNilpotent
from .filtration import Filtration, INC
from .gaussq import QI
from .linalg import (LinearMap, Space, Subquotient, Subspace, full_space,
                     image, kernel, mat, mat_mul, mat_transpose, solve_right,
                     subquotient_map, vec_add, vec_scale, zero_space,
                     zero_vec)


@dataclass(frozen=True)
class NilpotentEndo:
    space: Space
    n: LinearMap
    index: int  # smallest l with N^l = 0

    @staticmethod
    def of(nmap: LinearMap) -> "NilpotentEndo":
        assert nmap.source == nmap.target
        dim = nmap.source.dim
        power = LinearMap.identity(nmap.source)
        for l in range(dim + 1):
            if power.is_zero() or power.source.dim == 0:
                return NilpotentEndo(nmap.source, nmap, l)
            power = nmap.compose(power)
        if power.is_zero():
            return NilpotentEndo(nmap.source, nmap, dim)
        raise NotNilpotent("endomorphism is not nilpotent")


def _restrict_endo(nmap: LinearMap, sub: Subspace) -> LinearMap:
    """Matrix of nmap on sub, in sub's canonical basis coordinates."""
    cols = [sub.coords(nmap.apply(b)) for b in sub.basis]
    sp = Space(sub.dim)
    if not cols:
        return LinearMap.zero(sp, sp)
    return LinearMap(sp, sp, mat_transpose(mat(cols)))


def check_weight_filtration(nmap: LinearMap, w: Filtration) -> bool:
    """Both defining properties: N W_m <= W_{m-2} and N^l: gr_l = gr_{-l}."""
    wi = w.as_increasing()
    lo, hi = wi.window()
    dim = nmap.source.dim
    for m in range(lo, hi + 1):
        tgt = wi.value(m - 2)
        if not all(tgt.contains(nmap.apply(b)) for b in wi.value(m).basis):
            return False
    for l in range(1, max(abs(lo), abs(hi)) + 1):
        top = Subquotient(dim, wi.value(l), wi.value(l - 1))
        bot = Subquotient(dim, wi.value(-l), wi.value(-l - 1))
        if top.dim != bot.dim:
            return False
        if top.dim == 0:
            continue
        try:
            ind = subquotient_map(nmap.power(l), top, bot)
        except NotCompatible:
            return False
        if ind.rank() != top.dim:
            return False
    return True


def weight_filtration(nil: NilpotentEndo) -> Filtration:
    """The monodromy weight filtration W(N), increasing and centered at 0."""
    nmap = nil.n
    dim = nil.space.dim
    steps = _weight_steps(nmap, dim)
    out = Filtration(INC, dim, steps)
    assert check_weight_filtration(nmap, out), "weight filtration axioms failed"
    return out


def _weight_steps(nmap: LinearMap, dim: int) -> Dict[int, Subspace]:
    if dim == 0:
        return {0: zero_space(0)}
    l = NilpotentEndo.of(nmap).index
    if l <= 1:
        return {-1: zero_space(dim), 0: full_space(dim)}
    k = l - 1
    nk = nmap.power(k)
    ker_k = kernel(nk)
    im_k = image(nk)
    steps = {k: full_space(dim), -k - 1: zero_space(dim),
             k - 1: ker_k, -k: im_k}
    mid = Subquotient(dim, ker_k, im_k)
    if mid.dim:
        nm = subquotient_map(nmap, mid, mid)
        inner = _weight_steps(nm, mid.dim)
        for j in range(-k + 1, k - 1):
            sub = Filtration(INC, mid.dim, inner).value(j)
            lifted = [mid.lift(c) for c in sub.basis]
            steps[j] = im_k.sum(Subspace(dim, lifted))
    else:
        for j in range(-k + 1, k - 1):
            steps[j] = im_k
    return steps


# ---------------------------------------------------------------------------
# relative monodromy filtration
# ---------------------------------------------------------------------------

@dataclass
class RelativeResult:
    exists: bool
    filtration: Optional[Filtration] = None
    witness_weight: Optional[int] = None
    reason: str = ""


def check_relative_filtration(nmap: LinearMap, w: Filtration,
                              m: Filtration) -> bool:
    """N M_l <= M_{l-2} and M induces W(gr N)[m] on every gr^W_m."""
    wi, mi = w.as_increasing(), m.as_increasing()
    dim = nmap.source.dim
    lo, hi = mi.window()
    for l in range(lo, hi + 1):
        tgt = mi.value(l - 2)
        if not all(tgt.contains(nmap.apply(b)) for b in mi.value(l).basis):
            return False
    wlo, whi = wi.window()
    for mm in range(wlo, whi + 1):
        grm = Subquotient(dim, wi.value(mm), wi.value(mm - 1))
        if grm.dim == 0:
            continue
        ngr = subquotient_map(nmap, grm, grm)
        want = weight_filtration(NilpotentEndo.of(ngr)).shift(mm)
        got = Filtration(INC, grm.dim,
                         {l: grm.induced_subspace(mi.value(l))
                          for l in range(lo, hi + 1)})
        if not want.same_function(got):
            return False
    return True


def relative_weight_filtration(nil: NilpotentEndo,
                               w: Filtration) -> RelativeResult:
    """Deligne's relative monodromy filtration M(N; W), or DoesNotExist."""
    nmap = nil.n
    dim = nil.space.dim
    wi = w.as_increasing()
    if wi.ambient_dim != dim:
        raise NotCompatible("filtration lives on a different space")
    lo, hi = wi.window()
    for mm in range(lo, hi + 1):
        val = wi.value(mm)
        if not all(val.contains(nmap.apply(b)) for b in val.basis):
            raise NotCompatible("N does not preserve the filtration")
    jumps = [mm for mm in range(lo, hi + 1)
             if wi.value(mm) != wi.value(mm - 1)]
    res = _relative_steps(nmap, wi, jumps, dim)
    if not res.exists:
        return res
    out = res.filtration
    assert check_relative_filtration(nmap, wi, out), \
        "relative filtration construction produced an invalid filtration"
    return RelativeResult(True, out)


def _relative_steps(nmap: LinearMap, wi: Filtration, jumps: List[int],
                    dim: int) -> RelativeResult:
    if dim == 0 or not jumps:
        return RelativeResult(True, Filtration(INC, dim, {0: full_space(dim)}))
    if len(jumps) == 1:
        s = jumps[0]
        m = weight_filtration(NilpotentEndo.of(nmap)).shift(s)
        return RelativeResult(True, m)

    b = jumps[-1]
    u_sub = wi.value(b - 1)
    # restricted data on U in U-coordinates
    n_u = _restrict_endo(nmap, u_sub)
    w_u = Filtration(INC, u_sub.dim,
                     {mm: _coords_subspace(u_sub, wi.value(mm).intersect(u_sub))
                      for mm in jumps[:-1]})
    sub_res = _relative_steps(n_u, w_u, jumps[:-1], u_sub.dim)
    if not sub_res.exists:
        return sub_res
    m_u = sub_res.filtration.as_increasing()

    quo = Subquotient(dim, full_space(dim), u_sub)
    n_q = subquotient_map(nmap, quo, quo)
    m_q = weight_filtration(NilpotentEndo.of(n_q)).shift(b)

    # flag-adapted basis of the quotient: q_i enters m_q at level levels[i]
    qlo, qhi = m_q.window()
    reps: List[tuple] = []
    levels: List[int] = []
    seen = zero_space(quo.dim)
    for l in range(qlo, qhi + 1):
        val = m_q.value(l)
        for bv in val.basis:
            if not seen.contains(bv):
                reps.append(bv)
                levels.append(l)
                seen = seen.sum(Subspace(quo.dim, [bv]))
    lifts = [quo.lift(r) for r in reps]
    s = len(reps)

    # coefficients of N-bar on the adapted basis
    qspan = Subspace(quo.dim, reps)
    cmat = [qspan.coords(n_q.apply(r)) for r in reps]
    # reorder coords: qspan.coords uses its own echelon basis; redo by solving
    rep_rows = mat(reps)
    cmat = []
    for r in reps:
        sol = solve_right(mat_transpose(rep_rows), s, n_q.apply(r))
        assert sol is not None
        cmat.append(sol)

    # unknowns psi_i in U (U-coordinates, dim u each); conditions:
    #   proj_{U / M'_{l_i - 2}} ( N psi_i - sum_j c_ij psi_j + t_i ) = 0
    u = u_sub.dim
    rows: List[List[QI]] = []
    rhs: List[QI] = []
    witness_level = None
    for i in range(s):
        li = levels[i]
        t_amb = nmap.apply(lifts[i])
        for j in range(s):
            cij = cmat[i][j]
            if cij:
                assert levels[j] <= li - 2, "N-bar does not lower the level by 2"
                t_amb = vec_add(t_amb, vec_scale(-cij, lifts[j]))
        if not u_sub.contains(t_amb):
            return RelativeResult(False, witness_weight=b,
                                  reason="forced image leaves the lower step")
        t_u = u_sub.coords(t_amb)
        mprime = m_u.value(li - 2)
        proj = Subquotient(u, full_space(u), mprime)
        if proj.dim == 0:
            continue
        pr = proj.projection_rows()
        nproj = mat_mul(pr, n_u.matrix)
        for rr in range(proj.dim):
            row = [QI(0)] * (u * s)
            for cc in range(u):
                row[i * u + cc] = row[i * u + cc] + nproj[rr][cc]
            for j in range(s):
                cij = cmat[i][j]
                if cij:
                    for cc in range(u):
                        row[j * u + cc] = row[j * u + cc] - cij * pr[rr][cc]
            rows.append(row)
            rhs.append(-sum((pr[rr][cc] * t_u[cc] for cc in range(u)), QI(0)))

    psi = zero_vec(u * s)
    if rows:
        sol = solve_right(mat(rows), u * s, tuple(rhs))
        if sol is None:
            return RelativeResult(False, witness_weight=b,
                                  reason="lifting system infeasible at the top weight")
        psi = sol

    vs = []
    for i in range(s):
        corr = zero_vec(dim)
        for cc in range(u):
            cval = psi[i * u + cc]
            if cval:
                corr = vec_add(corr, vec_scale(cval, u_sub.basis[cc]))
        vs.append(vec_add(lifts[i], corr))

    # assemble M on V
    mlo = min(m_u.window()[0], qlo) - 1
    mhi = max(m_u.window()[1], qhi) + 1
    steps = {}
    for l in range(mlo, mhi + 1):
        part_u = [_embed(u_sub, bvec) for bvec in m_u.value(l).basis]
        part_v = [vs[i] for i in range(s) if levels[i] <= l]
        steps[l] = Subspace(dim, part_u + part_v)
    return RelativeResult(True, Filtration(INC, dim, steps))


def _coords_subspace(amb_sub: Subspace, sub: Subspace) -> Subspace:
    """sub (contained in amb_sub) expressed in amb_sub's basis coordinates."""
    return Subspace(amb_sub.dim, [amb_sub.coords(b) for b in sub.basis])


def _embed(amb_sub: Subspace, coords) -> tuple:
    out = zero_vec(amb_sub.ambient_dim)
    for c, b in zip(coords, amb_sub.basis):
        if c:
            out = vec_add(out, vec_scale(c, b))
    return out


# ---------------------------------------------------------------------------
# independence of positive coefficients
# ---------------------------------------------------------------------------

@dataclass
class IndependenceReport:
    all_agree: bool
    filtrations: list
    matches_reference: Optional[bool] = None


def c_independence_check(nils: Sequence[NilpotentEndo],
                         index_set: Sequence[int],
                         samples: Sequence[Sequence[Fraction]],
                         reference: Optional[Filtration] = None) -> IndependenceReport:
    """W(sum_{i in I} c_i N_i) across positive rational samples.

    Raises NonCommuting unless the given endomorphisms pairwise commute.
    """
    for a in range(len(nils)):
        for bb in range(a + 1, len(nils)):
            ab = nils[a].n.compose(nils[bb].n)
            ba = nils[bb].n.compose(nils[a].n)
            if ab.matrix != ba.matrix:
                raise NonCommuting(f"N_{a} and N_{bb} do not commute")
    index_set = list(index_set)
    fils = []
    for c in samples:
        assert len(c) == len(index_set)
        assert all(Fraction(ci) > 0 for ci in c), "samples must be positive"
        total = LinearMap.zero(nils[0].space, nils[0].space) if nils else None
        for ci, idx in zip(c, index_set):
            total = total.add(nils[idx].n.scale(Fraction(ci)))
        fils.append(weight_filtration(NilpotentEndo.of(total)))
    agree = all(fils[0].same_function(f) for f in fils[1:]) if fils else True
    matches = None
    if reference is not None and fils:
        matches = all(reference.same_function(f) for f in fils)
    return IndependenceReport(agree, fils, matches)
