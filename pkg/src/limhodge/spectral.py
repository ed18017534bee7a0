"""Spectral sequences of filtered complexes, with explicit subquotient pages.

Every page cell is stored as Z_r/B_r with witnesses inside the underlying
complex, so induced structure (recurrent filtrations, transported operators,
the Gysin connecting morphism) is computed by subquotient_map, never
re-derived.  Degeneracy is decided by exact rank computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import NotAConvolution, NotCompatible, UnknownFiltration
from .filtration import (DEC, FilteredComplex, Filtration, convolve,
                         graded_piece)
from .gaussq import QI
from .linalg import (LinearMap, Space, Subquotient, Subspace, mat,
                     mat_inverse, mat_mul, mat_transpose, preimage,
                     subquotient_map, vec_is_zero)


@dataclass
class PageCell:
    p: int
    q: int
    z: Subspace
    b: Subspace
    sq: Subquotient

    @property
    def dim(self) -> int:
        return self.sq.dim


@dataclass
class Page:
    r: int
    cells: Dict[Tuple[int, int], PageCell]
    d: Dict[Tuple[int, int], LinearMap]

    def cell(self, p: int, q: int) -> Optional[PageCell]:
        return self.cells.get((p, q))

    def dim(self, p: int, q: int) -> int:
        c = self.cells.get((p, q))
        return c.dim if c else 0

    def nonzero_dims(self) -> Dict[Tuple[int, int], int]:
        return {k: c.dim for k, c in self.cells.items() if c.dim}


class SpectralPages:
    """All pages of E_r(K, name) through stabilization (Z_r/B_r presentation)."""

    def __init__(self, kom: FilteredComplex, name: str):
        if name not in kom.filtrations:
            raise UnknownFiltration(name)
        self.kom = kom
        self.name = name
        lo, hi = kom.filtration_window(name)
        self.p_range = range(lo, hi + 1)
        self.stable_r = max(2, (hi - lo) + 2)
        self.pages: Dict[int, Page] = {}
        self._z_cache: Dict[Tuple[int, int, int], Subspace] = {}
        for r in range(1, self.stable_r + 1):
            self.pages[r] = self._build_page(r)
        self._check_page_recursion()

    def _zr(self, r: int, p: int, n: int) -> Subspace:
        """Z_r^{p, n-p} = F^p K^n cap d^{-1}(F^{p+r} K^{n+1}); r=0 gives F^p."""
        key = (r, p, n)
        if key not in self._z_cache:
            fp = self.kom.filt_value(self.name, n, p)
            if r == 0:
                out = fp
            else:
                tgt = self.kom.filt_value(self.name, n + 1, p + r)
                out = fp.intersect(preimage(self.kom.dmap(n), tgt))
            self._z_cache[key] = out
        return self._z_cache[key]

    def _cell(self, r: int, p: int, n: int) -> PageCell:
        z = self._zr(r, p, n)
        dn1 = self.kom.dmap(n - 1)
        zin = self._zr(r - 1, p - r + 1, n - 1)
        dz = Subspace(self.kom.space(n).dim, [dn1.apply(v) for v in zin.basis])
        b = dz.sum(self._zr(r - 1, p + 1, n)).intersect(z)
        return PageCell(p, n - p, z, b,
                        Subquotient(self.kom.space(n).dim, z, b))

    def _build_page(self, r: int) -> Page:
        cells: Dict[Tuple[int, int], PageCell] = {}
        for n in self.kom.degrees():
            for p in self.p_range:
                cells[(p, n - p)] = self._cell(r, p, n)
        dmaps: Dict[Tuple[int, int], LinearMap] = {}
        for (p, q), cell in cells.items():
            n = p + q
            tgt = cells.get((p + r, q - r + 1))
            if tgt is None:
                # outside the filtration window the graded pieces vanish
                tgt = self._cell(r, p + r, n + 1)
                assert tgt.dim == 0 or (n + 1) not in self.kom.spaces
            dmaps[(p, q)] = subquotient_map(self.kom.dmap(n), cell.sq, tgt.sq)
        return Page(r, cells, dmaps)

    def _check_page_recursion(self):
        """dim E_{r+1} must equal dim ker d_r minus rank of the incoming d_r."""
        for r in range(1, self.stable_r):
            pg, nxt = self.pages[r], self.pages[r + 1]
            for (p, q), cell in pg.cells.items():
                out = pg.d[(p, q)]
                kdim = cell.dim - out.rank()
                inc = pg.d.get((p - r, q + r - 1))
                idim = inc.rank() if inc else 0
                assert nxt.dim(p, q) == kdim - idim, \
                    f"page recursion broken at r={r}, (p,q)=({p},{q})"

    # -- queries ---------------------------------------------------------------

    def page(self, r: int) -> Page:
        return self.pages[min(r, self.stable_r)]

    def einf(self) -> Page:
        return self.pages[self.stable_r]

    def check_einf_vs_cohomology(self) -> bool:
        """sum_p dim E_inf^{p, n-p} == dim H^n(K) for all n."""
        einf = self.einf()
        for n in self.kom.degrees():
            tot = sum(einf.dim(p, n - p) for p in self.p_range)
            if tot != self.kom.cohomology(n).dim:
                return False
        return True

    def recurrent_filtration(self, other: str, r: int) -> Dict[Tuple[int, int], Filtration]:
        """Image filtration of a second named filtration on the page-r cells."""
        page = self.page(r)
        out = {}
        for (p, q), cell in page.cells.items():
            if not cell.dim:
                continue
            f = self.kom.filtration(other, p + q).as_decreasing()
            lo, hi = f.window()
            steps = {m: cell.sq.induced_subspace(f.value(m))
                     for m in range(lo, hi + 1)}
            out[(p, q)] = Filtration(DEC, cell.dim, steps)
        return out

    def transport_endo(self, ops: Dict[int, LinearMap], r: int,
                       pshift: int = 0) -> Dict[Tuple[int, int], LinearMap]:
        """Induce a degreewise operator on page r, cell (p,q) -> (p+pshift, q-pshift).

        The operator must map Z_r^{p} into Z_r^{p+pshift} and likewise for the
        boundary subspaces; subquotient_map raises NotCompatible otherwise.
        """
        page = self.page(r)
        out = {}
        for (p, q), cell in page.cells.items():
            if not cell.dim:
                continue
            n = p + q
            tgt = page.cell(p + pshift, q - pshift) or self._cell(r, p + pshift, n)
            op = ops.get(n) or LinearMap.zero(self.kom.space(n), self.kom.space(n))
            out[(p, q)] = subquotient_map(op, cell.sq, tgt.sq)
        return out


def compute_pages(kom: FilteredComplex, name: str) -> SpectralPages:
    return SpectralPages(kom, name)


def check_degeneracy(pages: SpectralPages, r0: int):
    """True iff d_r = 0 for every r >= r0; else (False, first offending cell)."""
    for r in range(r0, pages.stable_r + 1):
        for (p, q), m in pages.page(r).d.items():
            if not m.is_zero():
                return False, (r, p, q)
    return True, None


# ---------------------------------------------------------------------------
# Gysin connecting morphism
# ---------------------------------------------------------------------------

class GysinPages:
    """Page-level maps E_r^{p,q}(gr_G^a K, F) -> E_r^{p,q+1}(gr_G^{a+1} K, F).

    The connecting morphism of 0 -> gr^{a+1} -> G^a/G^{a+2} -> gr^a -> 0 is
    evaluated on explicit Z_r representatives via exact lifts into
    F^p cap G^a; well-definedness modulo B_r is asserted on every call.
    """

    def __init__(self, kom: FilteredComplex, gname: str, a: int, fname: str):
        if gname not in kom.filtrations or fname not in kom.filtrations:
            raise UnknownFiltration(f"{gname}, {fname}")
        self.kom = kom
        self.gname, self.fname, self.a = gname, fname, a
        self.gr_a = graded_piece(kom, gname, a)
        self.gr_a1 = graded_piece(kom, gname, a + 1)
        self.pages_a = SpectralPages(self.gr_a, fname) if self.gr_a.spaces else None
        self.pages_a1 = SpectralPages(self.gr_a1, fname) if self.gr_a1.spaces else None
        self._maps_cache: Dict[int, Dict] = {}

    def _gamma_ambient(self, n: int, w_gr, p: int, r: int):
        """Zig-zag on one gr^a representative; returns an ambient K^{n+1} vector
        lying in G^{a+1} cap F^p."""
        kom = self.kom
        sq_a_n = self.gr_a.prov[n]
        fp = kom.filt_value(self.fname, n, p)
        ga = kom.filt_value(self.gname, n, self.a)
        v = sq_a_n.lift_into(w_gr, fp.intersect(ga))
        dv = kom.dmap(n).apply(v)
        sq_a_n1 = self.gr_a.prov.get(n + 1)
        if sq_a_n1 is not None and sq_a_n1.dim:
            c = sq_a_n1.project(dv)
            fpr = kom.filt_value(self.fname, n + 1, p + r)
            ga1lvl = kom.filt_value(self.gname, n + 1, self.a)
            w2 = sq_a_n1.lift_into(c, fpr.intersect(ga1lvl))
            gamma = tuple(x - y for x, y in zip(dv, w2))
        else:
            gamma = dv
        if not kom.filt_value(self.gname, n + 1, self.a + 1).contains(gamma):
            raise NotCompatible("gysin zig-zag left G^{a+1}")
        return gamma

    def _target_cell(self, r: int, p: int, n: int) -> Optional[PageCell]:
        if self.pages_a1 is None:
            return None
        tgt = self.pages_a1.page(r).cell(p, n + 1 - p)
        if tgt is None:
            tgt = self.pages_a1._cell(r, p, n + 1)
        return tgt

    def maps(self, r: int) -> Dict[Tuple[int, int], LinearMap]:
        if r in self._maps_cache:
            return self._maps_cache[r]
        out: Dict[Tuple[int, int], LinearMap] = {}
        if self.pages_a is None:
            self._maps_cache[r] = out
            return out
        pa = self.pages_a.page(r)
        for (p, q), cell in pa.cells.items():
            if cell.dim == 0:
                continue
            n = p + q
            tgt = self._target_cell(r, p, n)
            sq_a1 = self.gr_a1.prov.get(n + 1) if self.gr_a1.prov else None
            degenerate_target = sq_a1 is None or sq_a1.dim == 0
            cols = []
            for rep in cell.sq.reps:
                gamma = self._gamma_ambient(n, rep, p, r)
                if degenerate_target:
                    continue
                y = sq_a1.project(gamma)
                if tgt is None or not tgt.z.contains(y):
                    raise NotCompatible("gysin image misses Z_r of the target")
                cols.append(tgt.sq.project(y))
            if not degenerate_target:
                for bb in cell.b.basis:
                    y = sq_a1.project(self._gamma_ambient(n, bb, p, r))
                    if not vec_is_zero(y) and not tgt.b.contains(y):
                        raise NotCompatible("gysin map not well defined mod B_r")
            tspace = tgt.sq.space if tgt else Space(0)
            if not cols or tspace.dim == 0:
                out[(p, q)] = LinearMap.zero(cell.sq.space, tspace)
            else:
                out[(p, q)] = LinearMap(cell.sq.space, tspace,
                                        mat_transpose(mat(cols)))
        self._maps_cache[r] = out
        return out

    def check_anticommutation(self, r: int) -> bool:
        """E_r(gamma) d_r = -d_r E_r(gamma) on every cell."""
        if self.pages_a is None or self.pages_a1 is None:
            return True
        g = self.maps(r)
        pa = self.pages_a.page(r)
        for (p, q), gm in g.items():
            n = p + q
            dtop = pa.d.get((p, q))
            if dtop is None or dtop.source.dim == 0:
                continue
            # gamma on the d_r-target cell
            nxt_src = pa.cell(p + r, q - r + 1)
            gnext = g.get((p + r, q - r + 1))
            far = self._target_cell(r, p + r, n + 1)
            if gnext is None:
                gnext = LinearMap.zero(dtop.target, far.sq.space if far else Space(0))
            # d_r on the gamma-target cell
            tgt = self._target_cell(r, p, n)
            dbot = subquotient_map(self.gr_a1.dmap(n + 1), tgt.sq,
                                   far.sq if far else tgt.sq)
            left = gnext.compose(dtop)
            right = dbot.compose(gm)
            if left.matrix != right.scale(-1).matrix:
                return False
        return True


def gysin_connecting(kom: FilteredComplex, gname: str, a: int,
                     fname: str) -> GysinPages:
    return GysinPages(kom, gname, a, fname)


# ---------------------------------------------------------------------------
# d1 = d1' + d1'' for a convolved filtration
# ---------------------------------------------------------------------------

@dataclass
class SplitCell:
    parts: List[Tuple[int, int]]
    iota: Dict[Tuple[int, int], LinearMap]
    d1_prime: Optional[LinearMap] = None
    d1_second: Optional[LinearMap] = None


class D1Split:
    """E_1(K, F*G) decomposed through the double grid, with d1 = d1' + d1''.

    Verifies that the analyzed filtration equals convolve(F, G) degreewise,
    builds the identification iota: E_1^{a,b+q}(gr_G^b K, F) -> E_1^{p,q}(K, F*G),
    and asserts the sum decomposition cellwise.
    """

    def __init__(self, kom: FilteredComplex, fname: str, gname: str,
                 analyzed: str):
        for nm in (fname, gname, analyzed):
            if nm not in kom.filtrations:
                raise UnknownFiltration(nm)
        for n in kom.degrees():
            f = kom.filtration(fname, n).as_decreasing()
            g = kom.filtration(gname, n).as_decreasing()
            h = kom.filtration(analyzed, n).as_decreasing()
            if not convolve(f, g).same_function(h):
                raise NotAConvolution(
                    f"filtration {analyzed} is not {fname}*{gname} at degree {n}")
        self.kom = kom
        self.fname, self.gname, self.analyzed = fname, gname, analyzed
        self.pages_total = SpectralPages(kom, analyzed)
        glo, ghi = kom.filtration_window(gname)
        self.b_range = range(glo, ghi + 1)
        self.gr = {b: graded_piece(kom, gname, b) for b in self.b_range}
        self.sub = {b: SpectralPages(self.gr[b], fname) if self.gr[b].spaces else None
                    for b in self.b_range}
        self.gys = {b: GysinPages(kom, gname, b, fname) for b in self.b_range}
        self.cells: Dict[Tuple[int, int], SplitCell] = {}
        self._cob: Dict[Tuple[int, int], tuple] = {}
        self._build()
        self._assert_sum()

    def _iota_vec(self, a: int, b: int, n: int, rep):
        sq = self.gr[b].prov[n]
        fa = self.kom.filt_value(self.fname, n, a)
        gb = self.kom.filt_value(self.gname, n, b)
        return sq.lift_into(rep, fa.intersect(gb))

    def _sub_cell(self, b: int, a: int, n: int):
        if self.sub[b] is None:
            return None
        return self.sub[b].page(1).cell(a, n - a)

    def _build(self):
        page1 = self.pages_total.page(1)
        for (p, q), cell in page1.cells.items():
            n = p + q
            parts, iota = [], {}
            for b in self.b_range:
                a = p - b
                sub_cell = self._sub_cell(b, a, n)
                if sub_cell is None or sub_cell.dim == 0:
                    continue
                parts.append((a, b))
                cols = []
                for rep in sub_cell.sq.reps:
                    v = self._iota_vec(a, b, n, rep)
                    if not cell.z.contains(v):
                        raise NotAConvolution("iota image misses Z_1(K, F*G)")
                    cols.append(cell.sq.project(v))
                iota[(a, b)] = LinearMap(sub_cell.sq.space, cell.sq.space,
                                         mat_transpose(mat(cols)))
            sc = SplitCell(parts, iota)
            self.cells[(p, q)] = sc
            if cell.dim:
                cols = []
                for ab in parts:
                    cols.extend(mat_transpose(iota[ab].matrix))
                if len(cols) != cell.dim:
                    raise NotAConvolution(
                        f"double grid does not fill cell ({p},{q})")
                cmat = mat_transpose(tuple(cols))
                self._cob[(p, q)] = (cmat, mat_inverse(cmat))

        for (p, q), sc in self.cells.items():
            n = p + q
            cell = page1.cell(p, q)
            tcell = page1.cell(p + 1, q)
            tsc = self.cells.get((p + 1, q))
            tdim = tcell.dim if tcell else 0
            src_space = cell.sq.space
            tgt_space = tcell.sq.space if tcell else Space(0)
            if not cell.dim or not tdim or tsc is None:
                sc.d1_prime = LinearMap.zero(src_space, tgt_space)
                sc.d1_second = LinearMap.zero(src_space, tgt_space)
                continue
            dprime = [[QI(0)] * cell.dim for _ in range(tdim)]
            dsecond = [[QI(0)] * cell.dim for _ in range(tdim)]
            col0 = 0
            for (a, b) in sc.parts:
                sub_cell = self._sub_cell(b, a, n)
                dmap = self.sub[b].page(1).d.get((a, n - a))
                gmap = self.gys[b].maps(1).get((a, n - a))
                for j in range(sub_cell.dim):
                    if dmap is not None and (a + 1, b) in tsc.iota:
                        img = tuple(row[j] for row in dmap.matrix)
                        v = tsc.iota[(a + 1, b)].apply(img)
                        for i in range(tdim):
                            dprime[i][col0 + j] = dprime[i][col0 + j] + v[i]
                    if gmap is not None and (a, b + 1) in tsc.iota:
                        img = tuple(row[j] for row in gmap.matrix)
                        v = tsc.iota[(a, b + 1)].apply(img)
                        for i in range(tdim):
                            dsecond[i][col0 + j] = dsecond[i][col0 + j] + v[i]
                col0 += sub_cell.dim
            cinv = self._cob[(p, q)][1]
            sc.d1_prime = LinearMap(src_space, tgt_space,
                                    mat_mul(mat(dprime), cinv))
            sc.d1_second = LinearMap(src_space, tgt_space,
                                     mat_mul(mat(dsecond), cinv))

    def _assert_sum(self):
        page1 = self.pages_total.page(1)
        for (p, q), sc in self.cells.items():
            d1 = page1.d.get((p, q))
            if d1 is None or d1.source.dim == 0 or d1.target.dim == 0:
                continue
            if sc.d1_prime.add(sc.d1_second).matrix != d1.matrix:
                raise NotAConvolution(f"d1 != d1' + d1'' at cell ({p},{q})")

    def components(self, p: int, q: int) -> Tuple[LinearMap, LinearMap]:
        sc = self.cells[(p, q)]
        return sc.d1_prime, sc.d1_second


def d1_split(kom: FilteredComplex, fname: str, gname: str,
             analyzed: str) -> D1Split:
    return D1Split(kom, fname, gname, analyzed)


# ---------------------------------------------------------------------------
# the E2-degeneracy criterion
# ---------------------------------------------------------------------------

@dataclass
class E2CriterionReport:
    hypothesis_holds: bool
    hypothesis_failures: list
    e2_degenerate: bool
    e2_witness: Optional[tuple]
    relative_iso_holds: bool
    relative_failures: list

    @property
    def conclusions_hold(self) -> bool:
        return self.e2_degenerate and self.relative_iso_holds


def induced_on_cohomology(kom: FilteredComplex, name: str, n: int,
                          coh: Subquotient) -> Filtration:
    """Filtration induced on H^n by a named filtration (dec convention)."""
    f = kom.filtration(name, n).as_decreasing()
    lo, hi = f.window()
    steps = {m: coh.induced_subspace(f.value(m)) for m in range(lo, hi + 1)}
    return Filtration(DEC, coh.dim, steps)


def _graded_power_iso(ambient_dim, fil, center, nu, lmax):
    """Failures of nu^l : gr_{l+center} -> gr_{-l+center} over 0 < l <= lmax."""
    bad = []
    for l in range(1, lmax + 1):
        top = Subquotient(ambient_dim, fil.value(l + center),
                          fil.value(l + center - 1))
        bot = Subquotient(ambient_dim, fil.value(-l + center),
                          fil.value(-l + center - 1))
        if top.dim == 0 and bot.dim == 0:
            continue
        try:
            ind = subquotient_map(nu.power(l), top, bot)
            ok = top.dim == bot.dim and ind.rank() == top.dim
        except NotCompatible:
            ok = False
        if not ok:
            bad.append(l)
    return bad


def verify_e2_criterion(kom: FilteredComplex, wf_name: str, w_name: str,
                        nu: Dict[int, LinearMap]) -> E2CriterionReport:
    """The E2-degeneracy criterion for a bifiltored complex with an endomorphism.

    nu must commute with d, preserve the first filtration and shift the second
    (increasing) one by -2.  Hypothesis: induced hard Lefschetz on the
    cohomology of every first-filtration graded piece.  Conclusions, checked
    independently of the hypothesis: (i) E_2-degeneracy of (K, wf); (ii) the
    two-variable graded isomorphisms on H(K).
    """
    for n in kom.degrees():
        op = nu.get(n)
        if op is None:
            continue
        nxt = nu.get(n + 1, LinearMap.zero(kom.space(n + 1), kom.space(n + 1)))
        if mat_mul(nxt.matrix, kom.dmap(n).matrix) != \
           mat_mul(kom.dmap(n).matrix, op.matrix):
            raise NotCompatible("nu does not commute with the differential")
        fwf = kom.filtration(wf_name, n).as_decreasing()
        lo, hi = fwf.window()
        for p in range(lo, hi + 1):
            val = fwf.value(p)
            if not all(val.contains(op.apply(bv)) for bv in val.basis):
                raise NotCompatible("nu does not preserve the first filtration")
        fw = kom.filtration(w_name, n).as_increasing()
        lo, hi = fw.window()
        for m in range(lo, hi + 1):
            tgt = fw.value(m - 2)
            if not all(tgt.contains(op.apply(bv)) for bv in fw.value(m).basis):
                raise NotCompatible("nu does not shift the weight filtration by -2")

    hyp_failures = []
    wf_lo, wf_hi = kom.filtration_window(wf_name)
    for pdec in range(wf_lo, wf_hi + 1):
        m = -pdec
        grm = graded_piece(kom, wf_name, pdec)
        if not grm.spaces:
            continue
        for n in grm.degrees():
            coh = grm.cohomology(n)
            if coh.dim == 0:
                continue
            src = grm.prov[n]
            op = nu.get(n, LinearMap.zero(kom.space(n), kom.space(n)))
            nu_gr = subquotient_map(op, src, src)
            nu_h = subquotient_map(nu_gr, coh, coh)
            wfil = induced_on_cohomology(grm, w_name, n, coh).as_increasing()
            bad = _graded_power_iso(coh.dim, wfil, m, nu_h, wfil.width() + 1)
            hyp_failures.extend(("gr^wf", m, n, l) for l in bad)

    pages = compute_pages(kom, wf_name)
    degen, witness = check_degeneracy(pages, 2)

    rel_failures = []
    for n in kom.degrees():
        coh = kom.cohomology(n)
        if coh.dim == 0:
            continue
        nu_h = subquotient_map(
            nu.get(n, LinearMap.zero(kom.space(n), kom.space(n))), coh, coh)
        wf_h = induced_on_cohomology(kom, wf_name, n, coh).as_increasing()
        w_h = induced_on_cohomology(kom, w_name, n, coh).as_increasing()
        lo, hi = wf_h.window()
        for m in range(lo, hi + 1):
            grm = Subquotient(coh.dim, wf_h.value(m), wf_h.value(m - 1))
            if grm.dim == 0:
                continue
            nu_grm = subquotient_map(nu_h, grm, grm)
            wlo, whi = w_h.window()
            wgr = Filtration("inc", grm.dim,
                             {l: grm.induced_subspace(w_h.value(l))
                              for l in range(wlo, whi + 1)})
            bad = _graded_power_iso(grm.dim, wgr, m, nu_grm, wgr.width() + 1)
            rel_failures.extend(("gr^w gr^wf H", m, n, l) for l in bad)

    return E2CriterionReport(
        hypothesis_holds=not hyp_failures,
        hypothesis_failures=hyp_failures,
        e2_degenerate=degen,
        e2_witness=witness,
        relative_iso_holds=not rel_failures,
        relative_failures=rel_failures,
    )
