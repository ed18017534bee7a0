"""Built-in degeneration instances: nodal-conic, chains and cycles of
rational curves, Kuenneth products, and seeded random composites."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from .combinatorics import PartitionedAlphabet
from .degeneration import (DegenerationInstance, StratumPackage, Subset,
                           load_instance)
from .errors import ParamError
from .gaussq import QI
from .hodge import HodgeStructure, trivial_hodge
from .linalg import Rows, Subspace, full_space, mat, mat_transpose, zero_mat


def _p1_package(subset: Subset) -> StratumPackage:
    h = {0: trivial_hodge(1, 0), 2: HodgeStructure(1, 2, {(1, 1): full_space(1)})}
    return StratumPackage(subset, 1, h,
                          lefschetz={0: mat([[1]])},
                          pairing={0: mat([[1]]), 2: mat([[1]])},
                          trace=(QI(1),))


def _points_package(subset: Subset, npts: int = 1) -> StratumPackage:
    ident = tuple(tuple(QI(1 if i == j else 0) for j in range(npts))
                  for i in range(npts))
    return StratumPackage(subset, 0, {0: trivial_hodge(npts, 0)},
                          lefschetz={}, pairing={0: ident},
                          trace=tuple(QI(1) for _ in range(npts)))


def _curve_instance(components: List[str], nodes: List[Tuple[str, str, int]],
                    name: str) -> DegenerationInstance:
    """A k=1 nodal curve: components are smooth rational, nodes[(x, y, mult)]
    glue components x and y at mult points."""
    al = PartitionedAlphabet.build([components])
    strata: Dict[Subset, StratumPackage] = {}
    restrictions: Dict[Tuple[Subset, str], Dict[int, Rows]] = {}
    gysins: Dict[Tuple[Subset, str], Dict[int, Rows]] = {}
    for c in components:
        strata[frozenset([c])] = _p1_package(frozenset([c]))
    for x, y, mult in nodes:
        sub = frozenset([x, y])
        strata[sub] = _points_package(sub, mult)
        ones = mat([[1]] * mult)           # H^0(P1) -> H^0(mult points)
        minus = mat([[-1] * mult])         # adjoint with the sign convention
        for base in (x, y):
            other = y if base == x else x
            restrictions[(frozenset([base]), other)] = {0: ones}
            gysins[(frozenset([base]), other)] = {0: minus}
    return load_instance(DegenerationInstance(al, 1, strata, restrictions,
                                              gysins, name=name))


def nodal_conic() -> DegenerationInstance:
    """Two rational curves meeting at one node (degenerate plane conic)."""
    return _curve_instance(["a", "b"], [("a", "b", 1)], "nodal-conic")


def chain(m: int) -> DegenerationInstance:
    """A chain of m rational curves (limit of a smooth rational curve)."""
    if m < 1:
        raise ParamError("chain needs at least one component")
    comps = [f"c{t}" for t in range(m)]
    nodes = [(comps[t], comps[t + 1], 1) for t in range(m - 1)]
    return _curve_instance(comps, nodes, f"chain({m})")


def cycle(m: int) -> DegenerationInstance:
    """A cycle of m rational curves (limit of an elliptic curve); m = 2 glues
    the two components at two nodes."""
    if m < 2:
        raise ParamError("cycle needs at least two components")
    comps = [f"c{t}" for t in range(m)]
    if m == 2:
        nodes = [(comps[0], comps[1], 2)]
    else:
        nodes = [(comps[t], comps[(t + 1) % m], 1) for t in range(m)]
    return _curve_instance(comps, nodes, f"cycle({m})")


# ---------------------------------------------------------------------------
# Kuenneth products
# ---------------------------------------------------------------------------

def _tensor_block_map(maps1: Dict[int, Rows], maps2: Dict[int, Rows],
                      pkg1, pkg2, deg_shift1: int, deg_shift2: int,
                      out_pkg, src_pkg) -> Dict[int, Rows]:
    raise NotImplementedError


class _ProductPackage:
    """Bookkeeping for the tensor of two stratum packages: the degree-j space
    is the ascending-(a, b) concatenation of kron(H^a, H^b)."""

    def __init__(self, p1: StratumPackage, p2: StratumPackage):
        self.p1, self.p2 = p1, p2
        self.ndim = p1.ndim + p2.ndim
        self.offsets: Dict[int, Dict[Tuple[int, int], int]] = {}
        self.dims: Dict[int, int] = {}
        for j in range(0, 2 * self.ndim + 1):
            off, table = 0, {}
            for a in range(0, j + 1):
                b = j - a
                d = p1.dim(a) * p2.dim(b)
                if d:
                    table[(a, b)] = off
                    off += d
            self.offsets[j] = table
            self.dims[j] = off

    def kron_into(self, rows, j_src: int, j_tgt: int, a: int, b: int,
                  a2: int, b2: int, m1: Rows, m2: Rows):
        """Add m1 kron m2 mapping the (a,b) block of degree j_src into the
        (a2,b2) block of degree j_tgt."""
        if (a, b) not in self.offsets.get(j_src, {}) \
                or (a2, b2) not in self.offsets.get(j_tgt, {}):
            return
        so = self.offsets[j_src][(a, b)]
        to = self.offsets[j_tgt][(a2, b2)]
        d1s, d2s = self.p1.dim(a), self.p2.dim(b)
        for i1, row1 in enumerate(m1):
            for j1, x1 in enumerate(row1):
                if not x1:
                    continue
                for i2, row2 in enumerate(m2):
                    for j2, x2 in enumerate(row2):
                        if x2:
                            rows[to + i1 * len(m2) + i2][so + j1 * d2s + j2] = \
                                rows[to + i1 * len(m2) + i2][so + j1 * d2s + j2] + x1 * x2

    def package(self, subset: Subset) -> StratumPackage:
        p1, p2, n = self.p1, self.p2, self.ndim
        coh = {}
        for j in range(0, 2 * n + 1):
            if self.dims[j] == 0:
                continue
            h = None
            for (a, b) in self.offsets[j]:
                part = p1.cohomology[a].tensor(p2.cohomology[b])
                h = part if h is None else h.direct_sum(part)
            coh[j] = h
        lef = {}
        for j in range(0, 2 * n + 1):
            rows = [[QI(0)] * self.dims[j] for _ in range(self.dims.get(j + 2, 0))]
            for (a, b) in self.offsets[j]:
                self.kron_into(rows, j, j + 2, a, b, a + 2, b,
                               p1.lef(a), _ident(p2.dim(b)))
                self.kron_into(rows, j, j + 2, a, b, a, b + 2,
                               _ident(p1.dim(a)), p2.lef(b))
            lef[j] = mat(rows)
        pairing = {}
        for j in range(0, 2 * n + 1):
            rows = [[QI(0)] * self.dims[2 * n - j] for _ in range(self.dims[j])]
            for (a, b), off in self.offsets[j].items():
                a2, b2 = 2 * p1.ndim - a, 2 * p2.ndim - b
                if (a2, b2) not in self.offsets[2 * n - j]:
                    continue
                off2 = self.offsets[2 * n - j][(a2, b2)]
                sign = -1 if (a2 * b) % 2 else 1
                pa, pb = p1.pair(a), p2.pair(b)
                d2s = p2.dim(b)
                d2t = p2.dim(b2)
                for i1, row1 in enumerate(pa):
                    for j1, x1 in enumerate(row1):
                        if not x1:
                            continue
                        for i2, row2 in enumerate(pb):
                            for j2, x2 in enumerate(row2):
                                if x2:
                                    rows[off + i1 * d2s + i2][off2 + j1 * d2t + j2] = \
                                        rows[off + i1 * d2s + i2][off2 + j1 * d2t + j2] \
                                        + QI(sign) * x1 * x2
            pairing[j] = mat(rows)
        tr = [QI(0)] * self.dims[2 * n]
        off = self.offsets[2 * n][(2 * p1.ndim, 2 * p2.ndim)]
        for i1, x1 in enumerate(p1.trace):
            for i2, x2 in enumerate(p2.trace):
                tr[off + i1 * len(p2.trace) + i2] = x1 * x2
        return StratumPackage(subset, n, coh, lef, pairing, tuple(tr))


def _ident(n: int) -> Rows:
    return tuple(tuple(QI(1 if i == j else 0) for j in range(n))
                 for i in range(n))


def product(inst1: DegenerationInstance,
            inst2: DegenerationInstance) -> DegenerationInstance:
    """The Kuenneth product: strata are products of strata, packages are
    tensored, restriction/Gysin maps act on one factor."""
    r1 = {l: f"1:{l}" for l in inst1.alphabet.letters}
    r2 = {l: f"2:{l}" for l in inst2.alphabet.letters}
    parts = tuple(tuple(r1[l] for l in p) for p in inst1.alphabet.parts) + \
        tuple(tuple(r2[l] for l in p) for p in inst2.alphabet.parts)
    letters = tuple(l for p in parts for l in p)
    al = PartitionedAlphabet(tuple(sorted(letters)), parts)

    strata: Dict[Subset, StratumPackage] = {}
    prods: Dict[Tuple[Subset, Subset], _ProductPackage] = {}
    for s1, p1 in inst1.strata.items():
        for s2, p2 in inst2.strata.items():
            sub = frozenset({r1[l] for l in s1} | {r2[l] for l in s2})
            pp = _ProductPackage(p1, p2)
            prods[(s1, s2)] = pp
            strata[sub] = pp.package(sub)

    restrictions: Dict[Tuple[Subset, str], Dict[int, Rows]] = {}
    gysins: Dict[Tuple[Subset, str], Dict[int, Rows]] = {}
    for (s1, s2), pp in prods.items():
        sub = frozenset({r1[l] for l in s1} | {r2[l] for l in s2})
        n = pp.ndim
        # factor-1 letters
        for (base, letter), mats in inst1.restrictions.items():
            if base != s1:
                continue
            big1 = frozenset(base | {letter})
            if (big1, s2) not in prods:
                continue
            tgt = prods[(big1, s2)]
            out = {}
            for j in range(0, 2 * n + 1):
                rows = [[QI(0)] * pp.dims[j] for _ in range(tgt.dims.get(j, 0))]
                for (a, b) in pp.offsets[j]:
                    m1 = inst1.rho(base, letter, a)
                    _kron_between(rows, pp, tgt, j, j, a, b, a, b, m1,
                                  _ident(pp.p2.dim(b)))
                out[j] = mat(rows)
            restrictions[(sub, r1[letter])] = out
        for (base, letter), mats in inst1.gysins.items():
            if base != s1:
                continue
            big1 = frozenset(base | {letter})
            if (big1, s2) not in prods:
                continue
            src = prods[(big1, s2)]
            tgtsub = frozenset({r1[l] for l in base} | {r2[l] for l in s2})
            out = {}
            for j in range(0, 2 * src.ndim + 1):
                rows = [[QI(0)] * src.dims[j] for _ in range(pp.dims.get(j + 2, 0))]
                for (a, b) in src.offsets[j]:
                    g1 = inst1.gys(base, letter, a)
                    _kron_between(rows, src, pp, j, j + 2, a, b, a + 2, b, g1,
                                  _ident(src.p2.dim(b)))
                out[j] = mat(rows)
            gysins[(tgtsub, r1[letter])] = out
        # factor-2 letters
        for (base, letter), mats in inst2.restrictions.items():
            if base != s2:
                continue
            big2 = frozenset(base | {letter})
            if (s1, big2) not in prods:
                continue
            tgt = prods[(s1, big2)]
            out = {}
            for j in range(0, 2 * n + 1):
                rows = [[QI(0)] * pp.dims[j] for _ in range(tgt.dims.get(j, 0))]
                for (a, b) in pp.offsets[j]:
                    m2 = inst2.rho(base, letter, b)
                    _kron_between(rows, pp, tgt, j, j, a, b, a, b,
                                  _ident(pp.p1.dim(a)), m2)
                out[j] = mat(rows)
            restrictions[(sub, r2[letter])] = out
        for (base, letter), mats in inst2.gysins.items():
            if base != s2:
                continue
            big2 = frozenset(base | {letter})
            if (s1, big2) not in prods:
                continue
            src = prods[(s1, big2)]
            tgtsub = frozenset({r1[l] for l in s1} | {r2[l] for l in base})
            out = {}
            for j in range(0, 2 * src.ndim + 1):
                rows = [[QI(0)] * src.dims[j] for _ in range(pp.dims.get(j + 2, 0))]
                for (a, b) in src.offsets[j]:
                    g2 = inst2.gys(base, letter, b)
                    _kron_between(rows, src, pp, j, j + 2, a, b, a, b + 2,
                                  _ident(src.p1.dim(a)), g2)
                out[j] = mat(rows)
            gysins[(tgtsub, r2[letter])] = out

    name = f"product({inst1.name},{inst2.name})"
    return load_instance(DegenerationInstance(
        al, inst1.dim_x + inst2.dim_x, strata, restrictions, gysins, name=name))


def _kron_between(rows, src_pp: _ProductPackage, tgt_pp: _ProductPackage,
                  j_src: int, j_tgt: int, a: int, b: int, a2: int, b2: int,
                  m1: Rows, m2: Rows):
    """Add m1 kron m2 from the (a,b) block of src to the (a2,b2) block of tgt."""
    if (a, b) not in src_pp.offsets[j_src]:
        return
    if (a2, b2) not in tgt_pp.offsets.get(j_tgt, {}):
        return
    so = src_pp.offsets[j_src][(a, b)]
    to = tgt_pp.offsets[j_tgt][(a2, b2)]
    d2s = src_pp.p2.dim(b)
    d2t = tgt_pp.p2.dim(b2)
    for i1, row1 in enumerate(m1):
        for j1, x1 in enumerate(row1):
            if not x1:
                continue
            for i2, row2 in enumerate(m2):
                for j2, x2 in enumerate(row2):
                    if x2:
                        rows[to + i1 * d2t + i2][so + j1 * d2s + j2] = \
                            rows[to + i1 * d2t + i2][so + j1 * d2s + j2] + x1 * x2


# ---------------------------------------------------------------------------
# generation entry point
# ---------------------------------------------------------------------------

_CURVE_FAMILIES = ("nodal-conic", "chain", "cycle")


def random_dual_complex(k: int, max_letters: int,
                        seed: int) -> DegenerationInstance:
    """A seeded random Kuenneth product of k one-dimensional families with at
    most max_letters components in total."""
    if k < 1:
        raise ParamError("k must be positive")
    if max_letters < k:
        raise ParamError("need at least one letter per log direction")
    rng = random.Random(seed)
    budgets = [1] * k
    for _ in range(max_letters - k):
        budgets[rng.randrange(k)] += 1
    factors = []
    for b in budgets:
        if b == 1:
            factors.append(chain(1))
        else:
            kind = rng.choice(["chain", "cycle", "chain"])
            factors.append(chain(b) if kind == "chain" else cycle(b))
    inst = factors[0]
    for f in factors[1:]:
        inst = product(inst, f)
    inst.name = f"random-dual-complex(k={k},letters={max_letters},seed={seed})"
    return inst


def generate_instance(family: str, **params) -> DegenerationInstance:
    if family == "nodal-conic":
        return nodal_conic()
    if family == "chain":
        return chain(int(params.get("m", 3)))
    if family == "cycle":
        return cycle(int(params.get("m", 3)))
    if family == "product":
        parts = params.get("factors")
        if not parts or len(parts) < 2:
            raise ParamError("product needs at least two factor instances")
        inst = parts[0]
        for f in parts[1:]:
            inst = product(inst, f)
        return inst
    if family == "random-dual-complex":
        return random_dual_complex(int(params.get("k", 1)),
                                   int(params.get("letters", 3)),
                                   int(params.get("seed", 0)))
    raise ParamError(f"unknown family {family!r}")
