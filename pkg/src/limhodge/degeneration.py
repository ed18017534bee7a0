"""Assembly of the limiting E1-page from combinatorial stratum data.

A DegenerationInstance is a dual-complex description: strata indexed by
subsets of the partitioned alphabet meeting every part, each carrying an
abstract cohomology package (Hodge structures, a Lefschetz operator, trace
pairings), plus restriction and Gysin maps between adjacent strata.  The
builder places the summand (q, stratum, degree) at

    j = -r + 2q + e,   j0 = degree - dim X + |r| - k,

with l_i the u-shift, l0 the stratumwise Lefschetz action, d'_i the signed
Gysin/restriction components, and the pairing supported on complementary
gradings with value (-1)^{|q|} eps(-degree) times the trace pairing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .combinatorics import PartitionedAlphabet, merge_sign
from .errors import (AdjointnessViolation, AxiomFailure,
                     HardLefschetzViolation, ParamError, PurityViolation,
                     SchemaError, TheoremCheckFailure)
from .filtration import DEC, INC, FilteredComplex, Filtration
from .gaussq import QI, eps_sign
from .hl import HLModule, Key, cohomology_descent, shaped_mul, zero as zero_j
from .hodge import HodgeStructure
from .linalg import (LinearMap, Rows, Space, Subquotient, Subspace,
                     full_space, mat, mat_apply, mat_transpose, nullspace,
                     rref, subquotient_map, zero_mat, zero_space)
from .monodromy import (NilpotentEndo, c_independence_check,
                        relative_weight_filtration, weight_filtration)
from .spectral import check_degeneracy, compute_pages, induced_on_cohomology

Subset = FrozenSet[str]


# ---------------------------------------------------------------------------
# stratum packages and instances
# ---------------------------------------------------------------------------

@dataclass
class StratumPackage:
    """Abstract cohomology of one closed stratum.

    cohomology: degree -> HodgeStructure (weight = degree);
    lefschetz: degree -> matrix H^j -> H^{j+2} (cup with the ample class);
    pairing: degree -> matrix of (x, y) -> trace(x cup y) on H^j x H^{2n-j};
    trace: row vector on H^{2n}.
    """

    subset: Subset
    ndim: int
    cohomology: Dict[int, HodgeStructure]
    lefschetz: Dict[int, Rows]
    pairing: Dict[int, Rows]
    trace: tuple

    def dim(self, j: int) -> int:
        h = self.cohomology.get(j)
        return h.dim if h else 0

    def lef(self, j: int) -> Rows:
        m = self.lefschetz.get(j)
        if m is None:
            return zero_mat(self.dim(j + 2), self.dim(j))
        return m

    def pair(self, j: int) -> Rows:
        m = self.pairing.get(j)
        if m is None:
            return zero_mat(self.dim(j), self.dim(2 * self.ndim - j))
        return m

    def validate(self):
        n = self.ndim
        if n < 0:
            raise PurityViolation(f"stratum {sorted(self.subset)} has negative dimension")
        for j, h in self.cohomology.items():
            if j < 0 or j > 2 * n:
                raise PurityViolation(
                    f"stratum {sorted(self.subset)} has cohomology outside [0, 2n]")
            if h.weight != j:
                raise SchemaError(f"H^{j} must have weight {j}")
        if self.dim(2 * n) and (len(self.trace) != self.dim(2 * n)
                                or all(not x for x in self.trace)):
            raise SchemaError("trace must be a nonzero functional on the top degree")
        # hard Lefschetz per stratum
        for i in range(1, n + 1):
            j = n - i
            pw = _identity(self.dim(j))
            for t in range(i):
                pw = shaped_mul_pkg(self.lef(j + 2 * t), pw,
                                    self.dim(j + 2 * t + 2), self.dim(j))
            if self.dim(j) != self.dim(n + i) or _rank(pw) != self.dim(j):
                raise HardLefschetzViolation(
                    f"stratum {sorted(self.subset)}: L^{i} fails on H^{j}")
        # lefschetz is of type (1,1)
        for j, h in self.cohomology.items():
            tgt = self.cohomology.get(j + 2)
            for (p, q), sub in h.components.items():
                timg = (tgt.components.get((p + 1, q + 1), zero_space(tgt.dim))
                        if tgt else None)
                for b in sub.basis:
                    img = mat_apply(self.lef(j), b)
                    if any(img):
                        if timg is None or not timg.contains(img):
                            raise SchemaError(
                                f"lefschetz not of type (1,1) on H^{j}")
        # pairings: perfect, graded-symmetric, Hodge type (n, n), L-selfadjoint
        for j in range(0, 2 * n + 1):
            dj, dj2 = self.dim(j), self.dim(2 * n - j)
            if dj != dj2:
                raise SchemaError(f"H^{j} and H^{2 * n - j} have different dims")
            if dj == 0:
                continue
            pj = self.pair(j)
            if _rank(pj) != dj:
                raise SchemaError(f"trace pairing degenerate in degree {j}")
            want = tuple(tuple((QI(-1) ** j) * x for x in row)
                         for row in mat_transpose(self.pair(2 * n - j)))
            if pj != want:
                raise SchemaError(f"pairing not graded-commutative in degree {j}")
            h, h2 = self.cohomology[j], self.cohomology[2 * n - j]
            for (p, q), sub in h.components.items():
                for (p2, q2), sub2 in h2.components.items():
                    if p + p2 == n and q + q2 == n:
                        continue
                    for x in sub.basis:
                        xm = mat_apply(mat_transpose(pj), x)
                        if any(sum((a * b for a, b in zip(xm, y) if a and b),
                                   QI(0)) for y in sub2.basis):
                            raise SchemaError(
                                f"pairing not of type (n,n) in degree {j}")
            lj = self.lef(j)
            lhs = shaped_mul_pkg(mat_transpose(lj), self.pair(j + 2), dj,
                                 self.dim(2 * n - j - 2))
            rhs = shaped_mul_pkg(pj, self.lef(2 * n - j - 2), dj,
                                 self.dim(2 * n - j - 2))
            if lhs != rhs:
                raise SchemaError(f"lefschetz not self-adjoint in degree {j}")


def _identity(n: int) -> Rows:
    return tuple(tuple(QI(1 if i == j else 0) for j in range(n))
                 for i in range(n))


def _rank(rows: Rows) -> int:
    return len(rref(rows)[0])


def shaped_mul_pkg(a: Rows, b: Rows, out_rows: int, out_cols: int) -> Rows:
    from .hl import shaped_mul
    return shaped_mul(a, b, out_rows, out_cols)


@dataclass
class DegenerationInstance:
    alphabet: PartitionedAlphabet
    dim_x: int
    strata: Dict[Subset, StratumPackage]
    restrictions: Dict[Tuple[Subset, str], Dict[int, Rows]]
    gysins: Dict[Tuple[Subset, str], Dict[int, Rows]]
    name: str = "instance"

    @property
    def k(self) -> int:
        return self.alphabet.k

    def rho(self, base: Subset, letter: str, j: int) -> Rows:
        """H^j(D[base]) -> H^j(D[base + letter])."""
        big = frozenset(base | {letter})
        tgt = self.strata[big].dim(j) if big in self.strata else 0
        m = self.restrictions.get((base, letter), {}).get(j)
        if m is None:
            return zero_mat(tgt, self.strata[base].dim(j))
        return m

    def gys(self, base: Subset, letter: str, j: int) -> Rows:
        """H^j(D[base + letter]) -> H^{j+2}(D[base])."""
        big = frozenset(base | {letter})
        src = self.strata[big].dim(j) if big in self.strata else 0
        m = self.gysins.get((base, letter), {}).get(j)
        if m is None:
            return zero_mat(self.strata[base].dim(j + 2), src)
        return m

    def meets_all_parts(self, sub: Subset) -> bool:
        return all(r >= 1 for r in self.alphabet.multirank(sub))

    def validate(self):
        if not self.strata:
            raise SchemaError("empty strata set")
        al = self.alphabet
        for sub, pkg in self.strata.items():
            if not self.meets_all_parts(sub):
                raise SchemaError(
                    f"stratum {sorted(sub)} misses a log direction")
            if pkg.ndim != self.dim_x - len(sub) + al.k:
                raise PurityViolation(
                    f"stratum {sorted(sub)} has inconsistent dimension")
            pkg.validate()
        # downward closure of the dual complex
        for sub in self.strata:
            for letter in sub:
                smaller = frozenset(sub - {letter})
                if self.meets_all_parts(smaller) and smaller not in self.strata:
                    raise SchemaError(
                        f"dual complex not downward closed at {sorted(sub)}")
        self._validate_maps()
        self._validate_adjointness()
        self._validate_squares()
        self._validate_cycle_relation()

    def _pairs(self):
        for sub in self.strata:
            for letter in self.alphabet.letters:
                if letter in sub:
                    continue
                if frozenset(sub | {letter}) in self.strata:
                    yield sub, letter

    def _validate_maps(self):
        for (base, letter) in self._pairs():
            big = frozenset(base | {letter})
            pkg, pkg2 = self.strata[base], self.strata[big]
            for j in range(0, 2 * pkg.ndim + 1):
                m = self.rho(base, letter, j)
                assert len(m) == pkg2.dim(j) and all(
                    len(r) == pkg.dim(j) for r in m), "restriction shape"
                g = self.gys(base, letter, j)
                assert len(g) == pkg.dim(j + 2) and all(
                    len(r) == pkg2.dim(j) for r in g), "gysin shape"
            # naturality with the Lefschetz class (pullback/projection formula)
            for j in range(0, 2 * pkg.ndim + 1):
                lhs = shaped_mul_pkg(self.rho(base, letter, j + 2), pkg.lef(j),
                                     pkg2.dim(j + 2), pkg.dim(j))
                rhs = shaped_mul_pkg(pkg2.lef(j), self.rho(base, letter, j),
                                     pkg2.dim(j + 2), pkg.dim(j))
                if lhs != rhs:
                    raise SchemaError(
                        f"restriction not Lefschetz-natural at {sorted(base)}+{letter}")
                lhs = shaped_mul_pkg(self.gys(base, letter, j + 2), pkg2.lef(j),
                                     pkg.dim(j + 4), pkg2.dim(j))
                rhs = shaped_mul_pkg(pkg.lef(j + 2), self.gys(base, letter, j),
                                     pkg.dim(j + 4), pkg2.dim(j))
                if lhs != rhs:
                    raise SchemaError(
                        f"gysin not Lefschetz-natural at {sorted(base)}+{letter}")

    def _validate_adjointness(self):
        """trace(gysin(a) cup b) = -trace(a cup restrict(b)) in top degree."""
        for (base, letter) in self._pairs():
            big = frozenset(base | {letter})
            pkg, pkg2 = self.strata[base], self.strata[big]
            n = pkg.ndim
            for j in range(0, 2 * pkg2.ndim + 1):
                gj = self.gys(base, letter, j)
                lhs = shaped_mul_pkg(mat_transpose(gj), pkg.pair(j + 2),
                                     pkg2.dim(j), pkg.dim(2 * n - j - 2))
                rj = self.rho(base, letter, 2 * n - j - 2)
                rhs = shaped_mul_pkg(pkg2.pair(j), rj,
                                     pkg2.dim(j), pkg.dim(2 * n - j - 2))
                neg = tuple(tuple(-x for x in row) for row in rhs)
                if lhs != neg:
                    raise AdjointnessViolation(
                        f"at {sorted(base)} + {letter}, degree {j}")

    def _validate_squares(self):
        """Commutation over squares, with missing strata forcing zero."""
        for base in self.strata:
            letters = [l for l in self.alphabet.letters if l not in base]
            for la, lb in itertools.combinations(letters, 2):
                sa = frozenset(base | {la})
                sb = frozenset(base | {lb})
                sab = frozenset(base | {la, lb})
                in_a, in_b = sa in self.strata, sb in self.strata
                in_ab = sab in self.strata
                pkg = self.strata[base]
                for j in range(0, 2 * pkg.ndim + 1):
                    # restriction square
                    left = shaped_mul_pkg(
                        self.rho(sa, lb, j) if in_a and in_ab else (),
                        self.rho(base, la, j) if in_a else (),
                        self.strata[sab].dim(j) if in_ab else 0, pkg.dim(j))
                    right = shaped_mul_pkg(
                        self.rho(sb, la, j) if in_b and in_ab else (),
                        self.rho(base, lb, j) if in_b else (),
                        self.strata[sab].dim(j) if in_ab else 0, pkg.dim(j))
                    if left != right:
                        raise SchemaError(
                            f"restriction square fails at {sorted(base)}+{la},{lb}")
                    # gysin square
                    if in_ab:
                        src = self.strata[sab].dim(j)
                        left = shaped_mul_pkg(
                            self.gys(base, la, j + 2) if in_a else (),
                            self.gys(sa, lb, j) if in_a else (),
                            pkg.dim(j + 4), src)
                        right = shaped_mul_pkg(
                            self.gys(base, lb, j + 2) if in_b else (),
                            self.gys(sb, la, j) if in_b else (),
                            pkg.dim(j + 4), src)
                        if left != right:
                            raise SchemaError(
                                f"gysin square fails at {sorted(base)}+{la},{lb}")
                    # mixed square: restrict by lb after gysin la = gysin la after restrict lb
                    if in_a:
                        src = self.strata[sa].dim(j)
                        left = shaped_mul_pkg(
                            self.rho(base, lb, j + 2) if in_b else (),
                            self.gys(base, la, j),
                            self.strata[sb].dim(j + 2) if in_b else 0, src)
                        right = shaped_mul_pkg(
                            self.gys(sb, la, j) if in_b and in_ab else (),
                            self.rho(sa, lb, j) if in_ab else (),
                            self.strata[sb].dim(j + 2) if in_b else 0, src)
                        if left != right:
                            raise SchemaError(
                                f"mixed square fails at {sorted(base)}+{la},{lb}")

    def _validate_cycle_relation(self):
        """For r_i(stratum) >= 2: the self-intersection relation
        sum gysin.restrict + sum restrict.gysin = 0 on H(D[stratum])."""
        for sub, pkg in self.strata.items():
            r = self.alphabet.multirank(sub)
            for i, part in enumerate(self.alphabet.parts):
                if r[i] < 2:
                    continue
                for j in range(0, 2 * pkg.ndim + 1):
                    total = zero_mat(pkg.dim(j + 2), pkg.dim(j))
                    for letter in part:
                        if letter not in sub:
                            big = frozenset(sub | {letter})
                            if big not in self.strata:
                                continue
                            m = shaped_mul_pkg(self.gys(sub, letter, j),
                                               self.rho(sub, letter, j),
                                               pkg.dim(j + 2), pkg.dim(j))
                        else:
                            small = frozenset(sub - {letter})
                            if small not in self.strata:
                                continue
                            m = shaped_mul_pkg(self.rho(small, letter, j + 2),
                                               self.gys(small, letter, j),
                                               pkg.dim(j + 2), pkg.dim(j))
                        total = tuple(tuple(a + b for a, b in zip(r1, r2))
                                      for r1, r2 in zip(total, m))
                    if any(any(row) for row in total):
                        raise SchemaError(
                            f"divisor-class relation fails at {sorted(sub)} part {i + 1}")


def load_instance(instance: DegenerationInstance) -> DegenerationInstance:
    """Validate all type invariants; rich error on violation."""
    instance.validate()
    return instance


# ---------------------------------------------------------------------------
# the page module
# ---------------------------------------------------------------------------

@dataclass
class Summand:
    q: Tuple[int, ...]
    subset: Subset
    degree: int
    offset: int
    dim: int


class PageModule:
    """The assembled (j0, j)-graded module with back-pointers per summand."""

    def __init__(self, instance: DegenerationInstance, hl: HLModule,
                 registry: Dict[Key, List[Summand]]):
        self.instance = instance
        self.hl = hl
        self.registry = registry

    @property
    def dim_x(self) -> int:
        return self.instance.dim_x

    @property
    def k(self) -> int:
        return self.instance.k

    def dims(self) -> Dict[Key, int]:
        return {key: h.dim for key, h in sorted(self.hl.pieces.items())}

    def complex_by_j0(self, index_sets: Sequence[Tuple[int, ...]]) -> FilteredComplex:
        """(V, d1) as a one-axis complex graded by j0, filtered by each L(I)."""
        hl = self.hl
        order: Dict[int, List[Key]] = {}
        for key in hl.keys():
            order.setdefault(key[0], []).append(key)
        for j0 in order:
            order[j0].sort()
        offs: Dict[int, Dict[Key, int]] = {}
        dims: Dict[int, int] = {}
        for j0, keys in order.items():
            off, table = 0, {}
            for key in keys:
                table[key] = off
                off += hl.dim(key)
            offs[j0] = table
            dims[j0] = off
        spaces = {j0: Space(d) for j0, d in dims.items() if d}
        dmaps = {}
        for j0 in sorted(dims):
            tgt = dims.get(j0 + 1, 0)
            rows = [[QI(0)] * dims[j0] for _ in range(tgt)]
            for key in order[j0]:
                for a in range(hl.k):
                    m = hl.dop(a, key)
                    tkey = (key[0] + 1,
                            tuple(x + (1 if t == a else 0)
                                  for t, x in enumerate(key[1])))
                    if tkey not in offs.get(j0 + 1, {}):
                        continue
                    so, to = offs[j0][key], offs[j0 + 1][tkey]
                    for i, row in enumerate(m):
                        for jj, x in enumerate(row):
                            if x:
                                rows[to + i][so + jj] = rows[to + i][so + jj] + x
            dmaps[j0] = LinearMap(Space(dims[j0]), Space(tgt), mat(rows))
        filts: Dict[str, Dict[int, Filtration]] = {}
        for iset in index_sets:
            name = self.l_name(iset)
            filts[name] = {}
            for j0, keys in order.items():
                if dims[j0] == 0:
                    continue
                steps = {}
                weights = []
                for key in keys:
                    w = -sum(key[1][i] for i in iset)  # in L(I)_l iff |j_I| >= -l
                    weights.extend([w] * hl.dim(key))
                lo, hi = (min(weights), max(weights)) if weights else (0, 0)
                for l in range(lo - 1, hi + 1):
                    vecs = []
                    for idx, w in enumerate(weights):
                        if w <= l:
                            v = [QI(0)] * dims[j0]
                            v[idx] = QI(1)
                            vecs.append(v)
                    steps[l] = Subspace(dims[j0], vecs)
                filts[name][j0] = Filtration(INC, dims[j0], steps)
        kom = FilteredComplex(spaces, dmaps, filts)
        self._order, self._offs, self._dims = order, offs, dims
        return kom

    @staticmethod
    def l_name(index_set: Sequence[int]) -> str:
        return "L(" + ",".join(str(i + 1) for i in sorted(index_set)) + ")"

    def operator_by_j0(self, coeffs: Dict[int, Fraction]) -> Dict[int, LinearMap]:
        """sum of c_i l_i as a degreewise endomorphism of the j0-complex."""
        hl = self.hl
        out = {}
        for j0, keys in self._order.items():
            dim = self._dims[j0]
            rows = [[QI(0)] * dim for _ in range(dim)]
            for key in keys:
                for a, c in coeffs.items():
                    m = hl.op(a, key)
                    tkey = (key[0], tuple(x + (2 if t == a else 0)
                                          for t, x in enumerate(key[1])))
                    if tkey not in self._offs[j0]:
                        continue
                    so, to = self._offs[j0][key], self._offs[j0][tkey]
                    for i, row in enumerate(m):
                        for jj, x in enumerate(row):
                            if x:
                                rows[to + i][so + jj] = rows[to + i][so + jj] + QI(c) * x
            out[j0] = LinearMap(Space(dim), Space(dim), mat(rows))
        return out


def build_page(instance: DegenerationInstance) -> PageModule:
    """Assemble V with l_i, l0, d'_i and S, asserting every module axiom."""
    al = instance.alphabet
    k = al.k
    n_x = instance.dim_x
    registry: Dict[Key, List[Summand]] = {}
    for sub, pkg in sorted(instance.strata.items(),
                           key=lambda t: (sorted(t[0]),)):
        r = al.multirank(sub)
        qs = itertools.product(*[range(ri) for ri in r])
        for q in qs:
            for j in range(0, 2 * pkg.ndim + 1):
                d = pkg.dim(j)
                if d == 0:
                    continue
                jvec = tuple(-r[i] + 2 * q[i] + 1 for i in range(k))
                j0 = j - n_x + sum(r) - k
                key = (j0, jvec)
                lst = registry.setdefault(key, [])
                off = sum(s.dim for s in lst)
                lst.append(Summand(q, sub, j, off, d))

    def locate(key: Key, q, sub, j) -> Optional[Summand]:
        for s in registry.get(key, []):
            if s.q == q and s.subset == sub and s.degree == j:
                return s
        return None

    def key_dim(key: Key) -> int:
        return sum(s.dim for s in registry.get(key, []))

    pieces: Dict[Key, HodgeStructure] = {}
    for key, lst in registry.items():
        h = None
        for s in lst:
            r = al.multirank(s.subset)
            twist = sum(r) - sum(s.q) - k
            part = instance.strata[s.subset].cohomology[s.degree].twist(twist)
            h = part if h is None else h.direct_sum(part)
        expected_weight = key[0] - sum(key[1]) + n_x
        if h.weight != expected_weight:
            raise AxiomFailure("weight bookkeeping failed")
        pieces[key] = h

    l0: Dict[Key, Rows] = {}
    lu: Dict[Tuple[int, Key], Rows] = {}
    dd: Dict[Tuple[int, Key], Rows] = {}
    spair: Dict[Key, Rows] = {}

    def add_block(rows, tgt_sum: Summand, src_sum: Summand, block, sign=1):
        for i, row in enumerate(block):
            for jj, x in enumerate(row):
                if x:
                    rows[tgt_sum.offset + i][src_sum.offset + jj] = \
                        rows[tgt_sum.offset + i][src_sum.offset + jj] + QI(sign) * x

    for key, lst in registry.items():
        # l0: stratumwise Lefschetz action
        tkey = (key[0] + 2, key[1])
        rows = [[QI(0)] * key_dim(key) for _ in range(key_dim(tkey))]
        for s in lst:
            t = locate(tkey, s.q, s.subset, s.degree + 2)
            if t is not None:
                add_block(rows, t, s, instance.strata[s.subset].lef(s.degree))
        l0[key] = mat(rows)
        # l_i: multiplication by u_i, range-checked
        for a in range(k):
            tkey = (key[0], tuple(x + (2 if t == a else 0)
                                  for t, x in enumerate(key[1])))
            rows = [[QI(0)] * key_dim(key) for _ in range(key_dim(tkey))]
            for s in lst:
                q2 = tuple(x + (1 if t == a else 0) for t, x in enumerate(s.q))
                t2 = locate(tkey, q2, s.subset, s.degree)
                if t2 is not None:
                    add_block(rows, t2, s, _identity(s.dim))
            lu[(a, key)] = mat(rows)
        # d'_i = signed restriction + signed Gysin
        for a in range(k):
            tkey = (key[0] + 1, tuple(x + (1 if t == a else 0)
                                      for t, x in enumerate(key[1])))
            rows = [[QI(0)] * key_dim(key) for _ in range(key_dim(tkey))]
            for s in lst:
                part = al.parts[a]
                # restriction component: add a letter of part a
                q2 = tuple(x + (1 if t == a else 0) for t, x in enumerate(s.q))
                for letter in part:
                    if letter in s.subset:
                        continue
                    big = frozenset(s.subset | {letter})
                    if big not in instance.strata:
                        continue
                    t2 = locate(tkey, q2, big, s.degree)
                    if t2 is None:
                        continue
                    sign = merge_sign(al, [letter], s.subset)
                    add_block(rows, t2, s,
                              instance.rho(s.subset, letter, s.degree), sign)
                # gysin component: remove a letter of part a
                for letter in part:
                    if letter not in s.subset:
                        continue
                    small = frozenset(s.subset - {letter})
                    if small not in instance.strata:
                        continue
                    t2 = locate(tkey, s.q, small, s.degree + 2)
                    if t2 is None:
                        continue
                    sign = merge_sign(al, [letter], small)
                    add_block(rows, t2, s,
                              instance.gys(small, letter, s.degree), sign)
            dd[(a, key)] = mat(rows)
        # pairing
        nkey = (-key[0], tuple(-x for x in key[1]))
        rows = [[QI(0)] * key_dim(nkey) for _ in range(key_dim(key))]
        for s in lst:
            r = al.multirank(s.subset)
            for t in registry.get(nkey, []):
                if t.subset != s.subset:
                    continue
                if tuple(qa + qb + 1 for qa, qb in zip(s.q, t.q)) != r:
                    continue
                n_s = instance.strata[s.subset].ndim
                if s.degree + t.degree != 2 * n_s:
                    continue
                coef = QI(eps_sign(-s.degree) * (-1 if sum(s.q) % 2 else 1))
                block = instance.strata[s.subset].pair(s.degree)
                for i in range(s.dim):
                    for jj in range(t.dim):
                        if block[i][jj]:
                            rows[s.offset + i][t.offset + jj] = \
                                rows[s.offset + i][t.offset + jj] + coef * block[i][jj]
        spair[key] = mat(rows)

    hl = HLModule(k, pieces, l0=l0, lu=lu, d=dd, s_pairing=spair,
                  sym_sign=(-1) ** n_x)
    bad = hl.verify_all()
    if bad:
        raise AxiomFailure("; ".join(bad[:8]))
    return PageModule(instance, hl, registry)
