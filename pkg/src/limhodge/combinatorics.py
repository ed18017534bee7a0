"""Partitioned alphabets, exterior-algebra products, Koszul stalks, and the
finite-dimensional local model of the degeneration complex.

The alphabet Lambda carries a fixed total order (the order letters are given
in); every epsilon(subset) is trivialized by the order-sorted wedge generator
and all signs are computed against that trivialization.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .errors import LimhodgeError, ParamError
from .filtration import DEC, INC, FilteredComplex, Filtration, convolve
from .gaussq import QI
from .linalg import (LinearMap, Space, Subspace, full_space, mat,
                     mat_transpose, zero_space)


class NotSemistable(LimhodgeError):
    pass


class IndexOutOfRange(LimhodgeError):
    pass


@dataclass(frozen=True)
class PartitionedAlphabet:
    """Lambda = disjoint union of k ordered parts."""

    letters: Tuple[str, ...]
    parts: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        seen = []
        for part in self.parts:
            if not part:
                raise NotSemistable("empty part in the partition")
            seen.extend(part)
        if sorted(seen) != sorted(self.letters) or len(set(seen)) != len(seen):
            raise NotSemistable("parts do not partition the alphabet")

    @staticmethod
    def build(parts: Sequence[Sequence[str]]) -> "PartitionedAlphabet":
        letters = tuple(l for part in parts for l in part)
        return PartitionedAlphabet(tuple(sorted(letters)),
                                   tuple(tuple(p) for p in parts))

    @property
    def k(self) -> int:
        return len(self.parts)

    def position(self, letter: str) -> int:
        return self.letters.index(letter)

    def part_index(self, letter: str) -> int:
        for i, part in enumerate(self.parts):
            if letter in part:
                return i
        raise KeyError(letter)

    def sort(self, subset: Iterable[str]) -> Tuple[str, ...]:
        return tuple(sorted(subset, key=self.position))

    def subsets(self) -> List[FrozenSet[str]]:
        out = []
        for rsize in range(len(self.letters) + 1):
            for comb in itertools.combinations(self.letters, rsize):
                out.append(frozenset(comb))
        return out

    def multirank(self, subset: Iterable[str]) -> Tuple[int, ...]:
        """r(subset) = (|subset cap Lambda_i|)_i."""
        sub = set(subset)
        return tuple(len(sub & set(part)) for part in self.parts)

    def part_union(self, index_set: Iterable[int]) -> FrozenSet[str]:
        out = set()
        for i in index_set:
            out.update(self.parts[i])
        return frozenset(out)


def semistable_check(images: Sequence[Sequence[int]],
                     letters: Sequence[str]) -> PartitionedAlphabet:
    """Recover the partition from phi(e_i) = sum of e_lambda over a part.

    images[i][j] is the coefficient of letter j in phi(e_i); rejects any
    coefficient other than 0/1, overlaps, or uncovered letters.
    """
    k = len(images)
    parts = []
    used = set()
    for i, row in enumerate(images):
        part = []
        for j, c in enumerate(row):
            if c == 0:
                continue
            if c != 1:
                raise NotSemistable(
                    f"phi(e_{i + 1}) has coefficient {c} at {letters[j]}")
            if letters[j] in used:
                raise NotSemistable(f"letter {letters[j]} hit twice")
            used.add(letters[j])
            part.append(letters[j])
        if not part:
            raise NotSemistable(f"phi(e_{i + 1}) = 0")
        parts.append(tuple(part))
    if used != set(letters):
        raise NotSemistable("letters not covered: "
                            + ",".join(sorted(set(letters) - used)))
    return PartitionedAlphabet(tuple(letters), tuple(parts))


def canonical_pairing(letters: Sequence[str]) -> Tuple[Tuple[QI, ...], ...]:
    """Gram matrix of the canonical bilinear form on Z^Lambda (the identity)."""
    n = len(letters)
    return tuple(tuple(QI(1 if i == j else 0) for j in range(n))
                 for i in range(n))


# ---------------------------------------------------------------------------
# exterior algebra elements
# ---------------------------------------------------------------------------

class ExtElement:
    """An element of the exterior algebra of Z^Lambda (Q(i)-coefficients)."""

    __slots__ = ("alphabet", "terms")

    def __init__(self, alphabet: PartitionedAlphabet,
                 terms: Optional[Dict[FrozenSet[str], QI]] = None):
        self.alphabet = alphabet
        self.terms = {}
        for sub, c in (terms or {}).items():
            c = QI.of(c)
            if c:
                self.terms[frozenset(sub)] = c

    @staticmethod
    def generator(alphabet: PartitionedAlphabet, subset: Iterable[str],
                  coeff=1) -> "ExtElement":
        return ExtElement(alphabet, {frozenset(subset): QI.of(coeff)})

    def add(self, other: "ExtElement") -> "ExtElement":
        out = dict(self.terms)
        for sub, c in other.terms.items():
            out[sub] = out.get(sub, QI(0)) + c
        return ExtElement(self.alphabet, out)

    def scale(self, c) -> "ExtElement":
        return ExtElement(self.alphabet,
                          {s: QI.of(c) * v for s, v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def homogeneous_parts(self) -> Dict[int, "ExtElement"]:
        out: Dict[int, Dict] = {}
        for sub, c in self.terms.items():
            out.setdefault(len(sub), {})[sub] = c
        return {d: ExtElement(self.alphabet, t) for d, t in out.items()}

    def __eq__(self, other):
        return isinstance(other, ExtElement) and self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for sub in sorted(self.terms, key=lambda s: (len(s), self.alphabet.sort(s))):
            word = "^".join(self.alphabet.sort(sub)) or "1"
            bits.append(f"{self.terms[sub]}*{word}")
        return " + ".join(bits)


def merge_sign(alphabet: PartitionedAlphabet, left: Iterable[str],
               right: Iterable[str]) -> int:
    """Sign of sorting gen(left) wedge gen(right) into the canonical generator."""
    lpos = [alphabet.position(x) for x in alphabet.sort(left)]
    rpos = [alphabet.position(x) for x in alphabet.sort(right)]
    inv = sum(1 for a in lpos for b in rpos if a > b)
    return -1 if inv % 2 else 1


def chi(v: ExtElement, w: ExtElement) -> ExtElement:
    """The wedge product, in order-canonical generators."""
    alphabet = v.alphabet
    out: Dict[FrozenSet[str], QI] = {}
    for ls, lc in v.terms.items():
        for rs, rc in w.terms.items():
            if ls & rs:
                continue
            sign = merge_sign(alphabet, ls, rs)
            key = ls | rs
            out[key] = out.get(key, QI(0)) + lc * rc * sign
    return ExtElement(alphabet, out)


def contract(alphabet: PartitionedAlphabet, letter: str,
             subset: FrozenSet[str]) -> Tuple[int, FrozenSet[str]]:
    """(e_letter wedge)^{-1} on a generator containing the letter."""
    assert letter in subset
    rest = subset - {letter}
    sign = merge_sign(alphabet, [letter], rest)
    return sign, rest


def chibar(v: ExtElement, w: ExtElement) -> ExtElement:
    """The partition-contracted product: zero unless the intersection meets
    every part exactly once; otherwise contract the shared letter of each
    part out of the right factor and wedge."""
    alphabet = v.alphabet
    out = ExtElement(alphabet)
    for ls, lc in v.terms.items():
        for rs, rc in w.terms.items():
            shared = []
            ok = True
            for part in alphabet.parts:
                common = ls & rs & frozenset(part)
                if len(common) != 1:
                    ok = False
                    break
                shared.append(next(iter(common)))
            if not ok:
                continue
            sign = 1
            cur = rs
            for letter in shared:  # (e_{l_1}w)^{-1} acts first
                s, cur = contract(alphabet, letter, cur)
                sign *= s
            term = chi(ExtElement.generator(alphabet, ls, lc * rc * sign),
                       ExtElement.generator(alphabet, cur))
            out = out.add(term)
    return out


def restrict_to(alphabet: PartitionedAlphabet, gamma: Iterable[str],
                elem: ExtElement, sub_alphabet: PartitionedAlphabet) -> ExtElement:
    """Push forward along the projection Z^Lambda -> Z^Gamma: kill every
    generator using a letter outside Gamma."""
    gam = frozenset(gamma)
    return ExtElement(sub_alphabet,
                      {s: c for s, c in elem.terms.items() if s <= gam})


# ---------------------------------------------------------------------------
# Koszul stalk
# ---------------------------------------------------------------------------

class KoszulStalk:
    """The constant-coefficient stalk: direct sum of epsilon(subset) in degree
    |subset|, differential zero, with wedge operators and the W(I) filtrations."""

    def __init__(self, alphabet: PartitionedAlphabet):
        self.alphabet = alphabet
        self.by_degree: Dict[int, List[FrozenSet[str]]] = {}
        for sub in alphabet.subsets():
            self.by_degree.setdefault(len(sub), []).append(sub)
        for n in self.by_degree:
            self.by_degree[n].sort(key=lambda s: self.alphabet.sort(s))

    def space(self, n: int) -> Space:
        return Space(len(self.by_degree.get(n, [])))

    def index(self, n: int, subset: FrozenSet[str]) -> int:
        return self.by_degree[n].index(subset)

    def t_op(self, i: int, n: int) -> LinearMap:
        """t_i wedge = sum of e_lambda wedge over the i-th part, degree n -> n+1."""
        src = self.by_degree.get(n, [])
        tgt = self.by_degree.get(n + 1, [])
        rows = [[QI(0)] * len(src) for _ in tgt]
        for j, sub in enumerate(src):
            for letter in self.alphabet.parts[i]:
                if letter in sub:
                    continue
                sign = merge_sign(self.alphabet, [letter], sub)
                rows[tgt.index(sub | {letter})][j] = QI(sign)
        return LinearMap(self.space(n), self.space(n + 1), mat(rows))

    def w_filtration(self, index_set: Sequence[int], n: int) -> Filtration:
        """W(I)_m = span of epsilon(subset) with |subset cap Lambda_I| <= m."""
        lam_i = self.alphabet.part_union(index_set)
        subs = self.by_degree.get(n, [])
        dim = len(subs)
        steps = {}
        for m in range(-1, len(lam_i) + 1):
            vecs = []
            for j, sub in enumerate(subs):
                if len(sub & lam_i) <= m:
                    v = [QI(0)] * dim
                    v[j] = QI(1)
                    vecs.append(v)
            steps[m] = Subspace(dim, vecs)
        return Filtration(INC, dim, steps)


# ---------------------------------------------------------------------------
# the local complex A
# ---------------------------------------------------------------------------

def _lname(index_set: Sequence[int]) -> str:
    return "L(" + ",".join(str(i + 1) for i in sorted(index_set)) + ")"


class LocalComplexA:
    """The stalk model of the degeneration complex: fibers indexed by
    q in N^k, fiber basis the subsets meeting part i at least q_i + 1 times,
    degree |subset| - k, differential sum of u-shifted wedge operators,
    filtrations L(I) for every I, L = L(all), and F."""

    def __init__(self, alphabet: PartitionedAlphabet):
        self.alphabet = alphabet
        k = alphabet.k
        sizes = [len(p) for p in alphabet.parts]
        self.fibers: List[Tuple[int, ...]] = [
            q for q in itertools.product(*[range(s) for s in sizes])]
        self.basis: Dict[int, List[Tuple[Tuple[int, ...], FrozenSet[str]]]] = {}
        for q in self.fibers:
            for sub in alphabet.subsets():
                r = alphabet.multirank(sub)
                if all(r[i] >= q[i] + 1 for i in range(k)):
                    self.basis.setdefault(len(sub) - k, []).append((q, sub))
        for n in self.basis:
            self.basis[n].sort(key=lambda t: (t[0], self.alphabet.sort(t[1])))
        self.index: Dict[int, Dict] = {
            n: {be: j for j, be in enumerate(bs)}
            for n, bs in self.basis.items()}
        self.complex = self._build_complex()

    # -- spaces and operators ---------------------------------------------------

    def space(self, n: int) -> Space:
        return Space(len(self.basis.get(n, [])))

    def degrees(self) -> List[int]:
        return sorted(self.basis)

    def d_component(self, i: int, n: int) -> LinearMap:
        """d_i (u^q x eta) = u^{q+e_i} x t_i wedge eta, degree n -> n+1."""
        src = self.basis.get(n, [])
        tgt = self.basis.get(n + 1, [])
        rows = [[QI(0)] * len(src) for _ in tgt]
        for j, (q, sub) in enumerate(src):
            q2 = tuple(qq + (1 if t == i else 0) for t, qq in enumerate(q))
            for letter in self.alphabet.parts[i]:
                if letter in sub:
                    continue
                key = (q2, sub | {letter})
                if key not in self.index.get(n + 1, {}):
                    continue
                sign = merge_sign(self.alphabet, [letter], sub)
                rows[self.index[n + 1][key]][j] = QI(sign)
        return LinearMap(self.space(n), self.space(n + 1), mat(rows))

    def nu_op(self, i: int, n: int) -> LinearMap:
        """nu_i (u^q x eta) = u^{q+e_i} x eta, with out-of-range summands dropped."""
        src = self.basis.get(n, [])
        rows = [[QI(0)] * len(src) for _ in src]
        for j, (q, sub) in enumerate(src):
            q2 = tuple(qq + (1 if t == i else 0) for t, qq in enumerate(q))
            key = (q2, sub)
            if key in self.index.get(n, {}):
                rows[self.index[n][key]][j] = QI(1)
        return LinearMap(self.space(n), self.space(n), mat(rows))

    # -- filtrations -------------------------------------------------------------

    def l_filtration(self, index_set: Sequence[int], n: int) -> Filtration:
        """L(I)_m: weight of (q, subset) is |subset cap Lambda_I| - 2|q_I| - |I|."""
        lam_i = self.alphabet.part_union(index_set)
        idx = sorted(index_set)
        bs = self.basis.get(n, [])
        dim = len(bs)
        weights = []
        for (q, sub) in bs:
            w = len(sub & lam_i) - 2 * sum(q[i] for i in idx) - len(idx)
            weights.append(w)
        steps = {}
        lo = min(weights, default=0) - 1
        hi = max(weights, default=0)
        for m in range(lo, hi + 1):
            vecs = []
            for j, w in enumerate(weights):
                if w <= m:
                    v = [QI(0)] * dim
                    v[j] = QI(1)
                    vecs.append(v)
            steps[m] = Subspace(dim, vecs)
        return Filtration(INC, dim, steps)

    def f_filtration(self, n: int) -> Filtration:
        """F^p = span of the fibers with |q| <= n - p."""
        bs = self.basis.get(n, [])
        dim = len(bs)
        steps = {}
        qsizes = [sum(q) for (q, _) in bs]
        lo = n - (max(qsizes, default=0)) - 1
        hi = n - (min(qsizes, default=0)) + 1
        for p in range(lo, hi + 1):
            vecs = []
            for j, qs in enumerate(qsizes):
                if qs <= n - p:
                    v = [QI(0)] * dim
                    v[j] = QI(1)
                    vecs.append(v)
            steps[p] = Subspace(dim, vecs)
        return Filtration(DEC, dim, steps)

    def _build_complex(self) -> FilteredComplex:
        k = self.alphabet.k
        degs = self.degrees()
        spaces = {n: self.space(n) for n in degs if self.space(n).dim}
        dmaps = {}
        for n in degs:
            total = LinearMap.zero(self.space(n), self.space(n + 1))
            for i in range(k):
                total = total.add(self.d_component(i, n))
            dmaps[n] = total
        filts: Dict[str, Dict[int, Filtration]] = {"F": {}}
        for rsize in range(k + 1):
            for index_set in itertools.combinations(range(k), rsize):
                filts[_lname(index_set)] = {}
        for n in degs:
            filts["F"][n] = self.f_filtration(n)
            for rsize in range(k + 1):
                for index_set in itertools.combinations(range(k), rsize):
                    filts[_lname(index_set)][n] = self.l_filtration(index_set, n)
        kom = FilteredComplex(spaces, dmaps, filts)
        self._assert_operator_identities(kom)
        return kom

    def lname(self, index_set: Sequence[int]) -> str:
        return _lname(index_set)

    @property
    def full_lname(self) -> str:
        return _lname(range(self.alphabet.k))

    def _assert_operator_identities(self, kom: FilteredComplex):
        k = self.alphabet.k
        for n in self.degrees():
            for i in range(k):
                for j in range(i, k):
                    a = self.d_component(i, n + 1).compose(self.d_component(j, n))
                    b = self.d_component(j, n + 1).compose(self.d_component(i, n))
                    if not a.add(b).is_zero():
                        raise LimhodgeError("d_i d_j + d_j d_i != 0")
                    ab = self.nu_op(i, n).compose(self.nu_op(j, n))
                    ba = self.nu_op(j, n).compose(self.nu_op(i, n))
                    if ab.matrix != ba.matrix:
                        raise LimhodgeError("nu_i nu_j != nu_j nu_i")
            for i in range(k):
                nu = self.nu_op(i, n)
                for rsize in range(k + 1):
                    for index_set in itertools.combinations(range(k), rsize):
                        fil = kom.filtration(_lname(index_set), n).as_increasing()
                        lo, hi = fil.window()
                        drop = 2 if i in index_set else 0
                        for m in range(lo, hi + 1):
                            tgt = fil.value(m - drop)
                            for b in fil.value(m).basis:
                                if not tgt.contains(nu.apply(b)):
                                    raise LimhodgeError(
                                        f"nu_{i + 1} violates the L{index_set} shift")
                ffil = kom.filtration("F", n)
                lo, hi = ffil.window()
                for p in range(lo, hi + 1):
                    tgt = ffil.value(p - 1)
                    for b in ffil.value(p).basis:
                        if not tgt.contains(nu.apply(b)):
                            raise LimhodgeError(f"nu_{i + 1} violates the F shift")


def build_local_A(alphabet: PartitionedAlphabet) -> LocalComplexA:
    return LocalComplexA(alphabet)


# ---------------------------------------------------------------------------
# stalk residue
# ---------------------------------------------------------------------------

def residue_on_generator(alphabet: PartitionedAlphabet, r: Sequence[int],
                         subset: FrozenSet[str]) -> List[Tuple[FrozenSet[str], FrozenSet[str], int]]:
    """res_r on the generator of epsilon(subset): terms (mu, subset minus mu,
    sign) over mu contained in subset with multirank r, the sign being that of
    chi(mu, subset minus mu)^{-1} in the canonical trivialization."""
    if any(ri < 1 for ri in r):
        raise IndexOutOfRange("residue needs r >= e componentwise")
    out = []
    candidates_per_part = []
    sub = set(subset)
    for i, part in enumerate(alphabet.parts):
        inside = [l for l in part if l in sub]
        if len(inside) < r[i]:
            return []
        candidates_per_part.append(list(itertools.combinations(inside, r[i])))
    for choice in itertools.product(*candidates_per_part):
        mu = frozenset(l for group in choice for l in group)
        rest = frozenset(sub - mu)
        sign = merge_sign(alphabet, mu, rest)
        out.append((mu, rest, sign))
    return out


@dataclass
class StalkResidue:
    """The residue map on one fiber of the local complex, target indexed by
    (mu in S_r(Lambda), residual subset)."""

    alphabet: PartitionedAlphabet
    r: Tuple[int, ...]
    q: Tuple[int, ...]
    source_subsets: List[FrozenSet[str]]
    target_index: List[Tuple[FrozenSet[str], FrozenSet[str]]]
    map: LinearMap


def stalk_residue(a_complex: LocalComplexA, r: Sequence[int],
                  q: Sequence[int]) -> StalkResidue:
    """The residue of the fiber at q with respect to r (requires r >= q + e)."""
    alphabet = a_complex.alphabet
    r = tuple(r)
    q = tuple(q)
    if any(ri < 1 for ri in r):
        raise IndexOutOfRange("residue needs r >= e componentwise")
    if any(ri < qi + 1 for ri, qi in zip(r, q)):
        raise IndexOutOfRange("residue needs r >= q + e on this fiber")
    src = [sub for sub in alphabet.subsets()
           if all(c >= qi + 1 for c, qi in zip(alphabet.multirank(sub), q))]
    src.sort(key=lambda s: alphabet.sort(s))
    tindex: List[Tuple[FrozenSet[str], FrozenSet[str]]] = []
    tpos = {}
    rows: List[List[QI]] = []
    entries = []
    for j, sub in enumerate(src):
        for mu, rest, sign in residue_on_generator(alphabet, r, sub):
            key = (mu, rest)
            if key not in tpos:
                tpos[key] = len(tindex)
                tindex.append(key)
            entries.append((tpos[key], j, sign))
    rows = [[QI(0)] * len(src) for _ in tindex]
    for i, j, s in entries:
        rows[i][j] = QI(s)
    return StalkResidue(alphabet, r, q, src, tindex,
                        LinearMap(Space(len(src)), Space(len(tindex)), mat(rows)))


def verify_residue_isomorphism(a_complex: LocalComplexA) -> bool:
    """The graded residue isomorphism at constant coefficients: for every fiber
    q and weight m, the total residue identifies gr^W_m of the fiber with the
    direct sum of the degree-zero residual components over r >= q + e, |r| = m,
    respecting the W(I) refinement (index-set shadow of the residue lemmas)."""
    alphabet = a_complex.alphabet
    k = alphabet.k
    sizes = [len(p) for p in alphabet.parts]
    for q in a_complex.fibers:
        fiber = [sub for sub in alphabet.subsets()
                 if all(c >= qi + 1 for c, qi in
                        zip(alphabet.multirank(sub), q))]
        for m in range(sum(q) + k, len(alphabet.letters) + 1):
            graded = [sub for sub in fiber if len(sub) == m]
            rvals = [r for r in itertools.product(
                *[range(qi + 1, s + 1) for qi, s in zip(q, sizes)])
                if sum(r) == m]
            # images: degree-zero residual components (empty rest)
            hit = set()
            for sub in graded:
                for r in rvals:
                    for mu, rest, sign in residue_on_generator(alphabet, r, sub):
                        if not rest:
                            hit.add((r, mu))
                            if mu != sub or sign != 1:
                                return False
            want = {(r, frozenset(mu))
                    for r in rvals
                    for mu in [s for s in alphabet.subsets()
                               if alphabet.multirank(s) == r]}
            if hit != want or len(want) != len(graded):
                return False
            # W(I)-refinement: residues vanish on W(I)_l when |r_I| > l
            for rsize in range(k + 1):
                for index_set in itertools.combinations(range(k), rsize):
                    lam_i = alphabet.part_union(index_set)
                    for sub in fiber:
                        l = len(sub & lam_i)
                        for r in rvals:
                            if sum(r[i] for i in index_set) > l:
                                if any(True for _ in residue_on_generator(
                                        alphabet, r, sub)):
                                    return False
    return True


def verify_convolution_identity(a_complex: LocalComplexA,
                                index_set: Sequence[int]) -> bool:
    """L = L(I) * L(J) (J the complement) degreewise on the local complex."""
    k = a_complex.alphabet.k
    comp = [i for i in range(k) if i not in set(index_set)]
    kom = a_complex.complex
    for n in kom.degrees():
        li = kom.filtration(_lname(index_set), n).as_decreasing()
        lj = kom.filtration(_lname(comp), n).as_decreasing()
        l_full = kom.filtration(a_complex.full_lname, n).as_decreasing()
        if not convolve(li, lj).same_function(l_full):
            return False
    return True
