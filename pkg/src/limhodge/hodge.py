"""Rational Hodge structures presented over Q(i) with an entrywise real frame.

A HodgeStructure is a Q(i)-space of some dimension whose conjugation is
entrywise in the chosen basis; the (p,q) components are conjugation-compatible
subspaces.  The Weil operator acts by i^(p-q) on the (p,q) component.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .errors import NotCompatible
from .gaussq import QI, i_power
from .linalg import (Rows, Subspace, full_space, mat, mat_inverse, mat_mul,
                     mat_transpose, zero_space)


class HodgeStructure:
    """weight + components (p,q) -> Subspace, conjugation entrywise."""

    __slots__ = ("dim", "weight", "components")

    def __init__(self, dim: int, weight: int,
                 components: Dict[Tuple[int, int], Subspace],
                 check: bool = True):
        self.dim = dim
        self.weight = weight
        self.components = {pq: s for pq, s in components.items() if s.dim}
        if check:
            self.validate()

    def validate(self):
        total = 0
        running = zero_space(self.dim)
        for (p, q), sub in self.components.items():
            if p + q != self.weight:
                raise NotCompatible(f"component ({p},{q}) off weight {self.weight}")
            total += sub.dim
            running = running.sum(sub)
            conj = sub.conj()
            mirror = self.components.get((q, p), zero_space(self.dim))
            if conj != mirror:
                raise NotCompatible(f"conjugation does not swap ({p},{q})/({q},{p})")
        if total != self.dim or running.dim != self.dim:
            raise NotCompatible("components do not decompose the space")

    def hodge_numbers(self) -> Dict[Tuple[int, int], int]:
        return {pq: s.dim for pq, s in sorted(self.components.items())}

    def weil_matrix(self) -> Rows:
        """C = sum of i^(p-q) times the projector onto the (p,q) part."""
        if self.dim == 0:
            return ()
        cols: List[tuple] = []
        factors: List[QI] = []
        for (p, q), sub in sorted(self.components.items()):
            for b in sub.basis:
                cols.append(b)
                factors.append(i_power(p - q))
        pmat = mat_transpose(tuple(cols))
        pinv = mat_inverse(pmat)
        scaled = tuple(tuple(factors[i] * x for x in row)
                       for i, row in enumerate(pinv))
        return mat_mul(pmat, scaled)

    def twist(self, n: int) -> "HodgeStructure":
        """Tate twist by (−n): weight + 2n, components shifted by (n, n)."""
        return HodgeStructure(self.dim, self.weight + 2 * n,
                              {(p + n, q + n): s
                               for (p, q), s in self.components.items()},
                              check=False)

    @staticmethod
    def split(weight: int, dims: Dict[Tuple[int, int], int]) -> "HodgeStructure":
        """A split structure with the given Hodge numbers: (p,p) parts real,
        off-diagonal pairs spanned by conjugate vectors x +- i y."""
        for (p, q), d in dims.items():
            if p + q != weight:
                raise NotCompatible("hodge numbers off the stated weight")
            if dims.get((q, p), 0) != d:
                raise NotCompatible("hodge numbers not conjugation-symmetric")
        dim = sum(dims.values())
        comps: Dict[Tuple[int, int], list] = {pq: [] for pq in dims}
        off = 0

        def unit(j):
            return tuple(QI(1 if t == j else 0) for t in range(dim))

        for (p, q), d in sorted(dims.items()):
            if p == q:
                for _ in range(d):
                    comps[(p, q)].append(unit(off))
                    off += 1
            elif p > q:
                for _ in range(d):
                    x, y = unit(off), unit(off + 1)
                    plus = tuple(a + QI(0, 1) * b for a, b in zip(x, y))
                    minus = tuple(a - QI(0, 1) * b for a, b in zip(x, y))
                    comps[(p, q)].append(plus)
                    comps[(q, p)].append(minus)
                    off += 2
        assert off == dim
        return HodgeStructure(dim, weight,
                              {pq: Subspace(dim, vs) for pq, vs in comps.items()})

    def tensor(self, other: "HodgeStructure") -> "HodgeStructure":
        """Kuenneth tensor; basis ordered pairs (self index, other index)."""
        dim = self.dim * other.dim
        comps: Dict[Tuple[int, int], list] = {}

        def kron(u, v):
            return tuple(a * b for a in u for b in v)

        for (p1, q1), s1 in self.components.items():
            for (p2, q2), s2 in other.components.items():
                key = (p1 + p2, q1 + q2)
                comps.setdefault(key, [])
                for b1 in s1.basis:
                    for b2 in s2.basis:
                        comps[key].append(kron(b1, b2))
        return HodgeStructure(dim, self.weight + other.weight,
                              {pq: Subspace(dim, vs) for pq, vs in comps.items()})

    def direct_sum(self, other: "HodgeStructure") -> "HodgeStructure":
        if self.weight != other.weight:
            raise NotCompatible("weights differ")
        dim = self.dim + other.dim
        comps: Dict[Tuple[int, int], list] = {}
        for (pq, s) in self.components.items():
            comps.setdefault(pq, []).extend(
                tuple(b) + tuple(QI(0) for _ in range(other.dim))
                for b in s.basis)
        for (pq, s) in other.components.items():
            comps.setdefault(pq, []).extend(
                tuple(QI(0) for _ in range(self.dim)) + tuple(b)
                for b in s.basis)
        return HodgeStructure(dim, self.weight,
                              {pq: Subspace(dim, vs) for pq, vs in comps.items()})

    def f_subspace(self, p: int) -> Subspace:
        """The Hodge filtration F^p = direct sum of components with first index >= p."""
        out = zero_space(self.dim)
        for (pp, qq), s in self.components.items():
            if pp >= p:
                out = out.sum(s)
        return out


def trivial_hodge(dim: int, weight: int = 0) -> HodgeStructure:
    """Pure (w/2, w/2) structure on QI^dim (weight must be even)."""
    assert weight % 2 == 0
    half = weight // 2
    if dim == 0:
        return HodgeStructure(0, weight, {})
    return HodgeStructure(dim, weight, {(half, half): full_space(dim)})
