"""Bounded filtrations and filtered cochain complexes.

A Filtration stores finitely many values and clamps to zero/full outside the
stored window.  Decreasing F and increasing W are interchanged by W_m = F^{-m};
internal algorithms run on the decreasing form.  A FilteredComplex carries any
number of named filtrations, each a d-stable family of subspaces per degree.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Tuple

from .errors import MismatchedObject, NotCompatible, UnknownFiltration
from .linalg import (LinearMap, Space, Subquotient, Subspace, full_space,
                     subquotient_map, zero_space)

DEC = "dec"
INC = "inc"


class Filtration:
    __slots__ = ("direction", "ambient_dim", "steps")

    def __init__(self, direction: str, ambient_dim: int,
                 steps: Dict[int, Subspace]):
        assert direction in (DEC, INC)
        self.direction = direction
        self.ambient_dim = ambient_dim
        for s in steps.values():
            assert s.ambient_dim == ambient_dim
        # drop entries the query rule reconstructs: dec reads the next stored
        # index >= p, inc the previous stored index <= m
        canon = {}
        if direction == DEC:
            nxt = None
            for idx in sorted(steps, reverse=True):
                if nxt is None or steps[idx] != nxt:
                    canon[idx] = steps[idx]
                    nxt = steps[idx]
        else:
            prev = None
            for idx in sorted(steps):
                if prev is None or steps[idx] != prev:
                    canon[idx] = steps[idx]
                    prev = steps[idx]
        self.steps = canon
        self._check_monotone()

    def _check_monotone(self):
        idxs = sorted(self.steps)
        for a, b in zip(idxs, idxs[1:]):
            lo, hi = self.steps[a], self.steps[b]
            if self.direction == DEC:
                if not lo.contains_subspace(hi):
                    raise NotCompatible("decreasing filtration not nested")
            else:
                if not hi.contains_subspace(lo):
                    raise NotCompatible("increasing filtration not nested")

    # -- queries -------------------------------------------------------------

    def value(self, p: int) -> Subspace:
        idxs = sorted(self.steps)
        if self.direction == DEC:
            if not idxs:
                return full_space(self.ambient_dim) if p <= 0 else zero_space(self.ambient_dim)
            if p < idxs[0]:
                return full_space(self.ambient_dim)
            for idx in idxs:
                if idx >= p:
                    return self.steps[idx]
            return zero_space(self.ambient_dim)
        if not idxs:
            return full_space(self.ambient_dim) if p >= 0 else zero_space(self.ambient_dim)
        if p > idxs[-1]:
            return full_space(self.ambient_dim)
        for idx in reversed(idxs):
            if idx <= p:
                return self.steps[idx]
        return zero_space(self.ambient_dim)

    def window(self) -> Tuple[int, int]:
        if not self.steps:
            return (0, 0)
        idxs = sorted(self.steps)
        return (idxs[0], idxs[-1])

    def width(self) -> int:
        lo, hi = self.window()
        return hi - lo

    def is_exhaustive(self) -> bool:
        lo, hi = self.window()
        if self.direction == DEC:
            return self.value(lo).dim == self.ambient_dim and self.value(hi + 1).dim == 0
        return self.value(hi).dim == self.ambient_dim and self.value(lo - 1).dim == 0

    # -- constructions ---------------------------------------------------------

    def shift(self, n: int) -> "Filtration":
        """F[n]^p = F^(p+n) for decreasing; W[n]_m = W_(m-n) for increasing."""
        if self.direction == DEC:
            return Filtration(DEC, self.ambient_dim,
                              {p - n: s for p, s in self.steps.items()})
        return Filtration(INC, self.ambient_dim,
                          {m + n: s for m, s in self.steps.items()})

    def as_decreasing(self) -> "Filtration":
        if self.direction == DEC:
            return self
        return Filtration(DEC, self.ambient_dim,
                          {-m: s for m, s in self.steps.items()})

    def as_increasing(self) -> "Filtration":
        if self.direction == INC:
            return self
        return Filtration(INC, self.ambient_dim,
                          {-p: s for p, s in self.steps.items()})

    def same_function(self, other: "Filtration") -> bool:
        """Equality as a function Z -> subspaces, directions normalized."""
        a, b = self.as_decreasing(), other.as_decreasing()
        if a.ambient_dim != b.ambient_dim:
            return False
        lo = min(a.window()[0], b.window()[0]) - 1
        hi = max(a.window()[1], b.window()[1]) + 1
        return all(a.value(p) == b.value(p) for p in range(lo, hi + 1))

    def __eq__(self, other):
        return isinstance(other, Filtration) and self.same_function(other)

    def __hash__(self):
        raise TypeError("unhashable")

    def __repr__(self):
        arrows = {p: s.dim for p, s in sorted(self.steps.items())}
        return f"Filtration({self.direction}, dims {arrows})"

    def map_by(self, rows, target_dim: Optional[int] = None) -> "Filtration":
        """Image filtration under a matrix (rows act on column vectors)."""
        td = len(rows) if target_dim is None else target_dim
        return Filtration(self.direction, td,
                          {p: s.map_by(rows) for p, s in self.steps.items()})


def trivial_filtration(ambient_dim: int, direction: str = DEC,
                       jump: int = 0) -> Filtration:
    """Full at the jump index and clamped outside (single-jump filtration)."""
    return Filtration(direction, ambient_dim, {jump: full_space(ambient_dim)})


def shift_filtration(f: Filtration, n: int) -> Filtration:
    return f.shift(n)


def convolve(f: Filtration, g: Filtration) -> Filtration:
    """(F * G)^p = sum over a+b=p of F^a cap G^b, both decreasing."""
    if f.direction != DEC or g.direction != DEC:
        raise MismatchedObject("convolution needs decreasing filtrations")
    if f.ambient_dim != g.ambient_dim:
        raise MismatchedObject("filtrations live on different objects")
    n = f.ambient_dim
    flo, fhi = f.window()
    glo, ghi = g.window()
    steps = {}
    for p in range(flo + glo, fhi + ghi + 2):
        total = zero_space(n)
        for a in range(flo - 1, fhi + 1):
            term = f.value(a).intersect(g.value(p - a))
            total = total.sum(term)
        steps[p] = total
    return Filtration(DEC, n, steps)


class FilteredComplex:
    """A bounded cochain complex with named degreewise filtrations.

    spaces: degree -> Space; d: degree -> LinearMap K^n -> K^(n+1);
    filtrations: name -> degree -> Filtration.  Degrees not listed are zero.
    prov (optional): degree -> Subquotient presenting this complex inside an
    ambient one; graded_piece fills it so page machinery can lift exactly.
    """

    def __init__(self, spaces: Dict[int, Space], d: Dict[int, LinearMap],
                 filtrations: Optional[Dict[str, Dict[int, Filtration]]] = None,
                 prov: Optional[Dict[int, Subquotient]] = None,
                 check: bool = True):
        self.spaces = dict(spaces)
        self.d = dict(d)
        self.filtrations = {k: dict(v) for k, v in (filtrations or {}).items()}
        self.prov = dict(prov) if prov else None
        if check:
            self.validate()

    # -- accessors -----------------------------------------------------------

    def degrees(self):
        return sorted(self.spaces)

    def space(self, n: int) -> Space:
        return self.spaces.get(n, Space(0))

    def dmap(self, n: int) -> LinearMap:
        if n in self.d:
            return self.d[n]
        return LinearMap.zero(self.space(n), self.space(n + 1))

    def filtration(self, name: str, n: int) -> Filtration:
        if name not in self.filtrations:
            raise UnknownFiltration(name)
        fil = self.filtrations[name].get(n)
        if fil is None:
            return trivial_filtration(self.space(n).dim)
        return fil

    def filtration_names(self):
        return sorted(self.filtrations)

    def filt_value(self, name: str, n: int, p: int) -> Subspace:
        """Decreasing-convention value F^p K^n."""
        return self.filtration(name, n).as_decreasing().value(p)

    def filtration_window(self, name: str) -> Tuple[int, int]:
        los, his = [], []
        for n in self.degrees():
            f = self.filtration(name, n).as_decreasing()
            lo, hi = f.window()
            los.append(lo)
            his.append(hi)
        if not los:
            return (0, 0)
        return (min(los), max(his))

    # -- validation ------------------------------------------------------------

    def validate(self):
        for n in self.degrees():
            dn = self.dmap(n)
            assert dn.source.dim == self.space(n).dim
            assert dn.target.dim == self.space(n + 1).dim
            dd = self.dmap(n + 1).compose(dn)
            if not dd.is_zero():
                raise NotCompatible(f"d.d != 0 at degree {n}")
        for name, per_deg in self.filtrations.items():
            for n in self.degrees():
                f = self.filtration(name, n).as_decreasing()
                assert f.ambient_dim == self.space(n).dim, (name, n)
                g = self.filtration(name, n + 1).as_decreasing()
                dn = self.dmap(n)
                lo, hi = f.window()
                for p in range(lo, hi + 1):
                    for b in f.value(p).basis:
                        if not g.value(p).contains(dn.apply(b)):
                            raise NotCompatible(
                                f"filtration {name} not d-stable at degree {n}, level {p}")

    # -- cohomology -------------------------------------------------------------

    def cocycles(self, n: int) -> Subspace:
        from .linalg import kernel
        return kernel(self.dmap(n))

    def coboundaries(self, n: int) -> Subspace:
        from .linalg import image
        return image(self.dmap(n - 1))

    def cohomology(self, n: int) -> Subquotient:
        return Subquotient(self.space(n).dim, self.cocycles(n),
                           self.coboundaries(n))

    def betti(self) -> Dict[int, int]:
        lo = min(self.degrees(), default=0)
        hi = max(self.degrees(), default=0)
        out = {}
        for n in range(lo, hi + 1):
            d = self.cohomology(n).dim
            if d:
                out[n] = d
        return out

    def total_dim(self, n: int) -> int:
        return self.space(n).dim


def graded_piece(kom: FilteredComplex, name: str, p: int) -> FilteredComplex:
    """The complex gr^p (decreasing convention) with other filtrations induced.

    The returned complex carries prov: each degree is a Subquotient of kom's
    degree, so representatives can be lifted back exactly.
    """
    if name not in kom.filtrations:
        raise UnknownFiltration(name)
    spaces, dmaps, prov = {}, {}, {}
    sq = {}
    for n in kom.degrees():
        outer = kom.filt_value(name, n, p)
        inner = kom.filt_value(name, n, p + 1)
        sq[n] = Subquotient(kom.space(n).dim, outer, inner)
        if sq[n].dim:
            spaces[n] = sq[n].space
        prov[n] = sq[n]
    for n in kom.degrees():
        if n not in spaces and (n + 1) not in spaces:
            continue
        src = sq.get(n) or Subquotient(kom.space(n).dim,
                                       zero_space(kom.space(n).dim),
                                       zero_space(kom.space(n).dim))
        tgt = sq.get(n + 1)
        if tgt is None:
            tgt = Subquotient(kom.space(n + 1).dim,
                              zero_space(kom.space(n + 1).dim),
                              zero_space(kom.space(n + 1).dim))
        dmaps[n] = subquotient_map(kom.dmap(n), src, tgt)
    filts: Dict[str, Dict[int, Filtration]] = {}
    for other in kom.filtration_names():
        if other == name:
            continue
        filts[other] = {}
        for n in kom.degrees():
            if n not in spaces:
                continue
            f = kom.filtration(other, n).as_decreasing()
            lo, hi = f.window()
            steps = {q: sq[n].induced_subspace(f.value(q))
                     for q in range(lo, hi + 1)}
            filts[other][n] = Filtration(DEC, spaces[n].dim, steps)
    spaces = {n: s for n, s in spaces.items() if s.dim}
    dmaps = {n: m for n, m in dmaps.items()
             if m.source.dim or m.target.dim}
    return FilteredComplex(spaces, dmaps, filts, prov=prov)
