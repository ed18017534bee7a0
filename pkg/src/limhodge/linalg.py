"""Exact dense linear algebra over Q(i).

Vectors are tuples of QI; matrices are tuples of row tuples acting on column
vectors.  Subspaces are canonicalized to reduced row echelon form at
construction, so subspace equality is representation equality.  Everything is
immutable after construction and all operations are pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import NotCompatible, NotHermitian
from .gaussq import ONE, QI, ZERO

Vector = tuple
Rows = tuple


# ---------------------------------------------------------------------------
# raw vector/matrix helpers
# ---------------------------------------------------------------------------

def vec(entries: Iterable) -> Vector:
    return tuple(QI.of(x) for x in entries)


def zero_vec(n: int) -> Vector:
    return tuple(ZERO for _ in range(n))


def unit_vec(n: int, j: int) -> Vector:
    return tuple(ONE if t == j else ZERO for t in range(n))


def vec_add(a: Vector, b: Vector) -> Vector:
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a: Vector, b: Vector) -> Vector:
    return tuple(x - y for x, y in zip(a, b))


def vec_scale(c: QI, a: Vector) -> Vector:
    return tuple(c * x for x in a)


def vec_is_zero(a: Vector) -> bool:
    return all(not x for x in a)


def mat(rows: Iterable[Iterable]) -> Rows:
    return tuple(vec(r) for r in rows)


def zero_mat(m: int, n: int) -> Rows:
    return tuple(zero_vec(n) for _ in range(m))


def identity_mat(n: int) -> Rows:
    return tuple(unit_vec(n, j) for j in range(n))


def mat_apply(rows: Rows, v: Vector) -> Vector:
    out = []
    for row in rows:
        s = ZERO
        for a, x in zip(row, v):
            if a and x:
                s = s + a * x
        out.append(s)
    return tuple(out)


def mat_mul(a: Rows, b: Rows) -> Rows:
    # (a . b)(v) = a(b(v))
    bt = tuple(zip(*b)) if b else ()
    out = []
    for row in a:
        out.append(tuple(
            sum((x * y for x, y in zip(row, col) if x and y), ZERO)
            for col in bt))
    return tuple(out)


def mat_add(a: Rows, b: Rows) -> Rows:
    return tuple(vec_add(r, s) for r, s in zip(a, b))


def mat_scale(c: QI, a: Rows) -> Rows:
    return tuple(vec_scale(c, r) for r in a)


def mat_transpose(a: Rows) -> Rows:
    return tuple(zip(*a)) if a else ()

def mat_conj(a: Rows) -> Rows:
    return tuple(tuple(x.conj() for x in row) for row in a)


def mat_is_zero(a: Rows) -> bool:
    return all(vec_is_zero(r) for r in a)


def rref(rows: Sequence[Sequence[QI]]):
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return (), ()
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(m)):
            if m[i][c]:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = m[r][c].inverse()
        m[r] = [inv * x if x else x for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y if y else x for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return tuple(tuple(row) for row in m[:r]), tuple(pivots)


def nullspace(rows: Rows, ncols: int) -> Rows:
    """Basis (as rows) of {v : rows . v = 0}."""
    red, pivots = rref(rows)
    pivset = set(pivots)
    free = [c for c in range(ncols) if c not in pivset]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for i, p in enumerate(pivots):
            v[p] = -red[i][f]
        basis.append(tuple(v))
    return tuple(basis)


def mat_inverse(rows: Rows) -> Rows:
    """Inverse of a square matrix; raises on singular input."""
    n = len(rows)
    aug = [list(r) + list(unit_vec(n, i)) for i, r in enumerate(rows)]
    red, pivots = rref(aug)
    if len(red) != n or any(p != i for i, p in enumerate(pivots)):
        raise NotCompatible("matrix is singular")
    return tuple(tuple(row[n:]) for row in red)


def solve_right(rows: Rows, ncols: int, b: Vector) -> Optional[Vector]:
    """One solution v of rows . v = b, or None."""
    aug = [list(r) + [x] for r, x in zip(rows, b)]
    red, pivots = rref(aug)
    v = [ZERO] * ncols
    for i, p in enumerate(pivots):
        if p == ncols:
            return None
        v[p] = red[i][ncols]
    return tuple(v)


# ---------------------------------------------------------------------------
# spaces, subspaces, maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Space:
    dim: int
    label: str = ""

    def __post_init__(self):
        assert self.dim >= 0

    def __repr__(self):
        return f"Space({self.dim}{', ' + self.label if self.label else ''})"


class Subspace:
    """A subspace of QI^n in canonical reduced-echelon form."""

    __slots__ = ("ambient_dim", "basis", "pivots")

    def __init__(self, ambient_dim: int, vectors: Iterable[Iterable] = ()):
        self.ambient_dim = ambient_dim
        rows = [vec(v) for v in vectors]
        for r in rows:
            assert len(r) == ambient_dim
        self.basis, self.pivots = rref(rows)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __eq__(self, other):
        return (isinstance(other, Subspace)
                and self.ambient_dim == other.ambient_dim
                and self.basis == other.basis)

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        return f"Subspace(dim {self.dim} of {self.ambient_dim})"

    def reduce(self, v: Vector) -> Vector:
        """v minus its projection onto the span (echelon reduction)."""
        w = list(v)
        for row, p in zip(self.basis, self.pivots):
            if w[p]:
                f = w[p]
                w = [x - f * y for x, y in zip(w, row)]
        return tuple(w)

    def contains(self, v: Vector) -> bool:
        return vec_is_zero(self.reduce(v))

    def contains_subspace(self, other: "Subspace") -> bool:
        return all(self.contains(b) for b in other.basis)

    def coords(self, v: Vector) -> Vector:
        """Coefficients of v in the canonical basis; requires membership."""
        cs = tuple(v[p] for p in self.pivots)
        if not vec_is_zero(self.reduce(v)):
            raise NotCompatible("vector not in subspace")
        return cs

    def sum(self, other: "Subspace") -> "Subspace":
        assert self.ambient_dim == other.ambient_dim
        return Subspace(self.ambient_dim, self.basis + other.basis)

    def intersect(self, other: "Subspace") -> "Subspace":
        assert self.ambient_dim == other.ambient_dim
        if self.dim == 0 or other.dim == 0:
            return Subspace(self.ambient_dim)
        # x.A = y.B  <=>  (x, y) in nullspace of [A^T | -B^T]
        a, b = self.basis, other.basis
        rows = tuple(
            tuple(a[i][c] for i in range(len(a)))
            + tuple(-b[j][c] for j in range(len(b)))
            for c in range(self.ambient_dim))
        out = []
        for sol in nullspace(rows, len(a) + len(b)):
            x = sol[:len(a)]
            w = zero_vec(self.ambient_dim)
            for c, row in zip(x, a):
                if c:
                    w = vec_add(w, vec_scale(c, row))
            out.append(w)
        return Subspace(self.ambient_dim, out)

    def map_by(self, rows: Rows) -> "Subspace":
        """Image of this subspace under the matrix (target dim = len(rows))."""
        return Subspace(len(rows), [mat_apply(rows, b) for b in self.basis])

    def conj(self) -> "Subspace":
        return Subspace(self.ambient_dim,
                        [tuple(x.conj() for x in b) for b in self.basis])


def full_space(n: int) -> Subspace:
    return Subspace(n, identity_mat(n))


def zero_space(n: int) -> Subspace:
    return Subspace(n)


@dataclass(frozen=True)
class LinearMap:
    """Matrix of shape (target.dim, source.dim) acting on column vectors."""

    source: Space
    target: Space
    matrix: Rows

    def __post_init__(self):
        assert len(self.matrix) == self.target.dim
        for r in self.matrix:
            assert len(r) == self.source.dim

    @staticmethod
    def from_rows(src: Space, tgt: Space, rows) -> "LinearMap":
        return LinearMap(src, tgt, mat(rows))

    @staticmethod
    def zero(src: Space, tgt: Space) -> "LinearMap":
        return LinearMap(src, tgt, zero_mat(tgt.dim, src.dim))

    @staticmethod
    def identity(space: Space) -> "LinearMap":
        return LinearMap(space, space, identity_mat(space.dim))

    def apply(self, v: Vector) -> Vector:
        return mat_apply(self.matrix, v)

    def compose(self, inner: "LinearMap") -> "LinearMap":
        # self . inner
        assert inner.target.dim == self.source.dim
        if self.source.dim == 0 or self.target.dim == 0 or inner.source.dim == 0:
            return LinearMap.zero(inner.source, self.target)
        return LinearMap(inner.source, self.target,
                         mat_mul(self.matrix, inner.matrix))

    def add(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.source, self.target,
                         mat_add(self.matrix, other.matrix))

    def scale(self, c) -> "LinearMap":
        return LinearMap(self.source, self.target,
                         mat_scale(QI.of(c), self.matrix))

    def is_zero(self) -> bool:
        return mat_is_zero(self.matrix)

    def power(self, n: int) -> "LinearMap":
        assert self.source == self.target and n >= 0
        out = LinearMap.identity(self.source)
        for _ in range(n):
            out = self.compose(out)
        return out

    def rank(self) -> int:
        return len(rref(self.matrix)[0])


def kernel(f: LinearMap) -> Subspace:
    """Full solution space of f(x) = 0, in canonical form."""
    return Subspace(f.source.dim, nullspace(f.matrix, f.source.dim))


def image(f: LinearMap) -> Subspace:
    cols = mat_transpose(f.matrix)
    return Subspace(f.target.dim, cols)


def preimage(f: LinearMap, sub: Subspace) -> Subspace:
    """{v : f(v) in sub}."""
    assert sub.ambient_dim == f.target.dim
    q = Subquotient(f.target.dim, full_space(f.target.dim), sub)
    if q.dim == 0:
        return full_space(f.source.dim)
    proj = q.projection_rows()
    return Subspace(f.source.dim,
                    nullspace(mat_mul(proj, f.matrix), f.source.dim))


def restrict_to_subspace(f: LinearMap, sub: Subspace) -> Rows:
    """Matrix of f on sub's canonical basis (columns indexed by that basis)."""
    return mat_transpose(tuple(f.apply(b) for b in sub.basis))


class Subquotient:
    """outer/inner with a canonical representative basis and exact lifts."""

    __slots__ = ("ambient_dim", "outer", "inner", "reps", "space")

    def __init__(self, ambient_dim: int, outer: Subspace, inner: Subspace,
                 label: str = ""):
        assert outer.ambient_dim == ambient_dim == inner.ambient_dim
        if not outer.contains_subspace(inner):
            raise NotCompatible("inner subspace not contained in outer")
        self.ambient_dim = ambient_dim
        self.outer = outer
        self.inner = inner
        reduced = [inner.reduce(b) for b in outer.basis]
        self.reps = rref([r for r in reduced if not vec_is_zero(r)])[0]
        assert len(self.reps) == outer.dim - inner.dim
        self.space = Space(len(self.reps), label)

    @property
    def dim(self) -> int:
        return len(self.reps)

    def _rep_span(self) -> Subspace:
        s = Subspace(self.ambient_dim, self.reps)
        return s

    def project(self, v: Vector) -> Vector:
        """Coordinates of [v] in the representative basis; v must lie in outer."""
        if not self.outer.contains(v):
            raise NotCompatible("vector not in the outer subspace")
        w = self.inner.reduce(v)
        # reps are in rref, so coordinates read off at pivot columns
        span = Subspace(self.ambient_dim, self.reps)
        return span.coords(w)

    def projection_rows(self) -> Rows:
        """Projection as a (dim x ambient) matrix; only valid when outer is full."""
        assert self.outer.dim == self.ambient_dim
        if self.dim == 0:
            return ()
        # rows of inner basis followed by reps form a basis; the projection is
        # the reps-block of the inverse coordinate matrix
        bmat = mat_transpose(self.inner.basis + self.reps)
        binv = mat_inverse(bmat)
        return binv[self.inner.dim:]

    def lift(self, coords: Vector) -> Vector:
        out = zero_vec(self.ambient_dim)
        for c, r in zip(coords, self.reps):
            if c:
                out = vec_add(out, vec_scale(c, r))
        return out

    def lift_into(self, coords: Vector, constraint: Subspace) -> Vector:
        """A representative of [coords] lying in the given subspace."""
        base = self.lift(coords)
        if constraint.contains(base):
            return base
        # solve base + u in constraint with u in inner
        target_red = constraint.reduce(base)
        cols = [constraint.reduce(b) for b in self.inner.basis]
        rows = mat_transpose(mat(cols)) if cols else ()
        if not rows:
            raise NotCompatible("no representative inside the constraint")
        sol = solve_right(rows, len(cols), vec_scale(QI(-1), target_red))
        if sol is None:
            raise NotCompatible("no representative inside the constraint")
        u = zero_vec(self.ambient_dim)
        for c, b in zip(sol, self.inner.basis):
            if c:
                u = vec_add(u, vec_scale(c, b))
        out = vec_add(base, u)
        assert constraint.contains(out)
        return out

    def induced_subspace(self, sub: Subspace) -> Subspace:
        """Image of (sub cap outer + inner)/inner in representative coords."""
        inter = sub.intersect(self.outer)
        coords = [self.project(b) for b in inter.basis]
        return Subspace(self.dim, coords)


def subquotient_map(f: LinearMap, src: Subquotient, tgt: Subquotient) -> LinearMap:
    """The map induced by f on the two subquotients.

    Raises NotCompatible unless f maps src.outer into tgt.outer and src.inner
    into tgt.inner.
    """
    for b in src.outer.basis:
        if not tgt.outer.contains(f.apply(b)):
            raise NotCompatible("f does not map outer into outer")
    for b in src.inner.basis:
        if not tgt.inner.contains(f.apply(b)):
            raise NotCompatible("f does not map inner into inner")
    cols = [tgt.project(f.apply(r)) for r in src.reps]
    if not cols or tgt.dim == 0:
        return LinearMap.zero(src.space, tgt.space)
    return LinearMap(src.space, tgt.space, mat_transpose(mat(cols)))


# ---------------------------------------------------------------------------
# definiteness
# ---------------------------------------------------------------------------

class Definiteness(enum.Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    POSITIVE_SEMI = "PositiveSemidefinite"
    NEGATIVE_DEFINITE = "NegativeDefinite"
    NEGATIVE_SEMI = "NegativeSemidefinite"
    INDEFINITE = "Indefinite"
    ZERO = "Zero"


def hermitian_definiteness(g: Rows) -> Definiteness:
    """Exact classification of a Hermitian matrix over Q(i).

    Symmetric rational matrices are the special case with zero imaginary part.
    Uses congruence (LDL-style) elimination with diagonal pivoting; a nonzero
    Hermitian matrix with identically zero diagonal is indefinite.
    """
    n = len(g)
    m = [[QI.of(x) for x in row] for row in g]
    for i in range(n):
        for j in range(n):
            if m[i][j] != m[j][i].conj():
                raise NotHermitian("matrix is not Hermitian/symmetric")
    pos = neg = zero = 0
    active = list(range(n))
    while active:
        piv = None
        for i in active:
            if m[i][i]:
                piv = i
                break
        if piv is None:
            if all(not m[i][j] for i in active for j in active):
                zero += len(active)
                break
            return Definiteness.INDEFINITE
        d = m[piv][piv]
        assert d.is_real()
        if d.re > 0:
            pos += 1
        else:
            neg += 1
        active.remove(piv)
        for i in active:
            if m[i][piv]:
                f = m[i][piv] / d
                for j in active:
                    m[i][j] = m[i][j] - f * m[piv][j]
        for j in active:
            m[piv][j] = ZERO
    if pos and neg:
        return Definiteness.INDEFINITE
    if pos:
        return Definiteness.POSITIVE_DEFINITE if not zero else Definiteness.POSITIVE_SEMI
    if neg:
        return Definiteness.NEGATIVE_DEFINITE if not zero else Definiteness.NEGATIVE_SEMI
    return Definiteness.ZERO


def real_points_basis(sub: Subspace) -> Rows:
    """A rational basis of the conjugation-fixed points of a conj-stable subspace.

    Conjugation is entrywise; requires conj(sub) == sub.  The real points have
    the same dimension over Q as sub has over Q(i).
    """
    if sub.conj() != sub:
        raise NotCompatible("subspace is not conjugation-stable")
    n = sub.ambient_dim
    cand = []
    for b in sub.basis:
        re = tuple(QI(x.re) for x in b)
        im = tuple(QI(x.im) for x in b)
        if not vec_is_zero(re):
            cand.append(re)
        if not vec_is_zero(im):
            cand.append(im)
    red, _ = rref(cand)
    out = tuple(r for r in red if sub.contains(r))
    # real + i*real spans sub, so the real part has full dimension
    assert len(out) == sub.dim, "real structure mismatch"
    return out
