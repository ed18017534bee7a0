"""Polarized differential multi-graded Hodge-Lefschetz modules.

A module is graded by (j0, j) with j in Z^k; l0 raises j0 by 2, l_a raises
j_a by 2, the optional differentials d_a raise (j0, j_a) by (1, 1), and the
bilinear pairing S couples complementary gradings.  All operators are stored
blockwise per graded piece; nothing is ever flattened globally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import AxiomFailure, DescentAxiomFailure, NotCompatible, NotLefschetz
from .gaussq import QI
from .hodge import HodgeStructure
from .linalg import (Definiteness, LinearMap, Rows, Space, Subquotient,
                     Subspace, full_space, hermitian_definiteness, image,
                     kernel, mat, mat_apply, mat_inverse, mat_mul, mat_transpose,
                     nullspace, real_points_basis, solve_right, vec_is_zero,
                     zero_mat, zero_space)

Key = Tuple[int, Tuple[int, ...]]

L0_AXIS = -1  # axis label for the central operator


def shaped_mul(a: Rows, b: Rows, out_rows: int, out_cols: int) -> Rows:
    """Matrix product that keeps explicit shapes through 0-dim factors."""
    if out_rows == 0 or out_cols == 0 or not a or not b or not a[0] or not b[0]:
        return zero_mat(out_rows, out_cols)
    return mat_mul(a, b)


def key_shift(key: Key, dj0: int, dj: Sequence[int]) -> Key:
    j0, j = key
    return (j0 + dj0, tuple(a + b for a, b in zip(j, dj)))


def unit(k: int, a: int) -> Tuple[int, ...]:
    return tuple(1 if t == a else 0 for t in range(k))


def zero(k: int) -> Tuple[int, ...]:
    return (0,) * k


class HLModule:
    """Graded pieces with blockwise operators l0, l_a, d_a and pairing S."""

    def __init__(self, k: int,
                 pieces: Dict[Key, HodgeStructure],
                 l0: Optional[Dict[Key, Rows]] = None,
                 lu: Optional[Dict[Tuple[int, Key], Rows]] = None,
                 d: Optional[Dict[Tuple[int, Key], Rows]] = None,
                 s_pairing: Optional[Dict[Key, Rows]] = None,
                 sym_sign: int = 1):
        self.k = k
        self.pieces = {key: h for key, h in pieces.items() if h.dim}
        self.l0 = dict(l0 or {})
        self.lu = dict(lu or {})
        self.d = dict(d or {})
        self.s = dict(s_pairing or {})
        self.sym_sign = sym_sign
        self.has_l0 = l0 is not None
        self.has_d = d is not None
        self.has_s = s_pairing is not None
        self._check_shapes()

    # -- bookkeeping -------------------------------------------------------------

    def dim(self, key: Key) -> int:
        h = self.pieces.get(key)
        return h.dim if h else 0

    def total_dim(self) -> int:
        return sum(h.dim for h in self.pieces.values())

    def keys(self):
        return sorted(self.pieces)

    def axes(self) -> List[int]:
        out = [L0_AXIS] if self.has_l0 else []
        return out + list(range(self.k))

    def axis_degree(self, key: Key, axis: int) -> int:
        return key[0] if axis == L0_AXIS else key[1][axis]

    def axis_shift(self, axis: int, amount: int) -> Tuple[int, Tuple[int, ...]]:
        if axis == L0_AXIS:
            return (amount, zero(self.k))
        return (0, tuple(amount if t == axis else 0 for t in range(self.k)))

    def op(self, axis: int, key: Key) -> Rows:
        """The raising operator block out of V^key along the axis."""
        if axis == L0_AXIS:
            m = self.l0.get(key)
        else:
            m = self.lu.get((axis, key))
        if m is None:
            dj0, dj = self.axis_shift(axis, 2)
            return zero_mat(self.dim(key_shift(key, dj0, dj)), self.dim(key))
        return m

    def dop(self, a: int, key: Key) -> Rows:
        m = self.d.get((a, key))
        if m is None:
            return zero_mat(self.dim(key_shift(key, 1, unit(self.k, a))),
                            self.dim(key))
        return m

    def smat(self, key: Key) -> Rows:
        m = self.s.get(key)
        if m is None:
            neg = (-key[0], tuple(-x for x in key[1]))
            return zero_mat(self.dim(key), self.dim(neg))
        return m

    def _check_shapes(self):
        for key, m in self.l0.items():
            assert len(m) == self.dim(key_shift(key, 2, zero(self.k)))
            assert all(len(r) == self.dim(key) for r in m)
        for (a, key), m in self.lu.items():
            assert len(m) == self.dim(
                key_shift(key, 0, tuple(2 * x for x in unit(self.k, a))))
            assert all(len(r) == self.dim(key) for r in m)
        for (a, key), m in self.d.items():
            assert len(m) == self.dim(key_shift(key, 1, unit(self.k, a)))
            assert all(len(r) == self.dim(key) for r in m)
        for key, m in self.s.items():
            neg = (-key[0], tuple(-x for x in key[1]))
            assert len(m) == self.dim(key)
            assert all(len(r) == self.dim(neg) for r in m)

    # -- axiom battery -----------------------------------------------------------

    def power_map(self, axis: int, key: Key, n: int) -> Rows:
        """l_axis^n out of V^key as one block matrix."""
        cur = tuple(tuple(QI(1 if i == j else 0) for j in range(self.dim(key)))
                    for i in range(self.dim(key)))
        ck = key
        for _ in range(n):
            nk = key_shift(ck, *self.axis_shift(axis, 2))
            cur = shaped_mul(self.op(axis, ck), cur, self.dim(nk), self.dim(key))
            ck = nk
        return cur

    def check_commutation(self) -> List[str]:
        """Commutators among l0, l_a and anticommutators among d_a."""
        bad = []
        axes = self.axes()
        for key in self.keys():
            for i, a in enumerate(axes):
                for b in axes[i:]:
                    ka = key_shift(key, *self.axis_shift(a, 2))
                    kb = key_shift(key, *self.axis_shift(b, 2))
                    tk = key_shift(kb, *self.axis_shift(a, 2))
                    ab = shaped_mul(self.op(a, kb), self.op(b, key),
                                    self.dim(tk), self.dim(key))
                    ba = shaped_mul(self.op(b, ka), self.op(a, key),
                                    self.dim(tk), self.dim(key))
                    if ab != ba:
                        bad.append(f"l_{a} l_{b} != l_{b} l_{a} at {key}")
            if not self.has_d:
                continue
            for a in range(self.k):
                for b in range(self.k):
                    ka = key_shift(key, 1, unit(self.k, a))
                    kb = key_shift(key, 1, unit(self.k, b))
                    tk = key_shift(kb, 1, unit(self.k, a))
                    ab = shaped_mul(self.dop(a, kb), self.dop(b, key),
                                    self.dim(tk), self.dim(key))
                    ba = shaped_mul(self.dop(b, ka), self.dop(a, key),
                                    self.dim(tk), self.dim(key))
                    if any(any(x + y for x, y in zip(r1, r2))
                           for r1, r2 in zip(ab, ba)):
                        bad.append(f"d_{a} d_{b} + d_{b} d_{a} != 0 at {key}")
                for ax in axes:
                    kd = key_shift(key, 1, unit(self.k, a))
                    kl = key_shift(key, *self.axis_shift(ax, 2))
                    tk = key_shift(kd, *self.axis_shift(ax, 2))
                    ld = shaped_mul(self.op(ax, kd), self.dop(a, key),
                                    self.dim(tk), self.dim(key))
                    dl = shaped_mul(self.dop(a, kl), self.op(ax, key),
                                    self.dim(tk), self.dim(key))
                    if ld != dl:
                        bad.append(f"d_{a} does not commute with l_{ax} at {key}")
        return bad

    def check_hodge_types(self) -> List[str]:
        """Operators are morphisms of Hodge structures of the stated types."""
        bad = []
        for key, h in self.pieces.items():
            checks = []
            if self.has_l0:
                checks.append((self.op(L0_AXIS, key),
                               key_shift(key, 2, zero(self.k)), 1, "l0"))
            for a in range(self.k):
                checks.append((self.op(a, key),
                               key_shift(key, 0, tuple(2 * x for x in unit(self.k, a))),
                               -1, f"l_{a}"))
            if self.has_d:
                for a in range(self.k):
                    checks.append((self.dop(a, key),
                                   key_shift(key, 1, unit(self.k, a)), 0, f"d_{a}"))
            for mrows, tkey, tshift, label in checks:
                tgt = self.pieces.get(tkey)
                for (p, q), sub in h.components.items():
                    timg = (zero_space(0) if tgt is None
                            else tgt.components.get((p + tshift, q + tshift),
                                                    zero_space(tgt.dim)))
                    for b in sub.basis:
                        img = mat_apply(mrows, b)
                        if vec_is_zero(img):
                            continue
                        if tgt is None or not timg.contains(img):
                            bad.append(f"{label} not of pure type at {key} ({p},{q})")
                            break
        return bad

    def verify_lefschetz(self) -> List[Tuple]:
        """item:20 along every axis: l_axis^n : V^{deg=-n} = V^{deg=n}."""
        failures = []
        for axis in self.axes():
            for key in self.keys():
                deg = self.axis_degree(key, axis)
                if deg >= 0:
                    continue
                n = -deg
                tkey = key_shift(key, *self.axis_shift(axis, 2 * n))
                pw = self.power_map(axis, key, n)
                ok = (self.dim(key) == self.dim(tkey)
                      and len(rref_rank(pw)) == self.dim(key))
                if not ok:
                    failures.append((axis, key))
        return failures

    def primitive_subspace(self, key: Key) -> Subspace:
        """V cap the kernels of one-higher powers along every axis; key must
        be the lowest corner (all axis degrees <= 0)."""
        dim = self.dim(key)
        out = full_space(dim)
        for axis in self.axes():
            deg = self.axis_degree(key, axis)
            assert deg <= 0
            pw = self.power_map(axis, key, -deg + 1)
            out = out.intersect(Subspace(dim, nullspace(pw, dim)))
        return out

    def primitive_decomposition(self) -> Dict[Key, Subspace]:
        """All corner primitives, with the multiplicity bookkeeping asserted."""
        if self.verify_lefschetz():
            raise NotLefschetz("module fails hard Lefschetz")
        prims: Dict[Key, Subspace] = {}
        for key in self.keys():
            if all(self.axis_degree(key, ax) <= 0 for ax in self.axes()):
                sub = self.primitive_subspace(key)
                if sub.dim:
                    prims[key] = sub
        total = 0
        for key, sub in prims.items():
            mult = 1
            for ax in self.axes():
                mult *= (-self.axis_degree(key, ax)) + 1
            total += sub.dim * mult
        if total != self.total_dim():
            raise AxiomFailure("primitive multiplicity bookkeeping failed")
        return prims

    # -- pairing axioms -----------------------------------------------------------

    def check_pairing(self) -> List[str]:
        bad = []
        if not self.has_s:
            return bad
        for key in self.keys():
            neg = (-key[0], tuple(-x for x in key[1]))
            m = self.smat(key)
            mt = self.smat(neg)
            want = tuple(tuple(self.sym_sign * x for x in row)
                         for row in mat_transpose(m))
            if mt != want:
                bad.append(f"S symmetry fails at {key}")
            # Hodge type: S pairs (p,q) with (c-p, c-q)
            h, hneg = self.pieces.get(key), self.pieces.get(neg)
            if h and hneg:
                c2 = h.weight + hneg.weight
                if c2 % 2:
                    bad.append(f"S pairs odd total weight at {key}")
                    continue
                c = c2 // 2
                for (p, q), sub in h.components.items():
                    for (p2, q2), sub2 in hneg.components.items():
                        if p + p2 == c and q + q2 == c:
                            continue
                        for x in sub.basis:
                            xm = mat_apply(mat_transpose(m), x)
                            if any(sum((a * b for a, b in zip(xm, y) if a and b),
                                       QI(0)) for y in sub2.basis):
                                bad.append(f"S not of pure Hodge type at {key}")
                                break
            # infinitesimal invariance and d-selfadjointness
            for axis in self.axes():
                dj0, dj = self.axis_shift(axis, 2)
                kplus = key_shift(key, dj0, dj)
                nkm = (-kplus[0], tuple(-x for x in kplus[1]))
                lx = self.op(axis, key)
                ly = self.op(axis, nkm)
                m_up = self.smat(kplus)
                # S(l x, y) + S(x, l y) = 0 : x in V^key, y in V^{-(key+2e)}
                lhs = shaped_mul(mat_transpose(lx), m_up,
                                 self.dim(key), self.dim(nkm))
                rhs = shaped_mul(self.smat(key), ly,
                                 self.dim(key), self.dim(nkm))
                if any(any(a + b for a, b in zip(r1, r2))
                       for r1, r2 in zip(lhs, rhs)):
                    bad.append(f"S not infinitesimally invariant for axis {axis} at {key}")
            if self.has_d:
                for a in range(self.k):
                    kplus = key_shift(key, 1, unit(self.k, a))
                    nkm = (-kplus[0], tuple(-x for x in kplus[1]))
                    dx = self.dop(a, key)
                    dy = self.dop(a, nkm)
                    lhs = shaped_mul(mat_transpose(dx), self.smat(kplus),
                                     self.dim(key), self.dim(nkm))
                    rhs = shaped_mul(self.smat(key), dy,
                                     self.dim(key), self.dim(nkm))
                    if lhs != rhs:
                        bad.append(f"S not d_{a}-selfadjoint at {key}")
        return bad

    def verify_polarization(self) -> Dict:
        """Support/symmetry/invariance conditions plus exact positivity of
        S(id x C l0^{j0} prod l_a^{j_a}) on every corner primitive."""
        report = {"pairing": self.check_pairing(), "positivity": []}
        if self.verify_lefschetz():
            raise NotLefschetz("module fails hard Lefschetz")
        prims = self.primitive_decomposition()
        for key, sub in prims.items():
            tkey = key
            mono = identity_rows(self.dim(key))
            for axis in self.axes():
                deg = -self.axis_degree(key, axis)
                pw = self.power_map(axis, tkey, deg)
                nkey = key_shift(tkey, *self.axis_shift(axis, 2 * deg))
                mono = shaped_mul(pw, mono, self.dim(nkey), self.dim(key))
                tkey = nkey
            target = self.pieces[tkey]
            cw = target.weil_matrix()
            op = shaped_mul(cw, mono, self.dim(tkey), self.dim(key))
            reals = real_points_basis(sub)
            # Gram of (x, y) -> S(x, C . mono . y) on the real primitive part
            gram = []
            for x in reals:
                xm = mat_apply(mat_transpose(self.smat(key)), x)
                row = []
                for y in reals:
                    oy = mat_apply(op, y)
                    row.append(sum((a * b for a, b in zip(oy, xm) if a and b), QI(0)))
                gram.append(tuple(row))
            verdict = hermitian_definiteness(tuple(gram))
            report["positivity"].append((key, verdict))
        report["positive_definite"] = all(
            v == Definiteness.POSITIVE_DEFINITE for _, v in report["positivity"])
        report["ok"] = (not report["pairing"]) and report["positive_definite"]
        return report

    def verify_all(self, expect_d: bool = True) -> List[str]:
        """The full axiom battery; returns the list of violations."""
        bad = []
        bad += self.check_commutation()
        bad += self.check_hodge_types()
        bad += [f"lefschetz {f}" for f in self.verify_lefschetz()]
        if self.has_s:
            pol = self.verify_polarization()
            bad += pol["pairing"]
            if not pol["positive_definite"]:
                bad += [f"positivity fails at {k}: {v.value}"
                        for k, v in pol["positivity"]
                        if v != Definiteness.POSITIVE_DEFINITE]
        return bad

    # -- sl2 structure -----------------------------------------------------------

    def lowering_operator(self, axis: int) -> Dict[Key, Rows]:
        """The unique Lambda with [l_axis, Lambda] = (axis grading), built on the
        axis-wise primitive string decomposition."""
        if self.verify_lefschetz():
            raise NotLefschetz("module fails hard Lefschetz")
        prim: Dict[Key, Subspace] = {}
        for key in self.keys():
            deg = self.axis_degree(key, axis)
            if deg > 0:
                continue
            pw = self.power_map(axis, key, -deg + 1)
            prim[key] = Subspace(self.dim(key), nullspace(pw, self.dim(key)))
        degs = [self.axis_degree(key, axis) for key in self.keys()]
        span = (max(degs) - min(degs)) // 2 + 1 if degs else 0
        out: Dict[Key, Rows] = {}
        for key in self.keys():
            deg = self.axis_degree(key, axis)
            dim = self.dim(key)
            if dim == 0:
                continue
            down_dim = self.dim(key_shift(key, *self.axis_shift(axis, -2)))
            cols, fcols = [], []
            for t in range(span + 1):
                base = key_shift(key, *self.axis_shift(axis, -2 * t))
                bdeg = deg - 2 * t
                m = -bdeg  # primitive string from axis degree -m up to +m
                if bdeg > 0 or base not in prim or not prim[base].dim:
                    continue
                lift = self.power_map(axis, base, t)
                for pvec in prim[base].basis:
                    cols.append(mat_apply(lift, pvec))
                    if t == 0:
                        fcols.append(tuple(QI(0) for _ in range(down_dim)))
                    else:
                        down = mat_apply(self.power_map(axis, base, t - 1), pvec)
                        coeff = QI(t * (m - t + 1))
                        fcols.append(tuple(coeff * x for x in down))
            if len(cols) != dim:
                raise NotLefschetz(f"string decomposition misses V^{key}")
            cmat = mat_transpose(tuple(cols))
            fmat = (mat_transpose(tuple(fcols)) if down_dim
                    else zero_mat(0, dim))
            out[key] = shaped_mul(fmat, mat_inverse(cmat), down_dim, dim)
        # [e, f] = h, exactly
        for key in self.keys():
            if self.dim(key) == 0:
                continue
            deg = self.axis_degree(key, axis)
            kdown = key_shift(key, *self.axis_shift(axis, -2))
            ef = shaped_mul(self.op(axis, kdown),
                            out.get(key, zero_mat(self.dim(kdown), self.dim(key))),
                            self.dim(key), self.dim(key))
            kup = key_shift(key, *self.axis_shift(axis, 2))
            fe = shaped_mul(out.get(kup, zero_mat(self.dim(key), self.dim(kup))),
                            self.op(axis, key), self.dim(key), self.dim(key))
            comm = tuple(tuple(a - b for a, b in zip(r1, r2))
                         for r1, r2 in zip(ef, fe))
            want = tuple(tuple(QI(deg if i == j else 0)
                               for j in range(self.dim(key)))
                         for i in range(self.dim(key)))
            if comm != want:
                raise AxiomFailure(f"[e, f] != h at {key} along axis {axis}")
        return out

    def weil_element_action(self, axis: int) -> Dict[Tuple[Key, Key], Rows]:
        """w = exp(l) exp(-Lambda) exp(l) as a block operator; swaps the axis
        grading and squares to (-1)^deg on each piece."""
        low = self.lowering_operator(axis)
        e_blocks = {key: (key_shift(key, *self.axis_shift(axis, 2)),
                          self.op(axis, key)) for key in self.keys()}
        f_blocks = {key: (key_shift(key, *self.axis_shift(axis, -2)),
                          tuple(tuple(-x for x in row) for row in low[key]))
                    for key in self.keys() if key in low}
        exp_e = _exp_block(self, e_blocks)
        exp_f = _exp_block(self, f_blocks)
        w = _compose_block(self, exp_e, _compose_block(self, exp_f, exp_e))
        for (src, tgt), m in w.items():
            if any(any(row) for row in m):
                deg = self.axis_degree(src, axis)
                want = key_shift(src, *self.axis_shift(axis, -2 * deg))
                if tgt != want:
                    raise AxiomFailure("weil element does not reflect the grading")
        w2 = _compose_block(self, w, w)
        for (src, tgt), m in w2.items():
            if src != tgt:
                if any(any(row) for row in m):
                    raise AxiomFailure("weil element square not graded")
                continue
            deg = self.axis_degree(src, axis)
            sign = QI(-1 if deg % 2 else 1)
            want = tuple(tuple(sign * QI(1 if i == j else 0)
                               for j in range(self.dim(src)))
                         for i in range(self.dim(src)))
            if m != want:
                raise AxiomFailure(f"w^2 != (-1)^deg at {src}")
        return w


def identity_rows(n: int) -> Rows:
    return tuple(tuple(QI(1 if i == j else 0) for j in range(n))
                 for i in range(n))


def _compose_block(mod: HLModule, left: Dict, right: Dict) -> Dict:
    out: Dict[Tuple[Key, Key], Rows] = {}
    for (src, mid), m1 in right.items():
        for (mid2, tgt), m2 in left.items():
            if mid2 != mid:
                continue
            prod = shaped_mul(m2, m1, mod.dim(tgt), mod.dim(src))
            keyp = (src, tgt)
            if keyp in out:
                out[keyp] = tuple(tuple(a + b for a, b in zip(r1, r2))
                                  for r1, r2 in zip(out[keyp], prod))
            else:
                out[keyp] = prod
    return {kp: m for kp, m in out.items() if any(any(row) for row in m)}


def _exp_block(mod: HLModule, blocks: Dict[Key, Tuple[Key, Rows]]) -> Dict:
    """exp of a graded nilpotent block operator (finite sum, exact)."""
    out: Dict[Tuple[Key, Key], Rows] = {
        (key, key): identity_rows(mod.dim(key)) for key in mod.keys()}
    term: Dict[Tuple[Key, Key], Rows] = {
        (key, tgt): m for key, (tgt, m) in blocks.items()
        if any(any(row) for row in m)}
    t = 1
    while term:
        fac = QI(Fraction(1, _factorial(t)))
        for (src, tgt), m in term.items():
            scaled = tuple(tuple(fac * x for x in row) for row in m)
            kp = (src, tgt)
            if kp in out:
                out[kp] = tuple(tuple(a + b for a, b in zip(r1, r2))
                                for r1, r2 in zip(out[kp], scaled))
            else:
                out[kp] = scaled
        nxt: Dict[Tuple[Key, Key], Rows] = {}
        for (src, mid), m1 in term.items():
            if mid not in blocks:
                continue
            tgt, m2 = blocks[mid]
            prod = shaped_mul(m2, m1, mod.dim(tgt), mod.dim(src))
            if not any(any(row) for row in prod):
                continue
            kp = (src, tgt)
            if kp in nxt:
                nxt[kp] = tuple(tuple(a + b for a, b in zip(r1, r2))
                                for r1, r2 in zip(nxt[kp], prod))
            else:
                nxt[kp] = prod
        term = nxt
        t += 1
        if t > 4 * mod.total_dim() + 8:
            raise AxiomFailure("block operator is not nilpotent")
    return out


def _factorial(n: int) -> int:
    out = 1
    for t in range(2, n + 1):
        out *= t
    return out


def rref_rank(rows: Rows):
    from .linalg import rref
    return rref(rows)[0]


# ---------------------------------------------------------------------------
# cohomology descent (Proposition on H(V, d_B))
# ---------------------------------------------------------------------------

DKey = Tuple[int, int, Tuple[int, ...]]  # (j0, j1 = |j_B|, j_rest)


def cohomology_descent(mod: HLModule, b_axes: Sequence[int],
                       coeffs: Sequence[Fraction]) -> HLModule:
    """H(V, d_B) with the B-axes collapsed by total degree, carrying l0,
    l_B(c) on the new axis, the remaining l_a and d_a, and the descended
    pairing.  Every axiom is re-verified on the output."""
    b_axes = sorted(set(b_axes))
    coeffs = [Fraction(c) for c in coeffs]
    assert len(coeffs) == len(b_axes)
    assert all(c > 0 for c in coeffs), "descent needs strictly positive weights"
    if not mod.has_d:
        raise NotCompatible("module carries no differentials")
    rest_axes = [a for a in range(mod.k) if a not in b_axes]
    kq = mod.k

    def new_key(key: Key) -> DKey:
        j0, j = key
        return (j0, sum(j[a] for a in b_axes), tuple(j[a] for a in rest_axes))

    cells: Dict[DKey, List[Key]] = {}
    for key in mod.keys():
        cells.setdefault(new_key(key), []).append(key)
    for cell in cells.values():
        cell.sort()
    offs: Dict[DKey, Dict[Key, int]] = {}
    cell_dim: Dict[DKey, int] = {}
    for nk, keys in cells.items():
        off, table = 0, {}
        for key in keys:
            table[key] = off
            off += mod.dim(key)
        offs[nk] = table
        cell_dim[nk] = off

    def assemble(nk_src: DKey, nk_tgt: DKey, blocks) -> Rows:
        """blocks: (src old key) -> (tgt old key, matrix); missing = zero."""
        rows = [[QI(0)] * cell_dim.get(nk_src, 0)
                for _ in range(cell_dim.get(nk_tgt, 0))]
        for skey, items in blocks.items():
            so = offs[nk_src][skey]
            for tkey, m in items:
                if nk_tgt not in offs or tkey not in offs[nk_tgt]:
                    continue
                to = offs[nk_tgt][tkey]
                for i, row in enumerate(m):
                    for j, x in enumerate(row):
                        if x:
                            rows[to + i][so + j] = rows[to + i][so + j] + x
        return mat(rows)

    def db_map(nk: DKey) -> Rows:
        tgt = (nk[0] + 1, nk[1] + 1, nk[2])
        blocks = {}
        for key in cells.get(nk, []):
            items = []
            for a in b_axes:
                items.append((key_shift(key, 1, unit(kq, a)), mod.dop(a, key)))
            blocks[key] = items
        return assemble(nk, tgt, blocks)

    # cohomology per cell
    sq: Dict[DKey, Subquotient] = {}
    hodge_cells: Dict[DKey, HodgeStructure] = {}
    for nk, keys in cells.items():
        dm = db_map(nk)
        ker = Subspace(cell_dim[nk], nullspace(dm, cell_dim[nk]))
        prev = (nk[0] - 1, nk[1] - 1, nk[2])
        if prev in cells:
            dprev = db_map(prev)
            im = Subspace(cell_dim[nk],
                          mat_transpose(dprev) if dprev else ())
        else:
            im = zero_space(cell_dim[nk])
        sq[nk] = Subquotient(cell_dim[nk], ker, im)
        # cell Hodge structure: direct sum of the old pieces
        hs = None
        for key in keys:
            h = mod.pieces[key]
            hs = h if hs is None else hs.direct_sum(h)
        hodge_cells[nk] = hs

    new_pieces: Dict[Key, HodgeStructure] = {}
    piece_key: Dict[DKey, Key] = {}
    for nk, q in sq.items():
        if q.dim == 0:
            continue
        j0, j1, jr = nk
        piece_key[nk] = (j0, (j1,) + jr)
        comps = {}
        for pq, sub in hodge_cells[nk].components.items():
            ind = q.induced_subspace(sub)
            if ind.dim:
                comps[pq] = ind
        new_pieces[piece_key[nk]] = HodgeStructure(q.dim, hodge_cells[nk].weight,
                                                   comps)

    def descend(nk_src: DKey, nk_tgt: DKey, blocks) -> Optional[Rows]:
        if nk_src not in sq or sq[nk_src].dim == 0:
            return None
        big = assemble(nk_src, nk_tgt, blocks)
        src_sq = sq[nk_src]
        tgt_sq = sq.get(nk_tgt)
        if tgt_sq is None:
            tgt_sq = Subquotient(cell_dim.get(nk_tgt, 0),
                                 zero_space(cell_dim.get(nk_tgt, 0)),
                                 zero_space(cell_dim.get(nk_tgt, 0)))
        f = LinearMap(Space(cell_dim[nk_src]), Space(cell_dim.get(nk_tgt, 0)), big)
        try:
            return subquotient_map_sq(f, src_sq, tgt_sq).matrix
        except NotCompatible as exc:
            raise DescentAxiomFailure(f"operator does not descend: {exc}")

    new_l0: Dict[Key, Rows] = {}
    new_lu: Dict[Tuple[int, Key], Rows] = {}
    new_d: Dict[Tuple[int, Key], Rows] = {}
    new_s: Dict[Key, Rows] = {}
    kq_new = 1 + len(rest_axes)
    for nk in cells:
        if nk not in piece_key:
            continue
        pk = piece_key[nk]
        # l0
        if mod.has_l0:
            blocks = {key: [(key_shift(key, 2, zero(kq)), mod.op(L0_AXIS, key))]
                      for key in cells[nk]}
            m = descend(nk, (nk[0] + 2, nk[1], nk[2]), blocks)
            if m is not None:
                new_l0[pk] = m
        # collapsed axis: l_B(c)
        blocks = {}
        for key in cells[nk]:
            items = []
            for c, a in zip(coeffs, b_axes):
                block = mod.op(a, key)
                items.append((key_shift(key, 0, tuple(2 * x for x in unit(kq, a))),
                              tuple(tuple(QI(c) * x for x in row) for row in block)))
            blocks[key] = items
        m = descend(nk, (nk[0], nk[1] + 2, nk[2]), blocks)
        if m is not None:
            new_lu[(0, pk)] = m
        # remaining raising operators and differentials
        for pos, a in enumerate(rest_axes):
            blocks = {key: [(key_shift(key, 0, tuple(2 * x for x in unit(kq, a))),
                             mod.op(a, key))] for key in cells[nk]}
            jr = list(nk[2])
            jr[pos] += 2
            m = descend(nk, (nk[0], nk[1], tuple(jr)), blocks)
            if m is not None:
                new_lu[(1 + pos, pk)] = m
            blocks = {key: [(key_shift(key, 1, unit(kq, a)), mod.dop(a, key))]
                      for key in cells[nk]}
            jr = list(nk[2])
            jr[pos] += 1
            m = descend(nk, (nk[0] + 1, nk[1], tuple(jr)), blocks)
            if m is not None:
                new_d[(1 + pos, pk)] = m
    # descended pairing: S(x, y) on kernel representatives
    if mod.has_s:
        for nk in cells:
            if nk not in piece_key:
                continue
            nneg = (-nk[0], -nk[1], tuple(-x for x in nk[2]))
            if nneg not in piece_key:
                new_s[piece_key[nk]] = zero_mat(sq[nk].dim, 0)
                continue
            rows = []
            for rx in sq[nk].reps:
                row = []
                for ry in sq[nneg].reps:
                    val = QI(0)
                    for kx in cells[nk]:
                        negk = (-kx[0], tuple(-t for t in kx[1]))
                        if negk not in offs[nneg]:
                            continue
                        ox, oy = offs[nk][kx], offs[nneg][negk]
                        m = mod.smat(kx)
                        for i in range(mod.dim(kx)):
                            xi = rx[ox + i]
                            if not xi:
                                continue
                            for j in range(mod.dim(negk)):
                                yj = ry[oy + j]
                                if yj and m[i][j]:
                                    val = val + xi * m[i][j] * yj
                    row.append(val)
                rows.append(tuple(row))
            new_s[piece_key[nk]] = tuple(rows)

    out = HLModule(kq_new, new_pieces,
                   l0=new_l0 if mod.has_l0 else None,
                   lu=new_lu,
                   d=new_d if rest_axes else {},
                   s_pairing=new_s if mod.has_s else None,
                   sym_sign=mod.sym_sign)
    bad = out.verify_all()
    if bad:
        raise DescentAxiomFailure("; ".join(bad[:5]))
    return out


def subquotient_map_sq(f: LinearMap, src: Subquotient,
                       tgt: Subquotient) -> LinearMap:
    from .linalg import subquotient_map
    return subquotient_map(f, src, tgt)
