"""The end-to-end verification pipeline on an assembled page module.

For each requested index set I the pipeline treats (V, d1) as a one-axis
complex graded by j0 and filtered by L(I), then checks, with exact
arithmetic:

  (a) E2-degeneracy of the associated spectral sequence;
  (b) hard Lefschetz of l_I(c_I) on the graded pieces of the induced L(I)
      filtration of H(V, d1), for every positive-rational sample, together
      with the statement that the weight filtration of the induced nilpotent
      operator equals the induced L(I) (sample independence included);
  (c) the two-step cohomology descent (first the complement, then I), every
      module axiom re-verified on both descents;
  (d) hard Lefschetz of the central operator on H(V, d1).

Limit Betti numbers are read off H(V, d1) by j0 + dim X.
"""

from __future__ import annotations

import json
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .degeneration import PageModule
from .errors import DescentAxiomFailure, NotCompatible, TheoremCheckFailure
from .filtration import Filtration
from .gaussq import QI
from .hl import cohomology_descent
from .linalg import LinearMap, Space, Subquotient, subquotient_map
from .monodromy import NilpotentEndo, weight_filtration, relative_weight_filtration
from .spectral import check_degeneracy, compute_pages, induced_on_cohomology


@dataclass
class CheckResult:
    check: str
    subject: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{mark}] {self.check} :: {self.subject}{extra}"


@dataclass
class TheoremReport:
    instance: str
    betti: Dict[int, int]
    checks: List[CheckResult] = field(default_factory=list)
    exploratory: List[CheckResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: str, subject: str, passed: bool, detail: str = ""):
        self.checks.append(CheckResult(check, subject, passed, detail))

    def to_json(self) -> dict:
        return {
            "instance": self.instance,
            "limit_betti": {str(k): v for k, v in sorted(self.betti.items())},
            "all_passed": self.all_passed,
            "checks": [{"check": c.check, "subject": c.subject,
                        "passed": c.passed, "detail": c.detail}
                       for c in self.checks],
            "exploratory": [{"check": c.check, "subject": c.subject,
                             "passed": c.passed, "detail": c.detail}
                            for c in self.exploratory],
        }

    def text(self) -> str:
        lines = [f"instance: {self.instance}",
                 "limit betti: " + " ".join(
                     f"b{k}={v}" for k, v in sorted(self.betti.items()))]
        lines += [c.line() for c in self.checks]
        if self.exploratory:
            lines.append("exploratory (not part of acceptance):")
            lines += ["  " + c.line() for c in self.exploratory]
        lines.append("RESULT: " + ("all checks passed" if self.all_passed
                                   else "FAILURES PRESENT"))
        return "\n".join(lines)


def positive_samples(count: int, width: int, seed: int) -> List[Tuple[Fraction, ...]]:
    """Deterministic positive rational sample tuples."""
    rng = random.Random(seed)
    out = []
    for t in range(count):
        if t == 0:
            out.append(tuple(Fraction(1) for _ in range(width)))
        else:
            out.append(tuple(Fraction(rng.randint(1, 7), rng.randint(1, 5))
                             for _ in range(width)))
    return out


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("LIMHODGE_THREADS", "1")))
    except ValueError:
        return 1


def run_pipeline(page: PageModule, index_sets: Sequence[Sequence[int]],
                 n_samples: int = 3, seed: int = 0,
                 explore_relative: bool = False) -> TheoremReport:
    hl = page.hl
    k = page.k
    index_sets = [tuple(sorted(i)) for i in index_sets]
    all_names = {iset: PageModule.l_name(iset) for iset in index_sets}
    full = tuple(range(k))
    register = sorted(set(index_sets) | {full})
    kom = page.complex_by_j0(register)

    betti = {}
    cohs: Dict[int, Subquotient] = {}
    for j0 in sorted(kom.spaces):
        coh = kom.cohomology(j0)
        cohs[j0] = coh
        if coh.dim:
            betti[j0 + page.dim_x] = coh.dim
    lo = min(kom.spaces, default=0)
    hi = max(kom.spaces, default=0)
    for n in range(min(betti, default=0), max(betti, default=0) + 1):
        betti.setdefault(n, 0)

    report = TheoremReport(page.instance.name, betti)
    full_pages = compute_pages(kom, PageModule.l_name(full))

    def run_one(iset):
        out = []
        name = PageModule.l_name(iset)
        # (a) E2 degeneracy
        pages = full_pages if iset == full else compute_pages(kom, name)
        degen, witness = check_degeneracy(pages, 2)
        out.append(CheckResult("e2-degeneracy", f"filtration {name}",
                               degen, "" if degen else f"first nonzero d at {witness}"))
        ok_einf = pages.check_einf_vs_cohomology()
        out.append(CheckResult("einf-matches-cohomology", f"filtration {name}",
                               ok_einf))
        # two routes to L(I) on the first page: recurrent filtration of the
        # page machinery vs counts read off the (j0, j)-grading
        rec_ok = _recurrent_vs_grading(page, full_pages, iset, name)
        out.append(CheckResult("recurrent-filtration-consistency",
                               f"filtration {name}", rec_ok))
        samples = positive_samples(n_samples, max(len(iset), 1), seed + 17 * len(iset))
        for s_idx, sample in enumerate(samples):
            coeffs = {a: c for a, c in zip(iset, sample)}
            ops = page.operator_by_j0(coeffs) if iset else {
                j0: LinearMap.zero(kom.space(j0), kom.space(j0))
                for j0 in kom.spaces}
            label = f"I={[i + 1 for i in iset]}, sample {s_idx}"
            ok_all, detail = _check_weight_vs_grading(kom, cohs, ops, name)
            out.append(CheckResult("weight-filtration-equals-induced-filtration",
                                   label, ok_all, detail))
            ok_hl, detail = _check_graded_lefschetz(kom, cohs, ops, name)
            out.append(CheckResult("graded-hard-lefschetz", label, ok_hl, detail))
        return out

    workers = max_workers()
    if workers > 1 and len(index_sets) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for res_list in pool.map(run_one, index_sets):
                report.checks.extend(res_list)
    else:
        for iset in index_sets:
            report.checks.extend(run_one(iset))

    # (c) two-step descents per index set and sample
    for iset in index_sets:
        comp = tuple(a for a in range(k) if a not in iset)
        samples = positive_samples(n_samples, k, seed + 101)
        for s_idx, sample in enumerate(samples):
            label = f"I={[i + 1 for i in iset]}, sample {s_idx}"
            try:
                first = cohomology_descent(hl, list(comp),
                                           [sample[a] for a in comp])
                remaining = [1 + pos for pos in range(len(iset))]
                second = cohomology_descent(first, remaining,
                                            [sample[a] for a in iset])
                report.add("double-descent-verified", label, True)
            except (DescentAxiomFailure, NotCompatible) as exc:
                report.add("double-descent-verified", label, False, str(exc))

    # (d) central hard Lefschetz on H(V, d1)
    sample = positive_samples(1, k, seed)[0]
    try:
        collapsed = cohomology_descent(hl, list(range(k)), list(sample))
        ok, detail = _central_lefschetz(collapsed)
        report.add("central-hard-lefschetz", "H(V, d1)", ok, detail)
    except (DescentAxiomFailure, NotCompatible) as exc:
        report.add("central-hard-lefschetz", "H(V, d1)", False, str(exc))

    if explore_relative:
        _explore_relative(page, kom, cohs, index_sets, seed, report)
    return report


def _recurrent_vs_grading(page: PageModule, pages, iset, iname: str) -> bool:
    """On E_1 of (V, d1; L-full), the recurrent L(I) filtration must match the
    step dimensions read off the (j0, j)-grading of the page module."""
    rec = pages.recurrent_filtration(iname, 1)
    for (p, q), cell in pages.page(1).cells.items():
        j0 = p + q
        grading = [key for key in page.hl.keys()
                   if key[0] == j0 and sum(key[1]) == p]
        want_dim = sum(page.hl.dim(key) for key in grading)
        if cell.dim != want_dim:
            return False
        fil = rec.get((p, q))
        if fil is None:
            continue
        fi = fil.as_increasing()
        lo, hi = fi.window()
        for l in range(lo - 1, hi + 2):
            want = sum(page.hl.dim(key) for key in grading
                       if -sum(key[1][i] for i in iset) <= l)
            if fi.value(l).dim != want:
                return False
    return True


def _flatten_h_op(kom, cohs, ops, j0) -> LinearMap:
    coh = cohs[j0]
    return subquotient_map(ops[j0], coh, coh)


def _check_weight_vs_grading(kom, cohs, ops, name):
    """W(N) of the descended operator equals the induced filtration, per j0."""
    for j0, coh in cohs.items():
        if coh.dim == 0:
            continue
        nh = _flatten_h_op(kom, cohs, ops, j0)
        wfil = weight_filtration(NilpotentEndo.of(nh))
        lfil = induced_on_cohomology(kom, name, j0, coh).as_increasing()
        if not wfil.same_function(lfil):
            return False, f"mismatch at degree {j0}"
    return True, ""


def _check_graded_lefschetz(kom, cohs, ops, name):
    """l_I(c)^l : gr_l H -> gr_{-l} H is an isomorphism for l > 0."""
    for j0, coh in cohs.items():
        if coh.dim == 0:
            continue
        nh = _flatten_h_op(kom, cohs, ops, j0)
        lfil = induced_on_cohomology(kom, name, j0, coh).as_increasing()
        lo, hi = lfil.window()
        for l in range(1, max(abs(lo), abs(hi)) + 1):
            top = Subquotient(coh.dim, lfil.value(l), lfil.value(l - 1))
            bot = Subquotient(coh.dim, lfil.value(-l), lfil.value(-l - 1))
            if top.dim == 0 and bot.dim == 0:
                continue
            try:
                ind = subquotient_map(nh.power(l), top, bot)
                ok = top.dim == bot.dim and ind.rank() == top.dim
            except NotCompatible:
                ok = False
            if not ok:
                return False, f"degree {j0}, power {l}"
    return True, ""


def _central_lefschetz(collapsed):
    """l0^i from total j0 = -i to j0 = i on the collapsed module."""
    from .hl import L0_AXIS, key_shift
    hl = collapsed
    by_j0: Dict[int, list] = {}
    for key in hl.keys():
        by_j0.setdefault(key[0], []).append(key)
    for i in range(1, max(abs(j) for j in by_j0) + 1 if by_j0 else 1):
        src = by_j0.get(-i, [])
        tgt = by_j0.get(i, [])
        sdim = sum(hl.dim(kk) for kk in src)
        tdim = sum(hl.dim(kk) for kk in tgt)
        if sdim != tdim:
            return False, f"dims differ at +-{i}"
        rank = 0
        for key in src:
            pw = hl.power_map(L0_AXIS, key, i)
            from .linalg import rref
            rank += len(rref(pw)[0])
        if rank != sdim:
            return False, f"power {i} drops rank"
    return True, ""


def _explore_relative(page, kom, cohs, index_sets, seed, report):
    """Whether L(I) is the relative filtration of N_I over L(J) for J inside I.

    The underlying question is open; reported as exploratory only."""
    for iset in index_sets:
        for jset in index_sets:
            if not (set(jset) < set(iset)):
                continue
            sample = positive_samples(1, len(iset), seed)[0]
            coeffs = {a: c for a, c in zip(iset, sample)}
            ops = page.operator_by_j0(coeffs)
            jname = PageModule.l_name(jset)
            iname = PageModule.l_name(iset)
            for j0, coh in cohs.items():
                if coh.dim == 0:
                    continue
                nh = subquotient_map(ops[j0], coh, coh)
                wfil = induced_on_cohomology(kom, jname, j0, coh).as_increasing()
                res = relative_weight_filtration(NilpotentEndo.of(nh), wfil)
                if not res.exists:
                    verdict, detail = False, f"degree {j0}: does not exist"
                else:
                    lfil = induced_on_cohomology(kom, iname, j0, coh).as_increasing()
                    verdict = res.filtration.same_function(lfil)
                    detail = f"degree {j0}"
                report.exploratory.append(CheckResult(
                    "relative-filtration-vs-grading",
                    f"I={[i + 1 for i in iset]}, J={[j + 1 for j in jset]}",
                    verdict, detail))
