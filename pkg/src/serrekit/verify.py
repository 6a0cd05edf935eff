"""Exact post-hoc verification of the construction contract.

Every check re-evaluates a polynomial identity from scratch and reports a
pass flag plus, on failure, the offending difference in canonical form.
Checks never raise on mathematical failure — a failed identity becomes a
report entry so the caller can decide; only malformed inputs raise.

The full suite (`run_all`) covers: the per-chart frame/section relations,
the dependency-locus minor ideals, the raw gluing identities (row-functional
transforms, the selector shape of R, defect annihilation), determinants
against the line-bundle cocycle on raw and corrected sets, the triple-defect
column shape, closedness of the obstruction cochain, exactness of the solved
correction, and the corrected cocycle identity with two-sided inverses.
"""

from dataclasses import dataclass, field
from itertools import combinations, permutations

from .algebra import LocElem, MatrixL, transport
from .cech import differential, is_cocycle
from .ideals import ideal_equal, is_unit_ideal


@dataclass
class ReportEntry:
    check: str
    scope: str
    passed: bool
    witness: str = ""


@dataclass
class Report:
    entries: list = field(default_factory=list)

    @property
    def ok(self):
        return all(e.passed for e in self.entries)

    def failures(self):
        return [e for e in self.entries if not e.passed]

    def to_doc(self):
        out = []
        for e in self.entries:
            doc = {"check": e.check, "scope": e.scope, "passed": e.passed}
            if e.witness:
                doc["witness"] = e.witness
            out.append(doc)
        return out


def _entry(check, scope, ok, diff=None):
    return ReportEntry(check, scope, bool(ok),
                       "" if ok or diff is None else repr(diff))


def _mrow(ctx, r, f, g):
    """The row functional (0, ..., 0, g, -f) annihilating the M-columns."""
    zero = LocElem.zero(ctx)
    return MatrixL(ctx, [[zero] * (r - 2) + [g, -f]])


def verify_cocycle(Z):
    """Identity on the diagonal, two-sided inverses, and the ordered-triple
    compatibility Z_ik = Z_ij Z_jk.  Meant for a corrected set."""
    entries = []
    cover = Z.cover
    r = Z.rank
    for i in cover.charts:
        ctx = cover.chart_ctx(i)
        diff = Z.get(i, i) - MatrixL.identity(ctx, r)
        ok = diff == MatrixL.zeros(ctx, r, r)
        entries.append(_entry("transition_identity", f"chart {i}", ok, diff))
    for i, j in permutations(cover.charts, 2):
        ctx = cover.ctx((i, j))
        diff = Z.get(i, j) @ Z.get(j, i) - MatrixL.identity(ctx, r)
        ok = diff == MatrixL.zeros(ctx, r, r)
        entries.append(
            _entry("transition_inverse", f"overlap ({i}, {j})", ok, diff))
    for i, j, k in permutations(cover.charts, 3):
        ctx = cover.ctx((i, j, k))
        diff = (Z.get(i, k).transport_to(ctx)
                - Z.get(i, j).transport_to(ctx)
                @ Z.get(j, k).transport_to(ctx))
        ok = diff == MatrixL.zeros(ctx, r, r)
        entries.append(
            _entry("transition_cocycle", f"triple ({i}, {j}, {k})", ok, diff))
    return entries


def verify_det(Z, lb):
    """det Z_ij = h_ij exactly on every ordered overlap."""
    entries = []
    cover = Z.cover
    for i, j in permutations(cover.charts, 2):
        ctx = cover.ctx((i, j))
        diff = Z.get(i, j).det() - lb.h(i, j, ctx)
        entries.append(
            _entry(f"determinant_{Z.status}", f"overlap ({i}, {j})",
                   diff.is_zero(), diff))
    return entries


def verify_dependency_locus(frames, sub):
    """The maximal-minor ideal of M_i equals (f_i, g_i) on subscheme charts
    and is the unit ideal elsewhere."""
    entries = []
    for i in sorted(frames):
        fr = frames[i]
        r = fr.M.shape[0]
        minors = [fr.M.delete_row(row).det() for row in range(r)]
        if sub.meets_Y[i]:
            ok = ideal_equal(minors, [fr.f, fr.g])
        else:
            ok = is_unit_ideal(minors)
        entries.append(ReportEntry("dependency_locus", f"chart {i}", ok,
                                   "" if ok else "minor ideal mismatch"))
    return entries


def verify_section_relation(frames, secs):
    """M_i s_i = (0, ..., 0, sign f_i, sign g_i) exactly, so every entry of
    the section relation lies in (f_i, g_i)."""
    entries = []
    for i in sorted(frames):
        fr = frames[i]
        v = fr.M.matvec(fr.s)
        ok = (all(e.is_zero() for e in v[:-2])
              and v[-2] == fr.f.scale(fr.sign)
              and v[-1] == fr.g.scale(fr.sign))
        entries.append(ReportEntry(
            "section_relation", f"chart {i}", ok,
            "" if ok else repr(list(v))))
    return entries


def verify_glue_identities(Z, sub, lb, frames):
    """Raw-set identities on sorted overlaps and triples:
      (a) (g_i, -f_i) S_ij = (-1)^{t_i+t_j} h_ij (g_j, -f_j);
      (b) R_ij = (f_i; g_i) times the pivot selector row (1 at t_i, with
          column t_j deleted);
      (c) (0..0, g_i, -f_i) Z_ij = (-1)^{t_i+t_j} h_ij (0..0, g_j, -f_j);
      (d) the same row functional annihilates the triple defect.
    """
    entries = []
    cover = Z.cover
    r = Z.rank
    for i, j in Z.pairs:
        ctx = cover.ctx((i, j))
        fr_i, fr_j = frames[i], frames[j]
        fi, gi = sub.pair_on(i, ctx)
        fj, gj = sub.pair_on(j, ctx)
        sgn = fr_i.sign * fr_j.sign
        h = lb.h(i, j, ctx)
        b = Z.blocks[(i, j)]

        lhs = MatrixL(ctx, [[gi, -fi]]) @ b["S"]
        rhs = MatrixL(ctx, [[gj, -fj]]).scalar_mul(h.scale(sgn))
        entries.append(_entry("glue_row_transform_S", f"overlap ({i}, {j})",
                              lhs == rhs, lhs - rhs))

        zero, one = LocElem.zero(ctx), LocElem.one(ctx)
        sel = [[one if m == fr_i.t - 1 else zero
                for m in range(r - 1) if m != fr_j.t - 1]]
        expected = MatrixL(ctx, [[fi], [gi]]) @ MatrixL(ctx, sel)
        entries.append(_entry("glue_selector_R", f"overlap ({i}, {j})",
                              b["R"] == expected, b["R"] - expected))

        lhsZ = _mrow(ctx, r, fi, gi) @ Z.Z[(i, j)]
        rhsZ = _mrow(ctx, r, fj, gj).scalar_mul(h.scale(sgn))
        entries.append(_entry("glue_row_transform_Z", f"overlap ({i}, {j})",
                              lhsZ == rhsZ, lhsZ - rhsZ))

    for i, j, k in combinations(cover.charts, 3):
        ctx = cover.ctx((i, j, k))
        fi, gi = sub.pair_on(i, ctx)
        D = (Z.Z[(i, j)].transport_to(ctx) @ Z.Z[(j, k)].transport_to(ctx)
             - Z.Z[(i, k)].transport_to(ctx))
        prod = _mrow(ctx, r, fi, gi) @ D
        ok = prod == MatrixL.zeros(ctx, 1, r)
        entries.append(
            _entry("glue_row_kills_defect", f"triple ({i}, {j}, {k})", ok,
                   prod))
    return entries


def verify_defect_shape(Z, frames):
    """The raw triple defect Z_ik - Z_ij Z_jk vanishes outside its last two
    columns (the factored rank-one shape lives there)."""
    entries = []
    cover = Z.cover
    r = Z.rank
    for i, j, k in combinations(cover.charts, 3):
        ctx = cover.ctx((i, j, k))
        D = (Z.Z[(i, k)].transport_to(ctx)
             - Z.Z[(i, j)].transport_to(ctx)
             @ Z.Z[(j, k)].transport_to(ctx))
        bad = [(row, col) for row in range(r) for col in range(r - 2)
               if not D[row, col].is_zero()]
        entries.append(ReportEntry(
            "defect_shape", f"triple ({i}, {j}, {k})", not bad,
            "" if not bad else f"nonzero entries at {bad}"))
    return entries


def run_all(bundle):
    """Full deterministic verification suite for a BundleResult."""
    entries = []
    entries += verify_section_relation(bundle.frames, bundle.secs)
    entries += verify_dependency_locus(bundle.frames, bundle.sub)
    entries += verify_glue_identities(bundle.raw, bundle.sub, bundle.lb,
                                      bundle.frames)
    entries += verify_det(bundle.raw, bundle.lb)
    entries += verify_defect_shape(bundle.raw, bundle.frames)
    c = bundle.obstruction.cochain
    entries.append(ReportEntry("obstruction_cocycle", "all triples",
                               is_cocycle(c)))
    entries.append(ReportEntry("correction_solves_obstruction", "all pairs",
                               differential(bundle.xi) == c))
    entries += verify_det(bundle.transitions, bundle.lb)
    entries += verify_cocycle(bundle.transitions)
    return Report(entries)
