from __future__ import annotations

import random
from fractions import Fraction

import pytest

from serrekit.algebra import LocElem, MatrixL, Poly, transport
from serrekit.cech import cohomology_dim
from serrekit.cover import (AmbientSpec, LineBundleData, load_sections,
                            load_subscheme, standard_cover)
from serrekit.errors import FormMismatch, Obstructed, ShapeViolation
from serrekit.serre import (BundleResult, TransitionSet, adjust_glue,
                            build_bundle, build_frames, build_Z,
                            compare_bundles, correct, normalize_generators,
                            obstruction, tprime_apply_inverse)


def ci_line_doc(**options):
    """V(x0, x1) in P^3 with twist 2 and the constant section tuple."""
    doc = {
        "ambient": {"kind": "projective", "dim": 3},
        "line_bundle": {"twist": 2},
        "rank": 2,
        "subscheme": {"mode": "global_ci", "F": "x0", "G": "x1"},
        "sections": {"2": ["1"], "3": ["1"]},
    }
    if options:
        doc["options"] = dict(options)
    return doc


def point_doc(twist=1):
    """The single point V(x0, x1) in P^2."""
    return {
        "ambient": {"kind": "projective", "dim": 2},
        "line_bundle": {"twist": twist},
        "rank": 2,
        "subscheme": {"mode": "global_ci", "F": "x0", "G": "x1"},
        "sections": {"2": ["1"]},
    }


def skew_lines_doc(**options):
    """V(x0, x1) union V(x2, x3) in P^3, declared chart by chart."""
    doc = {
        "ambient": {"kind": "projective", "dim": 3},
        "line_bundle": {"twist": 2},
        "rank": 2,
        "subscheme": {"mode": "charts", "pairs": {
            "0": ["x2", "x3"],
            "1": ["x2", "x3"],
            "2": ["x0", "x1"],
            "3": ["x0", "x1"],
        }},
        "sections": {"0": ["1"], "1": ["1"], "2": ["1"], "3": ["1"]},
    }
    if options:
        doc["options"] = dict(options)
    return doc


def two_points_doc():
    """Reduced points [1:0:0] and [0:1:0] in P^2 with rank 3 data."""
    return {
        "ambient": {"kind": "projective", "dim": 2},
        "line_bundle": {"twist": 1},
        "rank": 3,
        "subscheme": {"mode": "charts", "pairs": {
            "0": ["x1", "x2"],
            "1": ["x0", "x2"],
        }},
        "sections": {"0": ["1", "0"], "1": ["0", "1"]},
    }


def _loaded(doc):
    ambient = AmbientSpec(doc["ambient"]["kind"], doc["ambient"]["dim"])
    cover = standard_cover(ambient)
    lb = LineBundleData(ambient, doc["line_bundle"]["twist"])
    sub = load_subscheme(cover, doc["subscheme"])
    secs = load_sections(cover, lb, sub, doc["sections"], doc["rank"])
    return cover, lb, sub, secs


def rand_loc(ctx, rng, deg=3):
    terms = {}
    for _ in range(rng.randint(1, 4)):
        exps = [0] * ctx.nvars
        for _ in range(rng.randint(0, deg)):
            exps[rng.randrange(ctx.nvars)] += 1
        terms[tuple(exps)] = Fraction(rng.randint(-4, 4))
    num = Poly(ctx.nvars, terms)
    den = {}
    keys = ctx.unit_keys()
    if keys and rng.random() < 0.5:
        den[rng.choice(keys)] = rng.randint(1, 2)
    return LocElem(ctx, num, den)


# -- normalization -----------------------------------------------------------


def test_normalize_constant_section():
    """Pivot 1 at position 1: f is kept, g flips sign, s becomes -1."""
    cover, lb, sub, secs = _loaded(point_doc())
    ctx2 = sub.pairs[2][0].ctx
    f_before, g_before = sub.pairs[2]
    normalize_generators(sub, secs)
    f, g = sub.pairs[2]
    assert f == f_before
    assert g == -g_before
    assert secs.sections[2] == (LocElem.const(ctx2, -1),)


def test_normalize_twice_restores_pair():
    """Starting from s = -1, two applications undo each other on (f, g)."""
    doc = point_doc()
    doc["sections"] = {"2": ["-1"]}
    cover, lb, sub, secs = _loaded(doc)
    f0, g0 = sub.pairs[2]
    normalize_generators(sub, secs)
    assert sub.pairs[2][0] == -f0 and sub.pairs[2][1] == -g0
    assert secs.sections[2][0] == LocElem.const(f0.ctx, -1)
    normalize_generators(sub, secs)
    assert sub.pairs[2][0] == f0 and sub.pairs[2][1] == g0
    assert secs.sections[2][0] == LocElem.const(f0.ctx, -1)


def test_normalize_keeps_overlap_matrices_exact():
    cover, lb, sub, secs = _loaded(skew_lines_doc())
    normalize_generators(sub, secs)
    for (i, j), A in sub.A.items():
        ctx = A.ctx
        fi, gi = sub.pair_on(i, ctx)
        fj, gj = sub.pair_on(j, ctx)
        assert A.matvec((fj, gj)) == (fi, gi)


# -- frames ------------------------------------------------------------------


def test_frame_identities_rank_three():
    cover, lb, sub, secs = _loaded(two_points_doc())
    normalize_generators(sub, secs)
    frames = build_frames(sub, secs)
    assert {frames[i].t for i in cover.charts} == {1, 2}
    for i in cover.charts:
        fr = frames[i]
        ctx = fr.f.ctx
        top = fr.Tp.delete_row(fr.t - 1)
        assert top.delete_col(fr.t - 1) == MatrixL.identity(ctx, 1)
        assert fr.Tpp.delete_col(fr.t - 1) == MatrixL.zeros(ctx, 2, 1)
        assert all(e.is_zero() for e in top.matvec(fr.s))
        assert fr.Tpp.matvec(fr.s) == (fr.f.scale(fr.sign),
                                       fr.g.scale(fr.sign))
        assert fr.M.shape == (3, 2)


def test_frame_rank_two_degenerates_to_pair_column():
    cover, lb, sub, secs = _loaded(point_doc())
    normalize_generators(sub, secs)
    frames = build_frames(sub, secs)
    fr = frames[2]
    assert fr.M.shape == (2, 1)
    assert fr.M[0, 0] == fr.f and fr.M[1, 0] == fr.g


def test_tprime_inverse_roundtrip_random():
    """The closed-form inverse composed with the frame is the identity."""
    cover, lb, sub, secs = _loaded(two_points_doc())
    normalize_generators(sub, secs)
    frames = build_frames(sub, secs)
    rng = random.Random(501)
    for trial in range(120):
        fr = frames[cover.charts[trial % len(cover.charts)]]
        ctx = fr.f.ctx
        u = tuple(rand_loc(ctx, rng) for _ in range(2))
        w = tprime_apply_inverse(u, fr)
        assert fr.Tp.matvec(w) == u


def test_tprime_inverse_fixes_off_pivot_columns():
    cover, lb, sub, secs = _loaded(two_points_doc())
    normalize_generators(sub, secs)
    frames = build_frames(sub, secs)
    fr = frames[1]          # pivot at position 2
    ctx = fr.f.ctx
    e1 = (LocElem.one(ctx), LocElem.zero(ctx))
    assert tprime_apply_inverse(e1, fr) == e1


# -- determinant adjustment --------------------------------------------------


def test_adjust_glue_ci_line_defect_zero():
    cover, lb, sub, secs = _loaded(ci_line_doc())
    normalize_generators(sub, secs)
    before = {pair: A for pair, A in sub.A.items()}
    adjust_glue(sub, secs, lb)
    ctx = cover.ctx((2, 3))
    target = lb.h(2, 3, ctx)    # (-1) * h / (-1) with both signs -1
    assert sub.A[(2, 3)].det() == target
    assert sub.A[(2, 3)] == before[(2, 3)]


def test_adjust_glue_restores_perturbed_determinant():
    cover, lb, sub, secs = _loaded(ci_line_doc())
    normalize_generators(sub, secs)
    adjust_glue(sub, secs, lb)
    ctx = cover.ctx((2, 3))
    fi, gi = sub.pair_on(2, ctx)
    fj, gj = sub.pair_on(3, ctx)
    phi = LocElem(ctx, ctx.parse("x1"))
    psi = LocElem(ctx, ctx.parse("x3"))
    tweak = MatrixL(ctx, [[psi * gj, -(psi * fj)],
                          [-(phi * gj), phi * fj]])
    sub.A[(2, 3)] = sub.A[(2, 3)] + tweak
    target = lb.h(2, 3, ctx)
    assert sub.A[(2, 3)].matvec((fj, gj)) == (fi, gi)
    assert sub.A[(2, 3)].det() != target
    adjust_glue(sub, secs, lb)
    assert sub.A[(2, 3)].det() == target
    assert sub.A[(2, 3)].matvec((fj, gj)) == (fi, gi)


# -- full pipeline -----------------------------------------------------------


def test_ci_line_build():
    bundle = build_bundle(ci_line_doc())
    assert bundle.report.ok
    assert bundle.transitions.status == "corrected"
    ctx = bundle.cover.ctx((2, 3))
    a3 = LocElem(ctx, ctx.parse("x3"))
    Z = bundle.raw.Z[(2, 3)]
    assert Z[0, 0] == a3 and Z[1, 1] == a3
    assert Z[0, 1].is_zero() and Z[1, 0].is_zero()
    assert bundle.meta["unique"] is True
    assert bundle.meta["h1_dim"] == 0


def test_point_build_exercises_off_subscheme_charts():
    bundle = build_bundle(point_doc())
    assert bundle.report.ok
    assert bundle.sub.meets_Y == {0: False, 1: False, 2: True}
    assert bundle.meta["pivots"] == {0: 1, 1: 1, 2: 1}
    assert bundle.meta["unique"] is True


def test_skew_lines_build_and_correction():
    bundle = build_bundle(skew_lines_doc())
    assert bundle.report.ok
    assert bundle.transitions.status == "corrected"
    # every chart carries part of the union, no canonical off charts
    assert all(bundle.sub.meets_Y.values())
    # mixed-line overlaps are empty; same-line overlaps are not
    assert bundle.sub.empty_overlap[(0, 2)]
    assert bundle.sub.empty_overlap[(1, 3)]
    assert not bundle.sub.empty_overlap[(0, 1)]
    assert not bundle.sub.empty_overlap[(2, 3)]
    assert cohomology_dim(bundle.ambient, -2, 2) == 0
    assert cohomology_dim(bundle.ambient, -2, 1) == 0
    assert bundle.meta["unique"] is True


def test_two_points_rank_three_build():
    bundle = build_bundle(two_points_doc())
    assert bundle.report.ok
    assert bundle.meta["pivots"] == {0: 1, 1: 2, 2: 1}
    branches = bundle.meta["branches"]
    assert branches["0,1"] == "split"
    assert branches["1,2"] == "split"
    assert branches["0,2"] == "unit"
    names = {e.check for e in bundle.report.entries}
    assert "glue_row_transform_S" in names
    assert "glue_selector_R" in names
    assert "defect_shape" in names
    assert "dependency_locus" in names


def test_obstructed_point_with_cubic_twist():
    """One reduced point with twist 3 has a genuinely unremovable defect:
    the only candidate class lives in the one-dimensional degree-2
    cohomology of O(-3) and the constant-section data hits it."""
    with pytest.raises(Obstructed) as err:
        build_bundle(point_doc(twist=3))
    assert err.value.multidegree == (-1, -1, -1)
    assert err.value.component == 1
    assert err.value.stage == "correction"


def test_build_bundle_rejects_bad_documents():
    with pytest.raises(ShapeViolation):
        build_bundle([])
    with pytest.raises(ShapeViolation):
        build_bundle({"ambient": {"kind": "projective"}})
    doc = ci_line_doc()
    doc["rank"] = 1
    with pytest.raises(ShapeViolation):
        build_bundle(doc)
    doc = ci_line_doc(lift_order="xy")
    with pytest.raises(ShapeViolation):
        build_bundle(doc)


def test_sections_list_form_equivalent():
    doc = ci_line_doc()
    doc["sections"] = [{"chart": 2, "values": ["1"]},
                       {"chart": 3, "values": ["1"]}]
    bundle = build_bundle(doc)
    assert bundle.report.ok


# -- comparison --------------------------------------------------------------


def test_compare_self_is_identity():
    a = build_bundle(ci_line_doc())
    b = build_bundle(ci_line_doc())
    iso = compare_bundles(a, b)
    for i in a.cover.charts:
        ctx = a.frames[i].f.ctx
        assert iso.N[i] == MatrixL.identity(ctx, 2)
        assert all(e.is_zero() for e in iso.y[i])
    assert iso.xi.is_zero()


def test_compare_lift_orders_skew_lines():
    """Different cofactor choices give different transition sets that are
    still isomorphic via unit-determinant chart automorphisms."""
    a = build_bundle(skew_lines_doc(lift_order="fg"))
    b = build_bundle(skew_lines_doc(lift_order="gf"))
    iso = compare_bundles(a, b)
    for i in a.cover.charts:
        ctx = a.frames[i].f.ctx
        assert iso.N[i].det() == LocElem.one(ctx)
        assert iso.N[i] @ a.frames[i].M == a.frames[i].M
    for (i, j) in a.transitions.pairs:
        ctx = a.cover.ctx((i, j))
        lhs = a.transitions.Z[(i, j)] @ iso.N[j].transport_to(ctx)
        rhs = iso.N[i].transport_to(ctx) @ b.transitions.Z[(i, j)].transport_to(ctx)
        assert lhs == rhs


def test_compare_rejects_different_shapes():
    a = build_bundle(ci_line_doc())
    b = build_bundle(point_doc())
    with pytest.raises(FormMismatch):
        compare_bundles(a, b)
    c = build_bundle(two_points_doc())
    with pytest.raises(FormMismatch):
        compare_bundles(b, c)
