"""Standard affine cover, line bundles on it, and input-data loading.

The cover of P^n is U_0 .. U_n (U_k = {x_k != 0}); affine n-space is a single
chart.  A codimension-two subscheme arrives either as one global complete
intersection (two homogeneous forms) or as per-chart pairs; charts the
subscheme misses are completed with the canonical pair (1, 0).  Sections are
(r-1)-tuples per chart; loading selects each chart's pivot component t_i,
registers section units where the pivot is not already invertible, builds the
2x2 overlap matrices A_ij, and validates the overlap compatibility of the
sections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import (Context, LocElem, MatrixL, Poly, SUnit, homogenize,
                      dehomogenize, is_homogeneous, parse_poly, transport)
from .errors import (CompatibilityFailure, NotCodimTwo, NotGenerating,
                     PreconditionViolated, ShapeViolation)
from .ideals import (ideal_equal, in_ideal, invert, is_unit_ideal, lift_pair,
                     regular_pair, unit_certificate)


@dataclass(frozen=True)
class AmbientSpec:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in ("projective", "affine"):
            raise ShapeViolation(f"unknown ambient kind {self.kind!r}")
        if self.dim < 1:
            raise ShapeViolation("ambient dimension must be >= 1")


class Cover:
    """The standard cover plus the mutable registry of section units.

    Contexts built by `ctx` reflect the registry at call time; after
    registering units, previously built localized elements can be re-homed
    with `upgrade`.
    """

    def __init__(self, ambient):
        self.ambient = ambient
        if ambient.kind == "projective":
            self.charts = tuple(range(ambient.dim + 1))
        else:
            self.charts = (0,)
        self._sunits = {}

    def ctx(self, indices, home=None):
        indices = tuple(sorted(set(indices)))
        if not indices or any(i not in self.charts for i in indices):
            raise ShapeViolation(f"bad chart indices {indices}")
        home = min(indices) if home is None else home
        sunits = tuple(self._sunits[c] for c in sorted(self._sunits))
        return Context(self.ambient.kind, self.ambient.dim, home, indices,
                       sunits)

    def chart_ctx(self, i):
        return self.ctx((i,))

    def register_sunit(self, chart, chart_poly):
        """Designate a chart polynomial as invertible on its (shrunk) chart."""
        if self.ambient.kind == "projective":
            form, deg = homogenize(chart_poly, chart, self.ambient.dim)
        else:
            form, deg = chart_poly, max(chart_poly.total_degree(), 0)
        unit = SUnit(chart, form, deg)
        old = self._sunits.get(chart)
        if old is not None and old != unit:
            raise PreconditionViolated(
                f"chart {chart} already has a different registered unit")
        self._sunits[chart] = unit
        return unit

    def registered_units(self):
        """All registered section units, in chart order."""
        return tuple(self._sunits[c] for c in sorted(self._sunits))

    def restore_unit(self, chart, form, degree):
        """Re-install a previously serialized section unit as-is."""
        unit = SUnit(chart, form, degree)
        old = self._sunits.get(chart)
        if old is not None and old != unit:
            raise PreconditionViolated(
                f"chart {chart} already has a different registered unit")
        self._sunits[chart] = unit
        return unit

    def upgrade(self, e):
        """Transport a LocElem into the current (possibly enlarged) context."""
        return transport(e, self.ctx(e.ctx.indices, e.ctx.home))

    def hom_names(self):
        if self.ambient.kind == "affine":
            return tuple(f"x{i}" for i in range(1, self.ambient.dim + 1))
        return tuple(f"x{i}" for i in range(self.ambient.dim + 1))


def standard_cover(ambient):
    return Cover(ambient)


class LineBundleData:
    """O(twist) with transition h_ij = (x_j / x_i)^twist on chart overlaps."""

    def __init__(self, ambient, twist):
        if ambient.kind == "affine" and twist != 0:
            raise ShapeViolation("affine ambient admits only the trivial twist")
        self.ambient = ambient
        self.twist = int(twist)

    def h(self, i, j, ctx):
        if self.ambient.kind == "affine" or i == j or self.twist == 0:
            return LocElem.one(ctx)
        if i not in ctx.indices or j not in ctx.indices:
            raise PreconditionViolated(
                f"h_{i}{j} is not defined on charts {ctx.indices}")
        delta = [0] * (self.ambient.dim + 1)
        delta[j] += self.twist
        delta[i] -= self.twist
        num = Poly.const(ctx.nvars, 1)
        den = {}
        for k, e in enumerate(delta):
            if k == ctx.home or e == 0:
                continue
            if e > 0:
                num = num * Poly.variable(ctx.nvars, ctx.axes().index(k)) ** e
            else:
                den[f"c{k}"] = -e
        return LocElem(ctx, num, den)


@dataclass
class SubschemeData:
    cover: Cover
    mode: str
    pairs: dict            # chart -> (f, g) as LocElems in the chart context
    meets_Y: dict          # chart -> bool
    A: dict = field(default_factory=dict)      # ordered (i, j) -> 2x2 MatrixL
    empty_overlap: dict = field(default_factory=dict)  # sorted (i, j) -> bool

    def pair_on(self, i, ctx):
        f, g = self.pairs[i]
        return transport(f, ctx), transport(g, ctx)

    def refresh_contexts(self):
        """Re-home all chart pairs after unit registration."""
        self.pairs = {
            i: (self.cover.upgrade(f), self.cover.upgrade(g))
            for i, (f, g) in self.pairs.items()
        }


def _parse_chart_poly(cover, chart, text, what):
    ctx = cover.chart_ctx(chart)
    try:
        return LocElem(ctx, ctx.parse(str(text)))
    except ValueError as exc:
        raise ShapeViolation(f"{what} on chart {chart}: {exc}") from exc


def load_subscheme(cover, doc):
    """Validate and load the codimension-two data.

    Declared chart pairs must be regular pairs (unless they generate the unit
    ideal, marking the chart as missing Y), must agree on overlaps, and at
    least the ambient must have dimension >= 2.
    """
    if cover.ambient.dim < 2:
        raise NotCodimTwo("codimension-two subschemes need ambient dim >= 2")
    if not isinstance(doc, dict) or "mode" not in doc:
        raise ShapeViolation("subscheme document must carry a 'mode'")
    mode = doc["mode"]
    declared = {}
    if mode == "global_ci":
        if cover.ambient.kind != "projective":
            raise ShapeViolation("global_ci mode needs a projective ambient")
        names = cover.hom_names()
        try:
            F = parse_poly(str(doc["F"]), names)
            G = parse_poly(str(doc["G"]), names)
        except (KeyError, ValueError) as exc:
            raise ShapeViolation(f"global_ci forms: {exc}") from exc
        for form, tag in ((F, "F"), (G, "G")):
            if form.is_zero():
                raise ShapeViolation(f"form {tag} must be nonzero")
            if not is_homogeneous(form):
                raise ShapeViolation(f"form {tag} must be homogeneous")
        for i in cover.charts:
            ctx = cover.chart_ctx(i)
            declared[i] = (LocElem(ctx, dehomogenize(F, i)),
                           LocElem(ctx, dehomogenize(G, i)))
    elif mode == "charts":
        raw = doc.get("pairs")
        if not isinstance(raw, dict) or not raw:
            raise ShapeViolation("charts mode needs a nonempty 'pairs' table")
        for key, val in raw.items():
            try:
                chart = int(key)
            except ValueError:
                raise ShapeViolation(f"bad chart key {key!r}")
            if chart not in cover.charts:
                raise ShapeViolation(f"chart {chart} outside the cover")
            if not (isinstance(val, (list, tuple)) and len(val) == 2):
                raise ShapeViolation(f"chart {chart} pair must be [f, g]")
            declared[chart] = (_parse_chart_poly(cover, chart, val[0], "f"),
                               _parse_chart_poly(cover, chart, val[1], "g"))
    else:
        raise ShapeViolation(f"unknown subscheme mode {mode!r}")

    pairs = {}
    meets = {}
    for i in cover.charts:
        if i in declared:
            f, g = declared[i]
        else:
            ctx = cover.chart_ctx(i)
            f, g = LocElem.one(ctx), LocElem.zero(ctx)
        if is_unit_ideal([f, g]):
            meets[i] = False
            # canonical frame off Y, whatever the declared restriction was
            ctx = f.ctx
            f, g = LocElem.one(ctx), LocElem.zero(ctx)
        else:
            if not regular_pair(f, g):
                raise NotCodimTwo(
                    f"chart {i}: (f, g) is not a regular pair, so it does not "
                    "cut out a codimension-two local complete intersection")
            meets[i] = True
        pairs[i] = (f, g)

    if not any(meets.values()):
        raise NotCodimTwo("the subscheme is empty on every chart")

    sub = SubschemeData(cover, mode, pairs, meets)
    if mode == "charts":
        # overlap consistency of declared ideals
        for i in cover.charts:
            for j in cover.charts:
                if i >= j:
                    continue
                ctx = cover.ctx((i, j))
                fi, gi = sub.pair_on(i, ctx)
                fj, gj = sub.pair_on(j, ctx)
                if not ideal_equal([fi, gi], [fj, gj]):
                    raise PreconditionViolated(
                        f"chart pairs {i} and {j} generate different ideals "
                        "on their overlap", stage="subscheme")
    return sub


def extend_off_Y(sub):
    """Build the 2x2 matrices A_ij with (f_i; g_i) = A_ij (f_j; g_j), exactly,
    for every ordered overlap, using lifts where the overlap meets Y and the
    unit-certificate product form where it does not."""
    cover = sub.cover
    for i in cover.charts:
        for j in cover.charts:
            if i >= j:
                continue
            ctx = cover.ctx((i, j))
            fi, gi = sub.pair_on(i, ctx)
            sub.empty_overlap[(i, j)] = is_unit_ideal([fi, gi])
    for i in cover.charts:
        for j in cover.charts:
            if i == j:
                continue
            ctx = cover.ctx((i, j))
            fi, gi = sub.pair_on(i, ctx)
            fj, gj = sub.pair_on(j, ctx)
            if sub.empty_overlap[(min(i, j), max(i, j))]:
                ui, vi = unit_certificate(fi, gi)
                uj, vj = unit_certificate(fj, gj)
                left = MatrixL(ctx, [[fi, -vi], [gi, ui]])
                right = MatrixL(ctx, [[uj, vj], [-gj, fj]])
                a = left @ right
            else:
                top = lift_pair(fi, fj, gj)
                bot = lift_pair(gi, fj, gj)
                a = MatrixL(ctx, [[top[0], top[1]], [bot[0], bot[1]]])
            if a.matvec((fj, gj)) != (fi, gi):
                raise AssertionError("gluing identity failed re-verification")
            sub.A[(i, j)] = a
    return sub


@dataclass
class SectionData:
    sections: dict    # chart -> tuple of r-1 LocElems in the chart context
    t: dict           # chart -> pivot index, 1-based
    tier: dict        # chart -> which pivot rule fired (1..4)
    rank: int

    def refresh_contexts(self, cover):
        self.sections = {
            i: tuple(cover.upgrade(s) for s in ss)
            for i, ss in self.sections.items()
        }


def _choose_pivot(f, g, sections):
    """Pivot tiers: constant; monomial (register); already a unit; nonvanishing
    on Y by Nullstellensatz (register).  Returns (t, tier, unit_to_register)."""
    candidates = list(enumerate(sections, start=1))
    for t, s in candidates:
        if not s.den and s.num.is_constant() and not s.num.is_zero():
            return t, 1, None
    for t, s in candidates:
        if not s.den and s.num.is_monomial() and s.num.total_degree() >= 1:
            return t, 2, s.num
    for t, s in candidates:
        if not s.is_zero() and invert(s) is not None:
            return t, 3, None
    for t, s in candidates:
        if not s.is_zero() and is_unit_ideal([f, g, s]):
            return t, 4, s.num
    return None, None, None


def load_sections(cover, lb, sub, doc, rank):
    """Parse, validate and register the section data; fills sub.A on the way.

    Per chart meeting Y: the r-1 section components together with (f, g) must
    generate the unit ideal, and a pivot component must be invertible on the
    chart's shrunk open set (tiers above).  Off-Y charts always carry the
    canonical tuple (1, 0, ..., 0).  After unit registration the overlap
    matrices are built and the section compatibility
    s_i - (det A_ij / h_ij) s_j = 0 mod (f_i, g_i) is enforced on every
    ordered overlap.
    """
    if rank < 2:
        raise ShapeViolation("rank must be at least 2")
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ShapeViolation("sections document must be a table")
    parsed = {}
    for key, val in doc.items():
        try:
            chart = int(key)
        except ValueError:
            raise ShapeViolation(f"bad section chart key {key!r}")
        if chart not in cover.charts:
            raise ShapeViolation(f"section chart {chart} outside the cover")
        if not sub.meets_Y[chart]:
            raise ShapeViolation(
                f"chart {chart} misses the subscheme; its section tuple is "
                "canonical and must not be supplied")
        if not (isinstance(val, (list, tuple)) and len(val) == rank - 1):
            raise ShapeViolation(
                f"chart {chart} needs exactly {rank - 1} section components")
        parsed[chart] = tuple(
            _parse_chart_poly(cover, chart, s, f"section {m + 1}")
            for m, s in enumerate(val))

    sections = {}
    t_map = {}
    tier_map = {}
    for i in cover.charts:
        ctx = cover.chart_ctx(i)
        if not sub.meets_Y[i]:
            canonical = [LocElem.one(ctx)] + [LocElem.zero(ctx)] * (rank - 2)
            sections[i] = tuple(canonical)
            t_map[i] = 1
            tier_map[i] = 0
            continue
        if i not in parsed:
            raise ShapeViolation(f"chart {i} meets the subscheme but has no "
                                 "section data")
        ss = parsed[i]
        f, g = sub.pairs[i]
        if not is_unit_ideal([f, g] + list(ss)):
            raise NotGenerating(
                f"chart {i}: (f, g, s_1..s_{rank - 1}) do not generate the "
                "unit ideal; the sections do not generate on Y")
        t, tier, to_register = _choose_pivot(f, g, ss)
        if t is None:
            raise NotGenerating(
                f"chart {i}: no section component is invertible on the chart "
                "or nonvanishing on Y; no pivot available")
        if to_register is not None:
            cover.register_sunit(i, to_register)
        sections[i] = ss
        t_map[i] = t
        tier_map[i] = tier

    secs = SectionData(sections, t_map, tier_map, rank)
    # Units may have been registered: rebuild every context-bound object.
    sub.refresh_contexts()
    secs.refresh_contexts(cover)
    extend_off_Y(sub)

    for i in cover.charts:
        for j in cover.charts:
            if i == j:
                continue
            ctx = cover.ctx((i, j))
            fi, gi = sub.pair_on(i, ctx)
            factor = sub.A[(i, j)].det() * lb.h(j, i, ctx)  # det A_ij / h_ij
            for m in range(rank - 1):
                si = transport(secs.sections[i][m], ctx)
                sj = transport(secs.sections[j][m], ctx)
                residue = si - factor * sj
                if not residue.is_zero():
                    if not in_ideal(residue, [fi, gi]):
                        raise CompatibilityFailure(
                            f"sections {m + 1} on overlap ({i}, {j}) are not "
                            "compatible modulo (f, g)")
    return secs
