"""Assembly of a rank-r bundle from codimension-two data on the standard cover.

Given a codimension-two locally complete intersection Y with chart pairs
(f_i, g_i), a line-bundle twist, and r-1 section representatives that
generate along Y, the pipeline produces r x r transition matrices Z_ij whose
cokernel presentation realizes Y as the dependency locus of r-1 sections of
the resulting bundle:

    normalize_generators -> adjust_glue -> build_frames -> build_Z
        -> obstruction -> correct

`build_Z` glues chart frames pairwise; the triple-overlap defect is exactly
the image of a degree-2 Cech cocycle with values in r-1 copies of the dual
line bundle, and `correct` removes it by solving a coboundary equation.
`compare_bundles` decides isomorphism of two builds over the same local data
by solving the analogous degree-1 problem.

All identities asserted here hold exactly (no tolerances); a failed assertion
raises, it never warns.
"""

from dataclasses import dataclass, field
from itertools import combinations

from .algebra import LocElem, MatrixL, from_blocks, transport
from .cech import CechCochain, coboundary_solve, cohomology_dim, is_cocycle
from .cover import (AmbientSpec, LineBundleData, load_sections,
                    load_subscheme, standard_cover)
from .errors import (FormMismatch, GluingFailure, H1Obstruction, NotACocycle,
                     Obstructed, PreconditionViolated, SerreError,
                     ShapeViolation)
from .ideals import invert, koszul_divide, lift_pair, unit_certificate


def _sign(t):
    return -1 if t % 2 else 1


def _lift(p, f, g, order):
    """Cofactors (a, b) with p = a f + b g, computed in the requested
    generator order ("fg" or "gf"); the representative depends on the order."""
    if order == "gf":
        b, a = lift_pair(p, g, f)
        return a, b
    return lift_pair(p, f, g)


def _tprime_apply(svec, t, sign, xs):
    """Multiply the unipotent frame T' (pivot column t built from svec) into
    the vector xs: entry m != t-1 picks up -sign * svec[m] * xs[t-1]."""
    piv = xs[t - 1]
    out = list(xs)
    for m in range(len(xs)):
        if m != t - 1:
            out[m] = xs[m] - (svec[m] * piv).scale(sign)
    return out


def _tprime_unapply(svec, t, sign, xs):
    """Closed-form inverse of `_tprime_apply`: flip the off-pivot sign."""
    piv = xs[t - 1]
    out = list(xs)
    for m in range(len(xs)):
        if m != t - 1:
            out[m] = xs[m] + (svec[m] * piv).scale(sign)
    return out


def tprime_apply_inverse(u, frame):
    """Solve T' w = u on the frame's own chart by the closed form.

    The pivot entry is fixed and every other entry gains
    (-1)^t * s_m * u_{t}; multiplying T' back returns u exactly.
    """
    return tuple(_tprime_unapply(list(frame.s), frame.t, frame.sign, list(u)))


@dataclass
class FrameData:
    """Per-chart frame: T' is (r-1)x(r-1) unipotent with pivot column built
    from the normalized sections, T'' is the 2x(r-1) block whose pivot column
    is (f; g), and M stacks T' without its pivot row over T''.

    Exact identities checked at build time (D = delete pivot row, D' = delete
    pivot column): D T' D' = I, T'' D' = 0, D T' s = 0, T'' s = sign (f; g).
    """

    chart: int
    t: int          # pivot position, 1-based
    sign: int       # (-1) ** t
    f: LocElem
    g: LocElem
    s: tuple        # normalized sections; s[t-1] == sign exactly
    Tp: MatrixL     # (r-1) x (r-1)
    Tpp: MatrixL    # 2 x (r-1)
    M: MatrixL      # r x (r-1)


@dataclass
class TransitionSet:
    """Transition matrices on sorted overlaps with their named blocks.

    Z_ij = [[P, Q], [R, S]] with P (r-2)x(r-2), Q (r-2)x2, R 2x(r-2), S 2x2;
    rows/columns are ordered with the pivot rows moved last.  Inverse and
    reversed transitions are derived, not stored: det Z_ij = h_ij makes
    Z_ij^{-1} = adjugate(Z_ij) * h_ji.
    """

    rank: int
    status: str            # "raw" | "corrected"
    cover: object
    lb: object
    pairs: tuple           # sorted (i, j), i < j
    Z: dict                # (i, j) -> r x r MatrixL on cover.ctx((i, j))
    blocks: dict           # (i, j) -> {"P": .., "Q": .., "R": .., "S": ..}
    branch: dict           # (i, j) -> "unit" | "split"
    x: dict = field(default_factory=dict)   # correction chains per pair

    def get(self, i, j):
        """Transition for the ordered overlap (i, j)."""
        if i == j:
            return MatrixL.identity(self.cover.chart_ctx(i), self.rank)
        if (i, j) in self.Z:
            return self.Z[(i, j)]
        Zij = self.Z[(j, i)]
        return Zij.adjugate().scalar_mul(self.lb.h(i, j, Zij.ctx))


@dataclass
class ObstructionData:
    """Triple-overlap defect: per sorted triple the factored functions beta,
    the r x 2 defect block B (the only nonzero columns of Z_ik - Z_ij Z_jk),
    and the induced degree-2 cochain c with values in r-1 dual-bundle copies.
    """

    triples: tuple
    beta: dict            # (i, j, k) -> (r-1)-tuple on the triple overlap
    B: dict               # (i, j, k) -> r x 2 MatrixL
    cochain: CechCochain  # degree 2, width r-1


@dataclass
class IsomorphismData:
    """Chart automorphisms N_i intertwining two transition sets:
    Z_ij N_j = N_i Z'_ij with det N_i = 1 and N_i M_i = M_i exactly."""

    y: dict               # chart -> (r-1)-tuple
    N: dict               # chart -> r x r MatrixL
    xi: CechCochain       # degree-1 cochain recovered from the block deltas


@dataclass
class BundleResult:
    ambient: AmbientSpec
    cover: object
    lb: LineBundleData
    rank: int
    sub: object
    secs: object
    frames: dict
    transitions: TransitionSet      # corrected
    raw: TransitionSet
    obstruction: ObstructionData
    xi: CechCochain                 # solved correction 1-cochain
    meta: dict
    report: object = None


def normalize_generators(sub, secs):
    """Rescale each chart so the pivot section equals (-1)^t exactly.

    Per chart with pivot position t and pivot value p: f <- f / p,
    g <- (-1)^t g, s <- (-1)^t s / p.  Every stored overlap matrix A is
    conjugated by the corresponding diagonal units so A (f_j; g_j) = (f_i; g_i)
    keeps holding exactly.  Mutates and returns (sub, secs).
    """
    cover = sub.cover
    pivots, invs, signs = {}, {}, {}
    for i in cover.charts:
        t = secs.t[i]
        piv = secs.sections[i][t - 1]
        inv = invert(piv)
        if inv is None:
            raise PreconditionViolated(
                f"chart {i}: pivot section {t} is not invertible on the chart")
        pivots[i], invs[i], signs[i] = piv, inv, _sign(t)

    for i in cover.charts:
        f, g = sub.pairs[i]
        sgn = signs[i]
        sub.pairs[i] = (f * invs[i], g.scale(sgn))
        secs.sections[i] = tuple(
            (x * invs[i]).scale(sgn) for x in secs.sections[i])
        piv = secs.sections[i][secs.t[i] - 1]
        if piv != LocElem.const(piv.ctx, sgn):
            raise PreconditionViolated(
                f"chart {i}: pivot did not normalize to {sgn}")

    for (i, j), A in sub.A.items():
        ctx = A.ctx
        inv_i = transport(invs[i], ctx)
        piv_j = transport(pivots[j], ctx)
        si, sj = signs[i], signs[j]
        newA = MatrixL(ctx, [
            [A[0, 0] * piv_j * inv_i, (A[0, 1] * inv_i).scale(sj)],
            [(A[1, 0] * piv_j).scale(si), A[1, 1].scale(si * sj)],
        ])
        fi, gi = sub.pair_on(i, ctx)
        fj, gj = sub.pair_on(j, ctx)
        if newA.matvec((fj, gj)) != (fi, gi):
            raise PreconditionViolated(
                f"overlap ({i}, {j}): normalization broke the gluing identity")
        sub.A[(i, j)] = newA
    return sub, secs


def adjust_glue(sub, secs, lb, lift_order="fg"):
    """Retune each sorted overlap matrix so det A_ij hits its exact target.

    Target: (-1)^{t_i} h_ij / s_{j t_i}, defined whenever the pivot component
    of chart i evaluated in chart j's tuple is invertible on the overlap.
    The defect is a member of (f_i, g_i); its cofactors (phi, psi) feed the
    rank-one update A += [[psi g_j, -psi f_j], [-phi g_j, phi f_j]], which
    fixes the determinant without disturbing A (f_j; g_j) = (f_i; g_i).
    Overlaps whose pivot is not invertible are left to the split branch of
    `build_Z` and skipped here.
    """
    cover = sub.cover
    for i, j in combinations(cover.charts, 2):
        ctx = cover.ctx((i, j))
        t_i = secs.t[i]
        sgn_i = _sign(t_i)
        sji = transport(secs.sections[j][t_i - 1], ctx)
        inv_sji = invert(sji)
        if inv_sji is None:
            continue
        A = sub.A[(i, j)].transport_to(ctx)
        target = (lb.h(i, j, ctx) * inv_sji).scale(sgn_i)
        delta = target - A.det()
        if not delta.is_zero():
            fi, gi = sub.pair_on(i, ctx)
            fj, gj = sub.pair_on(j, ctx)
            phi, psi = _lift(delta, fi, gi, lift_order)
            A = A + MatrixL(ctx, [[psi * gj, -(psi * fj)],
                                  [-(phi * gj), phi * fj]])
            if A.det() != target or A.matvec((fj, gj)) != (fi, gi):
                raise GluingFailure(
                    f"overlap ({i}, {j}): determinant adjustment failed")
            sub.A[(i, j)] = A
    return sub


def build_frames(sub, secs):
    """Construct T', T'', M per chart and check the frame identities."""
    cover = sub.cover
    r = secs.rank
    frames = {}
    for i in cover.charts:
        f, g = sub.pairs[i]
        ctx = f.ctx
        t = secs.t[i]
        sgn = _sign(t)
        s = tuple(secs.sections[i])
        one, zero = LocElem.one(ctx), LocElem.zero(ctx)

        rows = [[one if a == b else zero for b in range(r - 1)]
                for a in range(r - 1)]
        for m in range(r - 1):
            if m != t - 1:
                rows[m][t - 1] = s[m].scale(-sgn)
        Tp = MatrixL(ctx, rows)

        prows = [[zero] * (r - 1) for _ in range(2)]
        prows[0][t - 1] = f
        prows[1][t - 1] = g
        Tpp = MatrixL(ctx, prows)

        M = from_blocks(ctx, [[Tp.delete_row(t - 1)], [Tpp]])

        top = Tp.delete_row(t - 1)
        if top.delete_col(t - 1) != MatrixL.identity(ctx, r - 2):
            raise PreconditionViolated(
                f"chart {i}: pivot-deleted frame is not the identity")
        if Tpp.delete_col(t - 1) != MatrixL.zeros(ctx, 2, r - 2):
            raise PreconditionViolated(
                f"chart {i}: pair block has entries off the pivot column")
        if r > 2 and any(not e.is_zero() for e in top.matvec(s)):
            raise PreconditionViolated(
                f"chart {i}: frame does not annihilate the section tuple")
        if Tpp.matvec(s) != (f.scale(sgn), g.scale(sgn)):
            raise PreconditionViolated(
                f"chart {i}: pair block misses sign * (f; g) on the sections")

        frames[i] = FrameData(chart=i, t=t, sign=sgn, f=f, g=g, s=s,
                              Tp=Tp, Tpp=Tpp, M=M)
    return frames


def build_Z(frames, sub, secs, lb, lift_order="fg"):
    """Assemble the raw transition matrix on every sorted overlap.

    P and R come from the closed formulas (delete pivot row/column of the
    chart-i frame); S is the retuned overlap matrix scaled by
    (-1)^{t_j} s_{j t_i} when that pivot is invertible, and otherwise — only
    legitimate when (f, g) is the unit ideal on the overlap — the split form
    built from comaximality certificates of both chart pairs; Q lifts the
    off-pivot entries of (-1)^{t_j} T'_i s_j over (f_j, g_j), which lie in
    the ideal by the section compatibility.  Checks M_i = Z_ij M_j and
    det Z_ij = h_ij exactly.
    """
    cover = sub.cover
    r = secs.rank
    Zs, blocks, branch = {}, {}, {}
    pairs = tuple(combinations(cover.charts, 2))
    for i, j in pairs:
        ctx = cover.ctx((i, j))
        fr_i, fr_j = frames[i], frames[j]
        t_i, sgn_i = fr_i.t, fr_i.sign
        t_j, sgn_j = fr_j.t, fr_j.sign
        fi, gi = sub.pair_on(i, ctx)
        fj, gj = sub.pair_on(j, ctx)
        s_i = [transport(e, ctx) for e in fr_i.s]
        s_j = [transport(e, ctx) for e in fr_j.s]
        sji = s_j[t_i - 1]

        if invert(sji) is not None:
            S = sub.A[(i, j)].transport_to(ctx).scalar_mul(sji.scale(sgn_j))
            branch[(i, j)] = "unit"
        elif sub.empty_overlap.get((i, j)):
            ui, vi = unit_certificate(fi, gi)
            uj, vj = unit_certificate(fj, gj)
            S = ((MatrixL(ctx, [[fi], [gi]]) @ MatrixL(ctx, [[uj, vj]]))
                 .scalar_mul(sji.scale(sgn_j))
                 + (MatrixL(ctx, [[vi], [-ui]]) @ MatrixL(ctx, [[gj, -(fj)]]))
                 .scalar_mul(lb.h(i, j, ctx).scale(sgn_i * sgn_j)))
            branch[(i, j)] = "split"
        else:
            raise GluingFailure(
                f"overlap ({i}, {j}): chart {j}'s tuple is not invertible at "
                f"pivot {t_i} and the overlap still meets the subscheme")

        tps = _tprime_apply(s_i, t_i, sgn_i, s_j)
        qrows = []
        for m in range(r - 1):
            if m == t_i - 1:
                continue
            a, b = _lift(tps[m].scale(sgn_j), fj, gj, lift_order)
            qrows.append([a, b])
        Q = MatrixL(ctx, qrows)

        Tp = fr_i.Tp.transport_to(ctx)
        Tpp = fr_i.Tpp.transport_to(ctx)
        P = Tp.delete_row(t_i - 1).delete_col(t_j - 1)
        R = Tpp.delete_col(t_j - 1)
        Z = from_blocks(ctx, [[P, Q], [R, S]])

        Mi = fr_i.M.transport_to(ctx)
        Mj = fr_j.M.transport_to(ctx)
        if Z @ Mj != Mi:
            raise GluingFailure(
                f"overlap ({i}, {j}): transition does not carry M_{j} to M_{i}")
        if Z.det() != lb.h(i, j, ctx):
            raise GluingFailure(
                f"overlap ({i}, {j}): transition determinant is not h_ij")
        Zs[(i, j)] = Z
        blocks[(i, j)] = {"P": P, "Q": Q, "R": R, "S": S}
    return TransitionSet(rank=r, status="raw", cover=cover, lb=lb,
                         pairs=pairs, Z=Zs, blocks=blocks, branch=branch)


def obstruction(Z, frames):
    """Extract the triple-overlap defect as an exact degree-2 cocycle.

    D = Z_ik - Z_ij Z_jk must vanish outside its last two columns; those
    columns factor row-by-row through (g_k, -f_k), the two pivot rows factor
    once more through (f_i; g_i), and the resulting beta vector is pulled
    back through T'_i^{-1} and signed by (-1)^{t_k} to form the cochain
    value on (i, j, k)."""
    cover, lb, r = Z.cover, Z.lb, Z.rank
    triples = tuple(combinations(cover.charts, 3))
    beta_map, B_map, data = {}, {}, {}
    for i, j, k in triples:
        ctx = cover.ctx((i, j, k))
        D = (Z.Z[(i, k)].transport_to(ctx)
             - Z.Z[(i, j)].transport_to(ctx) @ Z.Z[(j, k)].transport_to(ctx))
        for row in range(r):
            for col in range(r - 2):
                if not D[row, col].is_zero():
                    raise ShapeViolation(
                        f"triple ({i}, {j}, {k}): defect has entries outside "
                        "the final two columns", stage="glue")
        fr_i, fr_k = frames[i], frames[k]
        fi, gi = transport(fr_i.f, ctx), transport(fr_i.g, ctx)
        fk, gk = transport(fr_k.f, ctx), transport(fr_k.g, ctx)
        try:
            w = [koszul_divide(D[row, r - 2], -D[row, r - 1], fk, gk)
                 for row in range(r)]
            bt = koszul_divide(w[r - 1], w[r - 2], fi, gi)
        except SerreError as exc:
            raise ShapeViolation(
                f"triple ({i}, {j}, {k}): defect block does not factor "
                f"through the chart pairs ({exc})", stage="glue")
        hat = w[:r - 2]
        beta = hat[:fr_i.t - 1] + [bt] + hat[fr_i.t - 1:]
        s_i = [transport(e, ctx) for e in fr_i.s]
        val = tuple(e.scale(fr_k.sign)
                    for e in _tprime_unapply(s_i, fr_i.t, fr_i.sign, beta))
        beta_map[(i, j, k)] = tuple(beta)
        B_map[(i, j, k)] = MatrixL(
            ctx, [[D[row, r - 2], D[row, r - 1]] for row in range(r)])
        if any(not e.is_zero() for e in val):
            data[(i, j, k)] = val
    c = CechCochain(cover, lb, 2, r - 1, data)
    if not is_cocycle(c):
        raise NotACocycle("triple-overlap defect cochain is not closed")
    return ObstructionData(triples=triples, beta=beta_map, B=B_map, cochain=c)


def correct(Z, obs, frames, max_degree=8):
    """Solve the coboundary equation and push the solution into Q and S.

    With x_ij = (-1)^{t_j} T'_i xi_ij: Q gains the rank-one rows
    x_m (g_j, -f_j) for off-pivot m, S gains x_{t_i} (f_i; g_i)(g_j, -f_j).
    The corrected set satisfies Z_ik = Z_ij Z_jk exactly on every triple,
    with det and M-transport preserved.  Returns (corrected set, xi)."""
    cover, lb, r = Z.cover, Z.lb, Z.rank
    xi = coboundary_solve(obs.cochain, max_degree=max_degree)
    newZ, newblocks, xmap = {}, {}, {}
    for i, j in Z.pairs:
        ctx = cover.ctx((i, j))
        fr_i, fr_j = frames[i], frames[j]
        t_i = fr_i.t
        s_i = [transport(e, ctx) for e in fr_i.s]
        x = [e.scale(fr_j.sign) for e in
             _tprime_apply(s_i, t_i, fr_i.sign, list(xi.get((i, j))))]
        fi, gi = transport(fr_i.f, ctx), transport(fr_i.g, ctx)
        fj, gj = transport(fr_j.f, ctx), transport(fr_j.g, ctx)
        b = Z.blocks[(i, j)]
        Q, S = b["Q"], b["S"]
        xhat = [x[m] for m in range(r - 1) if m != t_i - 1]
        if xhat and any(not e.is_zero() for e in xhat):
            Q = Q + MatrixL(ctx, [[e * gj, -(e * fj)] for e in xhat])
        xt = x[t_i - 1]
        if not xt.is_zero():
            S = S + MatrixL(ctx, [[(fi * xt) * gj, -((fi * xt) * fj)],
                                  [(gi * xt) * gj, -((gi * xt) * fj)]])
        Znew = from_blocks(ctx, [[b["P"], Q], [b["R"], S]])
        Mi = fr_i.M.transport_to(ctx)
        Mj = fr_j.M.transport_to(ctx)
        if Znew @ Mj != Mi:
            raise GluingFailure(
                f"overlap ({i}, {j}): correction broke the M transport")
        if Znew.det() != lb.h(i, j, ctx):
            raise GluingFailure(
                f"overlap ({i}, {j}): correction broke the determinant")
        newZ[(i, j)] = Znew
        newblocks[(i, j)] = {"P": b["P"], "Q": Q, "R": b["R"], "S": S}
        xmap[(i, j)] = tuple(x)
    corrected = TransitionSet(rank=r, status="corrected", cover=cover, lb=lb,
                              pairs=Z.pairs, Z=newZ, blocks=newblocks,
                              branch=dict(Z.branch), x=xmap)
    for i, j, k in combinations(cover.charts, 3):
        ctx = cover.ctx((i, j, k))
        lhs = corrected.Z[(i, k)].transport_to(ctx)
        rhs = (corrected.Z[(i, j)].transport_to(ctx)
               @ corrected.Z[(j, k)].transport_to(ctx))
        if lhs != rhs:
            raise GluingFailure(
                f"triple ({i}, {j}, {k}): corrected transitions are not a "
                "cocycle")
    return corrected, xi


def compare_bundles(A, B, max_degree=8):
    """Decide whether two builds over identical local data are isomorphic.

    The block deltas dQ = Q' - Q and dS = S' - S must have the rank-one
    coboundary shape; the recovered x chain is pulled back to a degree-1
    cocycle xi, a 0-chain y with delta(y) = xi is solved for, and the chart
    automorphisms N_i = I + (pivot frame of y_i) * (0..0, g_i, -f_i) are
    returned after checking det N_i = 1, N_i M_i = M_i and
    Z_ij N_j = N_i Z'_ij exactly."""
    if A.ambient != B.ambient:
        raise FormMismatch("the two bundles live on different ambient spaces")
    if A.lb.twist != B.lb.twist:
        raise FormMismatch("the two bundles have different determinant twists")
    if A.rank != B.rank:
        raise FormMismatch("the two bundles have different ranks")
    if A.cover.charts != B.cover.charts:
        raise FormMismatch("the two bundles use different covers")
    r = A.rank
    for i in A.cover.charts:
        fa, fb = A.frames[i], B.frames[i]
        if fa.t != fb.t:
            raise FormMismatch(f"chart {i}: different pivot positions")
        try:
            same = fa.f == fb.f and fa.g == fb.g and fa.s == fb.s
        except ValueError:
            same = False        # incompatible chart contexts (units differ)
        if not same:
            raise FormMismatch(
                f"chart {i}: different normalized local data")
    if A.transitions.pairs != B.transitions.pairs:
        raise FormMismatch("the two bundles cover different overlaps")

    data = {}
    for i, j in A.transitions.pairs:
        ctx = A.cover.ctx((i, j))
        fr_i, fr_j = A.frames[i], A.frames[j]
        t_i = fr_i.t
        ba = A.transitions.blocks[(i, j)]
        bb = B.transitions.blocks[(i, j)]
        if ba["P"] != bb["P"] or ba["R"] != bb["R"]:
            raise FormMismatch(
                f"overlap ({i}, {j}): frame blocks differ; the transition "
                "sets are not comparable")
        fi, gi = transport(fr_i.f, ctx), transport(fr_i.g, ctx)
        fj, gj = transport(fr_j.f, ctx), transport(fr_j.g, ctx)
        dQ = bb["Q"] - ba["Q"]
        dS = bb["S"] - ba["S"]
        try:
            xs = [koszul_divide(dQ[m, 0], -dQ[m, 1], fj, gj)
                  for m in range(r - 2)]
            if dS == MatrixL.zeros(ctx, 2, 2):
                xt = LocElem.zero(ctx)
            else:
                a = koszul_divide(dS[1, 0], dS[0, 0], fi, gi)
                bcof = koszul_divide(-dS[1, 1], -dS[0, 1], fi, gi)
                xt = koszul_divide(a, bcof, fj, gj)
        except SerreError:
            raise FormMismatch(
                f"overlap ({i}, {j}): block difference is not of coboundary "
                "shape")
        x = xs[:t_i - 1] + [xt] + xs[t_i - 1:]
        rebuiltQ = MatrixL(ctx, [[e * gj, -(e * fj)] for e in xs])
        rebuiltS = MatrixL(ctx, [[(fi * xt) * gj, -((fi * xt) * fj)],
                                 [(gi * xt) * gj, -((gi * xt) * fj)]])
        if (r > 2 and dQ != rebuiltQ) or dS != rebuiltS:
            raise FormMismatch(
                f"overlap ({i}, {j}): block difference is not of coboundary "
                "shape")
        s_i = [transport(e, ctx) for e in fr_i.s]
        val = tuple(e.scale(fr_j.sign)
                    for e in _tprime_unapply(s_i, t_i, fr_i.sign, x))
        if any(not e.is_zero() for e in val):
            data[(i, j)] = val

    xi = CechCochain(A.cover, A.lb, 1, r - 1, data)
    if not is_cocycle(xi):
        raise NotACocycle("recovered difference cochain is not closed")
    try:
        Y = coboundary_solve(xi, max_degree=max_degree)
    except Obstructed as exc:
        raise H1Obstruction(
            "the difference class is a nonzero degree-1 cohomology class; "
            "the bundles are not isomorphic over these frames",
            component=exc.component, multidegree=exc.multidegree)

    ymap, Nmap = {}, {}
    for i in A.cover.charts:
        fr = A.frames[i]
        ctx = fr.f.ctx
        yvals = [transport(e, ctx) for e in Y.get((i,))]
        y = [e.scale(fr.sign)
             for e in _tprime_apply(list(fr.s), fr.t, fr.sign, yvals)]
        yt = y[fr.t - 1]
        yhat = [y[m] for m in range(r - 1) if m != fr.t - 1]
        f, g = fr.f, fr.g
        one = LocElem.one(ctx)
        K = MatrixL(ctx, [[e * g, -(e * f)] for e in yhat])
        W = MatrixL(ctx, [[one + (f * yt) * g, -((f * yt) * f)],
                          [(g * yt) * g, one - (g * yt) * f]])
        N = from_blocks(ctx, [[MatrixL.identity(ctx, r - 2), K],
                              [MatrixL.zeros(ctx, 2, r - 2), W]])
        if N.det() != one:
            raise FormMismatch(f"chart {i}: automorphism determinant is not 1")
        if N @ fr.M != fr.M:
            raise FormMismatch(f"chart {i}: automorphism moves the sections")
        ymap[i] = tuple(y)
        Nmap[i] = N

    for i, j in A.transitions.pairs:
        ctx = A.cover.ctx((i, j))
        lhs = A.transitions.Z[(i, j)] @ Nmap[j].transport_to(ctx)
        rhs = Nmap[i].transport_to(ctx) @ B.transitions.Z[(i, j)].transport_to(ctx)
        if lhs != rhs:
            raise FormMismatch(
                f"overlap ({i}, {j}): automorphisms fail to intertwine the "
                "transition sets")
    return IsomorphismData(y=ymap, N=Nmap, xi=xi)


def _sections_table(doc):
    """Accept sections either as {chart: [values]} or [{chart, values}]."""
    if doc is None:
        return {}
    if isinstance(doc, dict):
        return doc
    if isinstance(doc, list):
        table = {}
        for entry in doc:
            if (not isinstance(entry, dict) or "chart" not in entry
                    or "values" not in entry):
                raise ShapeViolation(
                    "each sections entry needs 'chart' and 'values'")
            key = entry["chart"]
            if key in table or str(key) in table:
                raise ShapeViolation(f"duplicate sections entry for {key}")
            table[key] = entry["values"]
        return table
    raise ShapeViolation("sections must be a table or a list of entries")


def build_bundle(doc, lift_order=None, max_degree=None):
    """Run the whole pipeline on a parsed input document.

    Document fields: ambient {kind, dim}, line_bundle {twist}, rank,
    subscheme {mode, ...}, sections, options {lift_order, max_degree}.
    Returns a BundleResult carrying the raw and corrected transition sets,
    the obstruction data, and the verification report.
    """
    if not isinstance(doc, dict):
        raise ShapeViolation("input document must be a table")
    amb = doc.get("ambient")
    if not isinstance(amb, dict) or "kind" not in amb or "dim" not in amb:
        raise ShapeViolation("ambient needs 'kind' and 'dim'")
    try:
        ambient = AmbientSpec(str(amb["kind"]), int(amb["dim"]))
    except (TypeError, ValueError):
        raise ShapeViolation("ambient dim must be an integer")
    lbdoc = doc.get("line_bundle")
    if not isinstance(lbdoc, dict) or "twist" not in lbdoc:
        raise ShapeViolation("line_bundle needs a 'twist'")
    try:
        twist = int(lbdoc["twist"])
    except (TypeError, ValueError):
        raise ShapeViolation("line_bundle twist must be an integer")
    try:
        rank = int(doc.get("rank"))
    except (TypeError, ValueError):
        raise ShapeViolation("rank must be an integer")
    if rank < 2:
        raise ShapeViolation("rank must be at least 2")
    options = doc.get("options") or {}
    if not isinstance(options, dict):
        raise ShapeViolation("options must be a table")
    if lift_order is None:
        lift_order = options.get("lift_order", "fg")
    if lift_order not in ("fg", "gf"):
        raise ShapeViolation("lift_order must be 'fg' or 'gf'")
    if max_degree is None:
        max_degree = options.get("max_degree", 8)
    try:
        max_degree = int(max_degree)
    except (TypeError, ValueError):
        raise ShapeViolation("max_degree must be an integer")
    if max_degree < 0:
        raise ShapeViolation("max_degree must be non-negative")

    cover = standard_cover(ambient)
    lb = LineBundleData(ambient, twist)
    sub = load_subscheme(cover, doc.get("subscheme"))
    secs = load_sections(cover, lb, sub, _sections_table(doc.get("sections")),
                         rank)

    normalize_generators(sub, secs)
    adjust_glue(sub, secs, lb, lift_order=lift_order)
    frames = build_frames(sub, secs)
    raw = build_Z(frames, sub, secs, lb, lift_order=lift_order)
    obs = obstruction(raw, frames)
    corrected, xi = correct(raw, obs, frames, max_degree=max_degree)

    if ambient.kind == "projective":
        h1 = (rank - 1) * cohomology_dim(ambient, -twist, 1)
        h2 = (rank - 1) * cohomology_dim(ambient, -twist, 2)
    else:
        h1 = h2 = 0
    meta = {
        "pivots": dict(secs.t),
        "tiers": dict(secs.tier),
        "branches": {f"{i},{j}": raw.branch[(i, j)] for i, j in raw.pairs},
        "lift_order": lift_order,
        "max_degree": max_degree,
        "h1_dim": h1,
        "h2_dim": h2,
        "unique": h1 == 0,
    }
    result = BundleResult(ambient=ambient, cover=cover, lb=lb, rank=rank,
                          sub=sub, secs=secs, frames=frames,
                          transitions=corrected, raw=raw, obstruction=obs,
                          xi=xi, meta=meta)
    from .verify import run_all
    result.report = run_all(result)
    return result
