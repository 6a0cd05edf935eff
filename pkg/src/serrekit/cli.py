"""Command-line front end.

Four subcommands: `build` runs the whole pipeline on an input document and
writes a bundle document; `verify` re-runs every check on a previously written
bundle document; `cohomology` prints an exact line-bundle cohomology dimension;
`compare` decides whether two bundle documents are isomorphic via chart
automorphisms.

Output is deterministic: JSON with sorted keys (default) or a plain-text
rendering (`--format text`).  Exit codes: 0 success, 1 precondition/schema or
verification failure, 2 exact obstruction, 3 inconclusive search.
"""

from __future__ import annotations

import argparse
import json
import sys
from itertools import combinations

from .algebra import LocElem, MatrixL, format_poly, parse_poly
from .cech import CechCochain, cohomology_dim
from .cover import (AmbientSpec, LineBundleData, SectionData, SubschemeData,
                    standard_cover)
from .errors import (FormMismatch, H1Obstruction, Inconclusive, Obstructed,
                     SerreError, ShapeViolation)
from .serre import (BundleResult, FrameData, ObstructionData, TransitionSet,
                    build_bundle, compare_bundles)
from .verify import run_all

# Stage tags on exceptions name pipeline phases; the CLI reports them as the
# operation a caller would recognize.
_STAGE_LABEL = {
    "parse": "parse",
    "subscheme": "load_subscheme",
    "sections": "load_sections",
    "glue": "build_Z",
    "cech": "cech",
    "correction": "correct",
    "compare": "compare",
    "general": "general",
}

_SCHEMA = "serre-bundle/1"


def _fail(exc):
    label = _STAGE_LABEL.get(getattr(exc, "stage", "general"), "general")
    print(f"error[{label}]: {exc}", file=sys.stderr)


# -- document encoding --------------------------------------------------------


def _elem_doc(e):
    return {"num": e.ctx.format(e.num),
            "den": {k: e.den[k] for k in sorted(e.den)}}


def _vec_doc(vec):
    return [_elem_doc(e) for e in vec]


def _mat_doc(A):
    rows, cols = A.shape
    return [[_elem_doc(A[i, j]) for j in range(cols)] for i in range(rows)]


def _cochain_doc(c):
    return [{"key": list(key), "values": _vec_doc(c.data[key])}
            for key in sorted(c.data)]


def bundle_doc(bundle):
    """Serialize a BundleResult into a plain-JSON document."""
    cover = bundle.cover
    names = cover.hom_names()
    charts = {}
    for i in cover.charts:
        fr = bundle.frames[i]
        charts[str(i)] = {
            "meets": bundle.sub.meets_Y[i],
            "t": fr.t,
            "tier": bundle.secs.tier[i],
            "sign": fr.sign,
            "f": _elem_doc(fr.f),
            "g": _elem_doc(fr.g),
            "s": _vec_doc(fr.s),
            "M": _mat_doc(fr.M),
        }
    overlaps = {}
    for (i, j) in bundle.transitions.pairs:
        overlaps[f"{i},{j}"] = {
            "empty": bundle.sub.empty_overlap.get((i, j), False),
            "branch": bundle.transitions.branch[(i, j)],
            "raw": _mat_doc(bundle.raw.Z[(i, j)]),
            "corrected": _mat_doc(bundle.transitions.Z[(i, j)]),
        }
    meta = dict(bundle.meta)
    meta["pivots"] = {str(k): v for k, v in bundle.meta["pivots"].items()}
    meta["tiers"] = {str(k): v for k, v in bundle.meta["tiers"].items()}
    return {
        "schema": _SCHEMA,
        "ambient": {"kind": bundle.ambient.kind, "dim": bundle.ambient.dim},
        "line_bundle": {"twist": bundle.lb.twist},
        "rank": bundle.rank,
        "mode": bundle.sub.mode,
        "units": {str(u.chart): {"form": format_poly(u.form, names),
                                 "degree": u.degree}
                  for u in cover.registered_units()},
        "charts": charts,
        "overlaps": overlaps,
        "obstruction": _cochain_doc(bundle.obstruction.cochain),
        "correction": _cochain_doc(bundle.xi),
        "meta": meta,
        "verification": bundle.report.to_doc() if bundle.report else [],
    }


# -- document decoding ---------------------------------------------------------


def _need(doc, key, kind, where):
    if not isinstance(doc, dict) or key not in doc:
        raise ShapeViolation(f"{where}: missing key {key!r}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise ShapeViolation(f"{where}: key {key!r} has the wrong type")
    return val


def _elem_load(ctx, doc, where):
    num = _need(doc, "num", str, where)
    den = _need(doc, "den", dict, where)
    try:
        parsed = ctx.parse(num)
        return LocElem(ctx, parsed, {str(k): int(v) for k, v in den.items()})
    except (ValueError, KeyError) as exc:
        raise ShapeViolation(f"{where}: {exc}") from exc


def _vec_load(ctx, doc, width, where):
    if not isinstance(doc, list) or len(doc) != width:
        raise ShapeViolation(f"{where}: expected {width} entries")
    return tuple(_elem_load(ctx, d, where) for d in doc)


def _mat_load(ctx, doc, shape, where):
    rows, cols = shape
    if not isinstance(doc, list) or len(doc) != rows:
        raise ShapeViolation(f"{where}: expected {rows} matrix rows")
    data = []
    for row in doc:
        if not isinstance(row, list) or len(row) != cols:
            raise ShapeViolation(f"{where}: expected {cols} matrix columns")
        data.append([_elem_load(ctx, d, where) for d in row])
    return MatrixL(ctx, data)


def _cochain_load(cover, lb, degree, width, doc, where):
    if not isinstance(doc, list):
        raise ShapeViolation(f"{where}: expected a list of components")
    data = {}
    for entry in doc:
        key = tuple(int(i) for i in _need(entry, "key", list, where))
        ctx = cover.ctx(key)
        data[key] = _vec_load(ctx, _need(entry, "values", list, where),
                              width, f"{where} {key}")
    return CechCochain(cover, lb, degree, width, data)


def _blocks_of(Zm, r):
    ctx = Zm.ctx
    rng = range(r - 2)
    tail = range(r - 2, r)
    return {
        "P": MatrixL(ctx, [[Zm[a, b] for b in rng] for a in rng]),
        "Q": MatrixL(ctx, [[Zm[a, b] for b in tail] for a in rng]),
        "R": MatrixL(ctx, [[Zm[a, b] for b in rng] for a in tail]),
        "S": MatrixL(ctx, [[Zm[a, b] for b in tail] for a in tail]),
    }


def load_bundle(doc):
    """Rebuild a BundleResult from its serialized document.

    Only schema shape is enforced here; the mathematical identities are the
    verify suite's job, so a hand-edited entry loads fine and then fails its
    named check.
    """
    if _need(doc, "schema", str, "document") != _SCHEMA:
        raise ShapeViolation("document: unknown schema tag")
    amb = _need(doc, "ambient", dict, "document")
    ambient = AmbientSpec(_need(amb, "kind", str, "ambient"),
                          int(_need(amb, "dim", int, "ambient")))
    cover = standard_cover(ambient)
    names = cover.hom_names()
    for chart_key, u in sorted(_need(doc, "units", dict, "document").items()):
        try:
            form = parse_poly(_need(u, "form", str, "units"), names)
        except ValueError as exc:
            raise ShapeViolation(f"units: {exc}") from exc
        cover.restore_unit(int(chart_key), form,
                           int(_need(u, "degree", int, "units")))
    twist = int(_need(_need(doc, "line_bundle", dict, "document"),
                      "twist", int, "line_bundle"))
    lb = LineBundleData(ambient, twist)
    r = int(_need(doc, "rank", int, "document"))
    if r < 2:
        raise ShapeViolation("document: rank must be >= 2")

    charts_doc = _need(doc, "charts", dict, "document")
    if sorted(int(k) for k in charts_doc) != list(cover.charts):
        raise ShapeViolation("document: chart set does not match the cover")
    frames, pairs, meets, sections, t_map, tier_map = {}, {}, {}, {}, {}, {}
    for key, ch in charts_doc.items():
        i = int(key)
        ctx = cover.chart_ctx(i)
        where = f"chart {i}"
        t = int(_need(ch, "t", int, where))
        if not 1 <= t <= r - 1:
            raise ShapeViolation(f"{where}: pivot position out of range")
        sign = int(_need(ch, "sign", int, where))
        if sign != (-1 if t % 2 else 1):
            raise ShapeViolation(f"{where}: sign does not match pivot parity")
        f = _elem_load(ctx, _need(ch, "f", dict, where), where)
        g = _elem_load(ctx, _need(ch, "g", dict, where), where)
        s = _vec_load(ctx, _need(ch, "s", list, where), r - 1, where)
        M = _mat_load(ctx, _need(ch, "M", list, where), (r, r - 1), where)
        one = LocElem.one(ctx)
        zero = LocElem.zero(ctx)
        tp = [[one if a == b else zero for b in range(r - 1)]
              for a in range(r - 1)]
        for m in range(r - 1):
            if m != t - 1:
                tp[m][t - 1] = s[m].scale(-sign)
        tpp = [[zero] * (r - 1) for _ in range(2)]
        tpp[0][t - 1] = f
        tpp[1][t - 1] = g
        frames[i] = FrameData(chart=i, t=t, sign=sign, f=f, g=g, s=s,
                              Tp=MatrixL(ctx, tp), Tpp=MatrixL(ctx, tpp), M=M)
        pairs[i] = (f, g)
        meets[i] = bool(_need(ch, "meets", bool, where))
        sections[i] = s
        t_map[i] = t
        tier_map[i] = int(_need(ch, "tier", int, where))

    overlaps_doc = _need(doc, "overlaps", dict, "document")
    sorted_pairs = tuple(combinations(cover.charts, 2))
    if sorted(overlaps_doc) != sorted(f"{i},{j}" for i, j in sorted_pairs):
        raise ShapeViolation("document: overlap set does not match the cover")
    Z_raw, Z_cor, blocks_raw, blocks_cor, branch, empty = {}, {}, {}, {}, {}, {}
    for (i, j) in sorted_pairs:
        ov = overlaps_doc[f"{i},{j}"]
        ctx = cover.ctx((i, j))
        where = f"overlap ({i}, {j})"
        br = _need(ov, "branch", str, where)
        if br not in ("unit", "split"):
            raise ShapeViolation(f"{where}: unknown branch {br!r}")
        branch[(i, j)] = br
        empty[(i, j)] = bool(_need(ov, "empty", bool, where))
        Z_raw[(i, j)] = _mat_load(ctx, _need(ov, "raw", list, where),
                                  (r, r), where)
        Z_cor[(i, j)] = _mat_load(ctx, _need(ov, "corrected", list, where),
                                  (r, r), where)
        blocks_raw[(i, j)] = _blocks_of(Z_raw[(i, j)], r)
        blocks_cor[(i, j)] = _blocks_of(Z_cor[(i, j)], r)

    sub = SubschemeData(cover, str(_need(doc, "mode", str, "document")),
                        pairs, meets, {}, empty)
    secs = SectionData(sections, t_map, tier_map, r)
    raw = TransitionSet(r, "raw", cover, lb, sorted_pairs, Z_raw,
                        blocks_raw, branch)
    cor = TransitionSet(r, "corrected", cover, lb, sorted_pairs, Z_cor,
                        blocks_cor, branch)
    obs_cochain = _cochain_load(cover, lb, 2, r - 1,
                                _need(doc, "obstruction", list, "document"),
                                "obstruction")
    xi = _cochain_load(cover, lb, 1, r - 1,
                       _need(doc, "correction", list, "document"),
                       "correction")
    meta = dict(_need(doc, "meta", dict, "document"))
    for field in ("pivots", "tiers"):
        if isinstance(meta.get(field), dict):
            meta[field] = {int(k): v for k, v in meta[field].items()}
    obs = ObstructionData(tuple(combinations(cover.charts, 3)), {}, {},
                          obs_cochain)
    return BundleResult(ambient=ambient, cover=cover, lb=lb, rank=r, sub=sub,
                        secs=secs, frames=frames, transitions=cor, raw=raw,
                        obstruction=obs, xi=xi, meta=meta)


def iso_doc(iso, cover):
    return {
        "schema": "serre-isomorphism/1",
        "y": {str(i): _vec_doc(iso.y[i]) for i in sorted(iso.y)},
        "N": {str(i): _mat_doc(iso.N[i]) for i in sorted(iso.N)},
        "xi": _cochain_doc(iso.xi),
    }


# -- text rendering ------------------------------------------------------------


def _fmt_elem(ed):
    den = ed["den"]
    if not den:
        return ed["num"]
    ds = " ".join(k if den[k] == 1 else f"{k}^{den[k]}" for k in sorted(den))
    return f"({ed['num']}) / {ds}"


def _fmt_matrix(md, indent):
    return [indent + "[" + ", ".join(_fmt_elem(e) for e in row) + "]"
            for row in md]


def _text_bundle(doc):
    amb = doc["ambient"]
    lines = [f"ambient: {amb['kind']} dim {amb['dim']},"
             f" twist {doc['line_bundle']['twist']}, rank {doc['rank']}"]
    for key in sorted(doc["charts"], key=int):
        ch = doc["charts"][key]
        lines.append(f"chart {key}: meets={ch['meets']} t={ch['t']}"
                     f" sign={ch['sign']:+d}")
        lines.append(f"  f = {_fmt_elem(ch['f'])}")
        lines.append(f"  g = {_fmt_elem(ch['g'])}")
        lines.append("  s = (" + ", ".join(_fmt_elem(e) for e in ch["s"]) + ")")
    for key in sorted(doc["overlaps"], key=lambda s: tuple(map(int, s.split(",")))):
        ov = doc["overlaps"][key]
        lines.append(f"overlap ({key}): branch={ov['branch']}"
                     f" empty={ov['empty']}")
        lines.append("  raw:")
        lines += _fmt_matrix(ov["raw"], "    ")
        lines.append("  corrected:")
        lines += _fmt_matrix(ov["corrected"], "    ")
    lines.append("obstruction components: "
                 + (str(len(doc["obstruction"])) if doc["obstruction"]
                    else "none"))
    for entry in doc["obstruction"]:
        lines.append("  (" + ", ".join(map(str, entry["key"])) + "): ("
                     + ", ".join(_fmt_elem(e) for e in entry["values"]) + ")")
    lines += _text_report(doc["verification"])
    return lines


def _text_report(entries):
    lines = []
    passed = sum(1 for e in entries if e["passed"])
    lines.append(f"verification: {passed}/{len(entries)} checks passed")
    for e in entries:
        mark = "PASS" if e["passed"] else "FAIL"
        lines.append(f"  {mark} {e['check']} [{e['scope']}]")
    return lines


def _text_iso(doc):
    lines = ["isomorphism found"]
    for key in sorted(doc["N"], key=int):
        lines.append(f"N_{key}:")
        lines += _fmt_matrix(doc["N"][key], "  ")
    return lines


def _emit(payload, args, text_lines=None):
    if args.format == "text" and text_lines is not None:
        out = "\n".join(text_lines) + "\n"
    else:
        out = json.dumps(payload, sort_keys=True, indent=2,
                         ensure_ascii=False) + "\n"
    dest = getattr(args, "output", None)
    if dest and dest != "-":
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _read_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ShapeViolation(f"cannot read input document: {exc}") from exc


# -- commands ------------------------------------------------------------------


def cmd_build(args):
    try:
        doc = _read_json(args.input)
        bundle = build_bundle(doc, lift_order=args.lift_order,
                              max_degree=args.max_degree)
    except Obstructed as exc:
        payload = {
            "error": {
                "type": "Obstructed",
                "stage": "correct",
                "message": str(exc),
                "component": exc.component,
                "multidegree": list(exc.multidegree),
                "witness": exc.witness,
            }
        }
        _emit(payload, args, [f"obstructed: {exc}",
                              f"  component: {exc.component}",
                              f"  multidegree: {exc.multidegree}"])
        _fail(exc)
        return 2
    except Inconclusive as exc:
        payload = {"error": {"type": "Inconclusive", "stage": "correct",
                             "message": str(exc)}}
        _emit(payload, args, [f"inconclusive: {exc}"])
        _fail(exc)
        return 3
    except SerreError as exc:
        _fail(exc)
        return 1
    doc_out = bundle_doc(bundle)
    _emit(doc_out, args, _text_bundle(doc_out))
    if not bundle.report.ok:
        first = bundle.report.failures()[0]
        print(f"error[verify]: check failed: {first.check} [{first.scope}]",
              file=sys.stderr)
        return 1
    return 0


def cmd_verify(args):
    try:
        bundle = load_bundle(_read_json(args.input))
        report = run_all(bundle)
    except SerreError as exc:
        _fail(exc)
        return 1
    entries = report.to_doc()
    _emit(entries, args, _text_report(entries))
    if report.ok:
        return 0
    first = report.failures()[0]
    print(f"error[verify]: check failed: {first.check} [{first.scope}]",
          file=sys.stderr)
    return 1


def cmd_cohomology(args):
    spec = args.ambient.strip()
    kind = spec[:1].upper()
    if kind != "P" or not spec[1:].isdigit():
        print("error[parse]: ambient must be P<n> (projective space)",
              file=sys.stderr)
        return 1
    try:
        ambient = AmbientSpec("projective", int(spec[1:]))
        dim = cohomology_dim(ambient, args.twist, args.degree)
    except SerreError as exc:
        _fail(exc)
        return 1
    sys.stdout.write(f"{dim}\n")
    return 0


def cmd_compare(args):
    try:
        a = load_bundle(_read_json(args.a))
        b = load_bundle(_read_json(args.b))
    except SerreError as exc:
        _fail(exc)
        return 1
    if a.ambient != b.ambient:
        print("error[compare]: documents live on different ambient spaces",
              file=sys.stderr)
        return 1
    try:
        iso = compare_bundles(a, b, max_degree=args.max_degree)
    except FormMismatch as exc:
        _fail(exc)
        return 2
    except H1Obstruction as exc:
        _fail(exc)
        print(f"  component {exc.component}, multidegree {exc.multidegree}",
              file=sys.stderr)
        return 1
    except SerreError as exc:
        _fail(exc)
        return 1
    payload = iso_doc(iso, a.cover)
    _emit(payload, args, _text_iso(payload))
    return 0


def _parser():
    p = argparse.ArgumentParser(
        prog="serrekit",
        description="Exact construction of rank-r bundles from "
                    "codimension-two data over the standard cover.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="run the full pipeline on an input "
                                     "document and write the bundle document")
    b.add_argument("input", help="input JSON document path, or - for stdin")
    b.add_argument("-o", "--output", default=None, help="output path "
                   "(default stdout)")
    b.add_argument("--format", choices=("json", "text"), default="json")
    b.add_argument("--lift-order", choices=("fg", "gf"), default=None,
                   help="cofactor order fed to ideal lifts")
    b.add_argument("--max-degree", type=int, default=None,
                   help="bound for the fallback coboundary search (default 8)")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="re-run all checks on a bundle document")
    v.add_argument("input", help="bundle JSON document path, or - for stdin")
    v.add_argument("-o", "--output", default=None)
    v.add_argument("--format", choices=("json", "text"), default="json")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("cohomology",
                       help="print dim H^q(P^n, O(m)) exactly")
    c.add_argument("--ambient", required=True, metavar="Pn")
    c.add_argument("--twist", required=True, type=int, metavar="m")
    c.add_argument("--degree", required=True, type=int, metavar="q")
    c.set_defaults(func=cmd_cohomology)

    m = sub.add_parser("compare", help="decide isomorphism of two bundle "
                                       "documents over the same input data")
    m.add_argument("a", help="first bundle document")
    m.add_argument("b", help="second bundle document")
    m.add_argument("-o", "--output", default=None)
    m.add_argument("--format", choices=("json", "text"), default="json")
    m.add_argument("--max-degree", type=int, default=8)
    m.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
