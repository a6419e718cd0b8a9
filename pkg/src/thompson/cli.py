"""Command-line surface for the whole pipeline.

Subcommands: element (eval|compose|order|small|support), ball
(explore|info|export-dot), ends (report|amplify|traces), ai
(exact|ball|cut), fa (t-cert|v-cert|verify), tree (suite|classify).

Exit codes: 0 success (including verified certificates); 2 certificate
failure or property violation; 3 resource limit; 64 usage error.

Dyadic inputs are "p/q" with q a power of two, "p/2^n", or an exact
decimal; anything else is rejected (no floats anywhere).  Structured
output is a single JSON document with a format-version field; identical
configuration (including the seed) yields byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .dyadic import Dyadic, StdInterval
from . import elements
from .elements import CellMap, standard_generator, identity
from . import cosetgraph
from .cosetgraph import (
    ResourceLimit,
    explore,
    explore_cached,
    load_ball,
    state_of,
)
from . import ends as ends_mod
from .ends import (
    CompactSet,
    ends_lower_bound_report,
    end_traces,
    sageev_cut,
    saturate,
    symmetric_difference_ball,
    symmetric_difference_exact,
)
from . import facert
from . import treeact

FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_RESOURCE = 3
EXIT_USAGE = 64


def _parse_word(tokens) -> CellMap:
    """Product of named generators, left to right: "x0 pi1^-1 x1"."""
    if isinstance(tokens, str):
        tokens = tokens.replace("*", " ").split()
    g = identity()
    for tok in tokens:
        name, _, inv = tok.partition("^")
        base = standard_generator(name)
        if inv:
            if inv != "-1":
                raise ValueError(f"bad exponent in {tok!r}")
            base = base.inverse()
        g = g.compose(base)
    return g


def _emit(args, doc: dict, text_lines) -> None:
    if getattr(args, "format", "text") == "structured":
        doc = {"format_version": FORMAT_VERSION, **doc}
        print(json.dumps(doc, sort_keys=True, indent=1))
    else:
        for line in text_lines:
            print(line)


def _cache_dir(args) -> str | None:
    return args.cache_dir or os.environ.get("THOMPSON_CACHE_DIR")


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_element(args) -> int:
    if args.action == "eval":
        g = _parse_word(args.name or args.word)
        x = Dyadic.parse(args.at)
        y = g.evaluate(x)
        _emit(args, {"command": "element eval", "result": str(y)}, [str(y)])
        return EXIT_OK
    g = _parse_word(args.word)
    if args.action == "compose":
        _emit(args, {"command": "element compose", "cells": g.to_text(),
                     "class": g.group_class},
              [g.to_text(), f"class {g.group_class}"])
        return EXIT_OK
    if args.action == "order":
        n = g.order_up_to(args.bound)
        txt = str(n) if n is not None else f"order > {args.bound}"
        _emit(args, {"command": "element order", "order": n, "bound": args.bound}, [txt])
        return EXIT_OK
    if args.action == "small":
        w = g.is_small()
        txt = f"small, identity on {w}" if w is not None else "not small"
        _emit(args, {"command": "element small",
                     "witness": w.serialize() if w else None}, [txt])
        return EXIT_OK
    if args.action == "support":
        supp = g.support()
        txt = " ".join(str(s) for s in supp) if supp else "empty"
        _emit(args, {"command": "element support",
                     "support": [s.serialize() for s in supp]}, [txt])
        return EXIT_OK
    raise AssertionError(args.action)


def _get_ball(args):
    if getattr(args, "file", None):
        return load_ball(args.file)
    return explore_cached(args.group, args.radius, _cache_dir(args),
                          budget=args.budget, workers=args.threads)


def _cmd_ball(args) -> int:
    ball = _get_ball(args)
    if args.action == "explore":
        cache = _cache_dir(args)
        lines = [
            f"group {ball.group} radius {ball.radius}: {len(ball)} states, "
            f"{len(ball.edges)} edges",
        ]
        if cache:
            lines.append(f"cached under {cache}")
        _emit(args, {"command": "ball explore", "group": ball.group,
                     "radius": ball.radius, "vertices": len(ball),
                     "edges": len(ball.edges)}, lines)
        return EXIT_OK
    if args.action == "info":
        from collections import Counter

        shells = Counter(ball.depth)
        affine = sum(1 for i in range(len(ball))
                     if ends_mod.is_affine_state(ball.state(i)))
        doc = {
            "command": "ball info",
            "group": ball.group,
            "radius": ball.radius,
            "vertices": len(ball),
            "edges": len(ball.edges),
            "shells": [shells[d] for d in range(ball.radius + 1)],
            "affine_states": affine,
        }
        _emit(args, doc, [
            f"group {ball.group} radius {ball.radius}",
            f"vertices {len(ball)} edges {len(ball.edges)}",
            f"shells {[shells[d] for d in range(ball.radius + 1)]}",
            f"affine-part states {affine}",
        ])
        return EXIT_OK
    if args.action == "export-dot":
        dot = ball.to_dot()
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(dot + "\n")
            print(f"wrote {args.output}")
        else:
            print(dot)
        return EXIT_OK
    raise AssertionError(args.action)


def _cmd_ends(args) -> int:
    if args.action == "report":
        schedule = [int(r) for r in args.schedule.split(",")]
        report = ends_lower_bound_report(args.group, schedule, budget=args.budget)
        doc = {"command": "ends report", **report.to_dict()}
        lines = [f"pair ({args.group}, {args.group}_[0,1/2)): "
                 f"compact set '{report.k_description}' ({report.k_size} states)"]
        for e in report.entries:
            lines.append(
                f"  radius {e.radius}: ball {e.ball_size}, "
                f"frontier-touching {e.ft_count}, closed {e.closed_count}"
                + (f", persistent {e.persistent_with_prev}" if e.persistent_with_prev
                   is not None else "")
            )
        lines.append(
            f"candidate lower bound: ends >= {report.candidate_bound} "
            f"(persistent over radii {report.persistent_radii})"
        )
        if report.amplification and report.amplification.certified:
            lines.append(
                f"doubling via translate '{report.amplifier}': "
                f">= {report.amplification.certified_bound} certified "
                f"({report.amplification.report.frontier_touching_count} components seen)"
            )
        lines.append(report.note)
        _emit(args, doc, lines)
        ok = report.candidate_bound >= 3
        return EXIT_OK if ok else EXIT_VIOLATION
    ball = _get_ball(args)
    g = ball.to_graph()
    K = saturate(g, CompactSet(frozenset(
        ball.states[i] for i in range(len(ball)) if ball.depth[i] <= args.k_depth)))
    if args.action == "amplify":
        nelt = _parse_word(args.translate) if args.translate else None
        if nelt is None:
            from .cosetgraph import normalizer_elements

            nelt = normalizer_elements(ball.group)[0][1] ** 2
        try:
            res = ends_mod.amplify_coset(ball, K, nelt)
        except ends_mod.PreconditionUnverifiable as exc:
            print(f"amplification unverifiable: {exc}")
            return EXIT_VIOLATION
        lines = [
            f"base components {res.base_count}, translated {res.translate_count}",
            f"union complement: {res.report.frontier_touching_count} frontier-touching "
            f"(bound {res.certified_bound} {'certified' if res.certified else 'NOT certified'})",
        ]
        _emit(args, {"command": "ends amplify", "base": res.base_count,
                     "bound": res.certified_bound, "certified": res.certified,
                     "observed": res.report.frontier_touching_count}, lines)
        return EXIT_OK if res.certified else EXIT_VIOLATION
    if args.action == "traces":
        schedule = [int(r) for r in args.schedule.split(",")]
        balls = [ball.sub_ball(r).to_graph() for r in schedule]
        chains = end_traces(balls, K)
        lines = [f"{len(chains)} chains over schedule {schedule}"]
        for c in chains:
            lines.append(f"  radii {c.first_radius}..{c.last_radius} "
                         f"(persistence {c.persistence})")
        _emit(args, {"command": "ends traces",
                     "chains": [{"first": c.first_radius, "last": c.last_radius}
                                for c in chains]}, lines)
        return EXIT_OK
    raise AssertionError(args.action)


def _cmd_ai(args) -> int:
    if args.action == "exact":
        v = _parse_word(args.gen)
        n = symmetric_difference_exact(v)
        _emit(args, {"command": "ai exact", "generator": args.gen, "value": n}, [str(n)])
        return EXIT_OK
    ball = _get_ball(args)
    if args.action == "ball":
        v = _parse_word(args.gen)
        ledger = symmetric_difference_ball(ball, v, args.gen)
        lines = [
            f"flips in radius-{ball.radius} ball: {ledger.total} "
            f"(stabilization radius {ledger.stabilization_radius})",
        ]
        exact = symmetric_difference_exact(v)
        lines.append(f"closed form: {exact} "
                     f"({'agrees' if exact == ledger.total else 'ball too small'})")
        _emit(args, {"command": "ai ball", "generator": args.gen,
                     "flips": ledger.total,
                     "stabilization_radius": ledger.stabilization_radius,
                     "exact": exact}, lines)
        return EXIT_OK
    if args.action == "cut":
        rep = sageev_cut(ball)
        lines = [
            f"cut edges {len(rep.cut_edges)}; separation "
            f"{'verified' if rep.separated else 'FAILED'}",
            f"affine side {rep.side_a_count} states, complement {rep.side_c_count}",
        ]
        _emit(args, {"command": "ai cut", "cut_edges": len(rep.cut_edges),
                     "separated": rep.separated, "side_a": rep.side_a_count,
                     "side_c": rep.side_c_count}, lines)
        return EXIT_OK if rep.separated else EXIT_VIOLATION
    raise AssertionError(args.action)


def _cmd_fa(args) -> int:
    if args.action in ("t-cert", "v-cert"):
        try:
            cert = facert.t_certificate() if args.action == "t-cert" else facert.v_certificate()
        except facert.CertificateFailure as exc:
            print(f"CERTIFICATE FAILED: {exc}")
            return EXIT_VIOLATION
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(facert.certificate_to_text(cert) + "\n")
        for line in facert.audit_lines(cert):
            print(line)
        print("CERTIFICATE VERIFIED (Serre's fixed-point criterion: generators "
              "and pairwise products all elliptic)")
        return EXIT_OK
    if args.action == "verify":
        with open(args.certificate) as fh:
            text = fh.read()
        try:
            cert = facert.certificate_from_text(text)
            checks = facert.verify_certificate(cert)
        except facert.CertificateFailure as exc:
            print(f"CERTIFICATE FAILED: {exc}")
            return EXIT_VIOLATION
        print(f"CERTIFICATE VERIFIED ({checks} checks recomputed)")
        return EXIT_OK
    raise AssertionError(args.action)


def _cmd_tree(args) -> int:
    if args.action == "suite":
        L = args.radius or (4 * args.max_syllables + 2)
        ball = treeact.build_tree_ball(L)
        rep = treeact.tree_lemma_suite(ball, args.max_syllables)
        lines = [
            f"tree ball L={L}: {len(ball)} vertices",
            f"{rep.elements} elements: {rep.elliptic} elliptic, {rep.hyperbolic} hyperbolic",
            f"disjoint-fix pairs checked: {rep.pairs_disjoint_fix_checked}",
            f"stabilized-fix pairs checked: {rep.pairs_stabilized_fix_checked}",
            f"violations: {len(rep.violations)}",
        ]
        lines.extend(f"  {v}" for v in rep.violations)
        _emit(args, {"command": "tree suite", "elements": rep.elements,
                     "elliptic": rep.elliptic, "hyperbolic": rep.hyperbolic,
                     "violations": list(rep.violations)}, lines)
        return EXIT_OK if rep.ok else EXIT_VIOLATION
    if args.action == "classify":
        w = treeact.normal_form(args.word)
        L = args.radius or (2 * treeact.syllable_length(w) + 2)
        ball = treeact.build_tree_ball(L)
        cls = treeact.classify_isometry(w, ball)
        if isinstance(cls, treeact.Elliptic):
            txt = f"elliptic, fixes {cls.fixed_vertex}"
            doc = {"type": "elliptic", "fixed": list(cls.fixed_vertex)}
        elif isinstance(cls, treeact.Hyperbolic):
            seg = ", ".join(f"{w or 'e'}{s}" for w, s in cls.axis_segment[:8])
            txt = (f"hyperbolic, translation length {cls.translation_length}; "
                   f"axis segment: {seg} ...")
            doc = {"type": "hyperbolic", "translation_length": cls.translation_length}
        else:
            txt = f"unresolved: {cls.reason}"
            doc = {"type": "unresolved", "reason": cls.reason}
        _emit(args, {"command": "tree classify", "word": w, **doc}, [txt])
        return EXIT_OK
    raise AssertionError(args.action)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_ball_opts(p, with_group=True):
    if with_group:
        p.add_argument("--group", choices=("F", "T", "V"), default="V")
    p.add_argument("--radius", type=int, default=4)
    p.add_argument("--budget", type=int, default=cosetgraph.DEFAULT_BUDGET)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--file", default=None, help="load a saved ball instead of exploring")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="thompson",
        description="Exact computations in Thompson's groups F, T, V: "
        "element algebra, coset-graph balls, relative-ends evidence, "
        "almost-invariance counts and fixed-point certificates.",
    )
    ap.add_argument("--format", choices=("text", "structured"), default="text")
    ap.add_argument("--seed", type=int, default=0,
                    help="seed for any randomized suite (reports are deterministic)")
    sub = ap.add_subparsers(dest="command", required=True)

    el = sub.add_parser("element", help="element algebra")
    el.add_argument("action", choices=("eval", "compose", "order", "small", "support"))
    el.add_argument("--name", help="single named generator (for eval)")
    el.add_argument("--word", nargs="+", help="word in x0 x1 pi0 pi1 (^-1 allowed)")
    el.add_argument("--at", help="dyadic point for eval")
    el.add_argument("--bound", type=int, default=facert.ORDER_BOUND)
    el.set_defaults(func=_cmd_element)

    bl = sub.add_parser("ball", help="coset-graph balls")
    bl.add_argument("action", choices=("explore", "info", "export-dot"))
    _add_ball_opts(bl)
    bl.add_argument("-o", "--output", default=None)
    bl.set_defaults(func=_cmd_ball)

    en = sub.add_parser("ends", help="relative-ends evidence")
    en.add_argument("action", choices=("report", "amplify", "traces"))
    _add_ball_opts(en)
    en.add_argument("--schedule", default="4,5,6")
    en.add_argument("--k-depth", type=int, default=2,
                    help="depth of the seed ball for the compact set")
    en.add_argument("--translate", nargs="+", default=None,
                    help="word for the covering translation (amplify)")
    en.set_defaults(func=_cmd_ends)

    ai = sub.add_parser("ai", help="almost invariance of the affine part")
    ai.add_argument("action", choices=("exact", "ball", "cut"))
    ai.add_argument("--gen", nargs="+", default=["x0"], help="word for the group element")
    _add_ball_opts(ai)
    ai.set_defaults(func=_cmd_ai)

    fa = sub.add_parser("fa", help="fixed-point certificates")
    fa.add_argument("action", choices=("t-cert", "v-cert", "verify"))
    fa.add_argument("certificate", nargs="?", help="certificate file (verify)")
    fa.add_argument("-o", "--output", default=None)
    fa.set_defaults(func=_cmd_fa)

    tr = sub.add_parser("tree", help="modular-group tree testbed")
    tr.add_argument("action", choices=("suite", "classify"))
    tr.add_argument("--max-syllables", type=int, default=4)
    tr.add_argument("--radius", type=int, default=None)
    tr.add_argument("--word", default="ab")
    tr.set_defaults(func=_cmd_tree)
    return ap


def dispatch(argv) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return EXIT_OK
        return EXIT_USAGE
    try:
        return args.func(args)
    except ResourceLimit as exc:
        partial = exc.partial
        print(f"resource limit: {exc}")
        if partial is not None:
            print(f"partial progress: radius {partial.radius}, {len(partial)} states")
        return EXIT_RESOURCE
    except facert.CertificateFailure as exc:
        print(f"CERTIFICATE FAILED: {exc}")
        return EXIT_VIOLATION
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
