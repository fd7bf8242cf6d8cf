"""Command-line entry point.

Exit codes: 0 success, 1 validation errors present, 2 input or format failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .align import (
    align_mentions,
    align_referents,
    alignment_to_json,
    report_tsv,
    score,
)
from .layer import build_layer, has_errors, layer_to_json, read_layer, validate_layer
from .mentions import (
    DecisionFile,
    apply_decisions,
    expand_multicenter,
    extract_candidates,
    mentions_to_json,
    partitive_mentions,
    questionnaire,
    review_flags,
)
from .pipeline import PipelineConfig, corpus_statistics, run_pipeline
from .spans import ingest_external, render, spans_to_json, to_conll
from .ucca import is_scene, read_passage, to_xml

OUT_DIR_ENV = "UCOREF_OUT_DIR"

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_INPUT = 0, 1, 2


def _mu(text: str) -> Fraction:
    try:
        mu = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError("mu must be a number, got %r" % text) from None
    if not 0 <= mu <= 1:
        raise argparse.ArgumentTypeError("mu must lie in [0, 1]")
    return mu


def _emit(text: str, out) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _mentions(p, d):
    c = extract_candidates(p)
    m = partitive_mentions(p, expand_multicenter(p, apply_decisions(c, d), d))
    return c, m


def cmd_parse(args) -> int:
    p = read_passage(args.passage)
    if args.xml:
        _emit(to_xml(p), args.out)
        return EXIT_OK
    summary = {
        "doc_id": p.doc_id,
        "tokens": len(p.terminals),
        "non_punct_tokens": sum(1 for t in p.terminals if not t.is_punct),
        "units": len(p.units) - 1,
        "scenes": [u for u in p.ordered_units() if is_scene(p, u)],
        "implicit": sorted(u for u in p.units if p.units[u].implicit),
        "remote_edges": [[e.parent, e.child, e.tag] for e in p.remote_edges()],
    }
    _emit(json.dumps(summary, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_extract(args) -> int:
    p = read_passage(args.passage)
    if args.decisions is None:
        _emit(questionnaire(p, extract_candidates(p)), args.out)
        return EXIT_OK
    d = DecisionFile.load(args.decisions)
    _, m = _mentions(p, d)
    _emit(mentions_to_json(p, m, review_flags(p, m)), args.out)
    return EXIT_OK


def cmd_build(args) -> int:
    p = read_passage(args.passage)
    d = DecisionFile.load(args.decisions)
    _, m = _mentions(p, d)
    layer = build_layer(m, d, p.doc_id, p.sort_key)
    _emit(layer_to_json(layer), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    p = read_passage(args.passage)
    layer = read_layer(args.layer, p)
    diags = validate_layer(p, layer)
    for x in diags:
        sys.stderr.write(x.tsv() + "\n")
    return EXIT_DIAGNOSTICS if has_errors(diags) else EXIT_OK


def cmd_spans(args) -> int:
    p = read_passage(args.passage)
    layer = read_layer(args.layer, p)
    spans = render(p, layer, args.span_mode, args.include_null)
    if args.format == "conll":
        _emit(to_conll(spans, [t.text for t in p.terminals]), args.out)
    else:
        _emit(spans_to_json(spans), args.out)
    return EXIT_OK


def cmd_align(args) -> int:
    a = ingest_external(args.ucoref, args.format_a)
    b = ingest_external(args.other, args.format_b)
    m = align_mentions(a, b, args.mu, args.compat_dice)
    r = align_referents(a, b, m, args.mu, args.referent_score, args.compat_dice)
    _emit(alignment_to_json(a, b, m, r), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    a = ingest_external(args.ucoref, args.format_a)
    b = ingest_external(args.other, args.format_b)
    parts = Path(args.other).name.split(".")
    scheme = args.scheme or (parts[1] if len(parts) > 2 else "external")
    rep = score(a, b, args.mu, args.compat_dice, args.referent_score, scheme, args.span_mode)
    text = report_tsv([rep])
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_stats(args) -> int:
    text = corpus_statistics(args.corpus, args.decisions_dir).tsv()
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    out_dir = args.out_dir or os.environ.get(OUT_DIR_ENV) or "ucoref-out"
    cfg = PipelineConfig(args.corpus, out_dir, args.decisions_dir, args.external_dir,
                         args.mu, args.span_mode, args.include_null, args.compat_dice,
                         args.referent_score)
    manifest = run_pipeline(cfg)
    for d in manifest.documents:
        sys.stderr.write("%s\t%s\t%s\n" % (d.doc_id, d.status, d.message))
    if any(d.status == "error" for d in manifest.documents):
        return EXIT_INPUT
    if any(d.status == "diagnostics" for d in manifest.documents):
        return EXIT_DIAGNOSTICS
    return EXIT_OK


def _common(top: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags; SUPPRESS keeps them from
    # overwriting values given before the subcommand name
    def default(value):
        return value if top else argparse.SUPPRESS

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mu", type=_mu, default=default(Fraction(0)),
                        help="overlap threshold for fuzzy alignment (default 0)")
    common.add_argument("--span-mode", choices=("min", "max"), default=default("max"))
    common.add_argument("--include-null", dest="include_null", action="store_true",
                        default=default(True), help="keep implicit mentions as null spans (default)")
    common.add_argument("--no-null", dest="include_null", action="store_false",
                        default=default(True), help="drop implicit mentions")
    common.add_argument("--compat-dice", action="store_true", default=default(False),
                        help="score overlap as |a∩b|/(|a|+|b|) without the factor 2")
    common.add_argument("--referent-score", choices=("links", "tokens"), default=default("links"))
    common.add_argument("--out-dir", default=default(None),
                        help="output directory (default: $%s or ./ucoref-out)" % OUT_DIR_ENV)
    common.add_argument("-v", "--verbose", action="store_true", default=default(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(top=False)
    parser = argparse.ArgumentParser(prog="ucoref", description=__doc__.splitlines()[0],
                                     parents=[_common(top=True)])
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("parse", parents=[common], help="check a passage and summarize it")
    s.add_argument("passage")
    s.add_argument("--xml", action="store_true", help="print the normalized XML instead")
    s.add_argument("--out")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("extract-candidates", parents=[common],
                       help="list candidates, or mentions when decisions are given")
    s.add_argument("passage")
    s.add_argument("--decisions")
    s.add_argument("--out")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("build-layer", parents=[common], help="build the coreference layer")
    s.add_argument("passage")
    s.add_argument("decisions")
    s.add_argument("--out")
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("validate", parents=[common], help="lint a layer; diagnostics on stderr")
    s.add_argument("passage")
    s.add_argument("layer")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("spans", parents=[common], help="render a layer as token spans")
    s.add_argument("passage")
    s.add_argument("layer")
    s.add_argument("--format", choices=("json", "conll"), default="json")
    s.add_argument("--out")
    s.set_defaults(func=cmd_spans)

    for name, func, helptext in (("align", cmd_align, "align two span layers"),
                                 ("eval", cmd_eval, "score UCoref spans against another scheme")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("ucoref")
        s.add_argument("other")
        s.add_argument("--format-a", choices=("spanlayer-json", "conll2012"), default=None)
        s.add_argument("--format-b", choices=("spanlayer-json", "conll2012"), default=None)
        if name == "align":
            s.add_argument("--out")
        else:
            s.add_argument("--scheme", default=None)
            s.add_argument("--report")
        s.set_defaults(func=func)

    s = sub.add_parser("stats", parents=[common], help="corpus statistics")
    s.add_argument("corpus")
    s.add_argument("--decisions-dir")
    s.add_argument("--report")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("pipeline", parents=[common], help="run every stage over a corpus")
    s.add_argument("corpus")
    s.add_argument("--decisions-dir")
    s.add_argument("--external-dir")
    s.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        sys.stderr.write("ucoref %s: %s\n" % (args.command, exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
