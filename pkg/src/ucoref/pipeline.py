"""End-to-end corpus processing: parse, extract, build, render, align, report.

Corpus layout: ``<stem>.xml`` passages with optional ``<stem>.json``
decision files beside them (or in a separate decisions directory).  External
annotations are ``<stem>.<scheme>.spans.json`` or ``<stem>.<scheme>.conll``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__
from .align import EvalReport, align_mentions, align_referents, alignment_to_json, report_tsv, score
from .layer import build_layer, has_errors, layer_to_json, validate_layer
from .mentions import (
    DecisionFile,
    apply_decisions,
    expand_multicenter,
    extract_candidates,
    mentions_to_json,
    partitive_mentions,
    review_flags,
)
from .spans import ingest_external, render, spans_to_json, to_conll
from .stats import StatsReport, corpus_stats
from .ucca import read_passage

log = logging.getLogger(__name__)

EXTERNAL_SUFFIXES = {".spans.json": "spanlayer-json", ".conll": "conll2012"}


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    corpus_dir: Path
    out_dir: Path
    decisions_dir: Optional[Path] = None
    external_dir: Optional[Path] = None
    mu: Fraction = Fraction(0)
    span_mode: str = "max"
    include_null: bool = True
    compat_dice: bool = False
    referent_method: str = "links"

    def __post_init__(self):
        self.corpus_dir = Path(self.corpus_dir)
        self.out_dir = Path(self.out_dir)
        self.decisions_dir = Path(self.decisions_dir) if self.decisions_dir else self.corpus_dir
        self.external_dir = Path(self.external_dir) if self.external_dir else None
        self.mu = Fraction(self.mu).limit_denominator(10 ** 6) if not isinstance(self.mu, Fraction) else self.mu

    def check(self) -> None:
        if not 0 <= self.mu <= 1:
            raise ConfigError("mu must lie in [0, 1], got %s" % self.mu)
        if self.span_mode not in ("min", "max"):
            raise ConfigError("span mode must be min or max, got %r" % self.span_mode)
        for name in ("corpus_dir", "decisions_dir", "external_dir"):
            path = getattr(self, name)
            if path is not None and not path.is_dir():
                raise ConfigError("%s %s does not exist" % (name.replace("_", " "), path))

    def snapshot(self) -> dict:
        return {"corpus_dir": str(self.corpus_dir), "decisions_dir": str(self.decisions_dir),
                "external_dir": str(self.external_dir) if self.external_dir else None,
                "mu": str(self.mu), "span_mode": self.span_mode,
                "include_null": self.include_null, "compat_dice": self.compat_dice,
                "referent_method": self.referent_method}


@dataclass
class DocumentResult:
    doc_id: str
    status: str = "ok"               # ok | diagnostics | error
    message: str = ""
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    diagnostics: int = 0


@dataclass
class RunManifest:
    version: str
    config: dict
    documents: list
    reports: dict
    created: str = ""

    def to_json(self) -> str:
        data = {"tool": "ucoref", "version": self.version, "created": self.created,
                "config": self.config,
                "documents": [asdict(d) for d in self.documents],
                "reports": self.reports}
        return json.dumps(data, indent=2, ensure_ascii=False) + "\n"

    def digest(self) -> str:
        data = json.loads(self.to_json())
        data.pop("created")
        return _sha(json.dumps(data, sort_keys=True).encode())

    @property
    def ok(self) -> bool:
        return all(d.status == "ok" for d in self.documents)


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _file_digest(path: Path) -> str:
    return _sha(path.read_bytes())


def _write(path: Path, text: str, base: Path, outputs: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    outputs[str(path.relative_to(base))] = _sha(text.encode("utf-8"))


def external_files(cfg: PipelineConfig, stem: str) -> list:
    """(scheme, path, format) for every external annotation of `stem`."""
    if cfg.external_dir is None:
        return []
    found = []
    for path in sorted(cfg.external_dir.iterdir()):
        name = path.name
        for suffix, fmt in EXTERNAL_SUFFIXES.items():
            if name.startswith(stem + ".") and name.endswith(suffix):
                scheme = name[len(stem) + 1:-len(suffix)] or "external"
                found.append((scheme, path, fmt))
    return found


def _inputs(cfg: PipelineConfig, xml_path: Path) -> dict:
    paths = [xml_path, cfg.decisions_dir / (xml_path.stem + ".json")]
    paths += [path for _, path, _ in external_files(cfg, xml_path.stem)]
    return {str(path): _file_digest(path) for path in paths if path.exists()}


def process_document(cfg: PipelineConfig, xml_path: Path, seen_ids: set, stash: dict) -> DocumentResult:
    stem = xml_path.stem
    result = DocumentResult(doc_id=stem, inputs=_inputs(cfg, xml_path))
    dec_path = cfg.decisions_dir / (stem + ".json")
    externals = external_files(cfg, stem)

    p = read_passage(xml_path)
    result.doc_id = p.doc_id
    if p.doc_id in seen_ids:
        raise ConfigError("doc_id collision: %r already used by another passage" % p.doc_id)
    seen_ids.add(p.doc_id)
    d = DecisionFile.load(dec_path) if dec_path.exists() else None

    c = extract_candidates(p)
    mentions = apply_decisions(c, d)
    mentions = expand_multicenter(p, mentions, d)
    mentions = partitive_mentions(p, mentions)
    layer = build_layer(mentions, d, p.doc_id, p.sort_key)
    diags = validate_layer(p, layer)

    docs = cfg.out_dir / "docs"
    out = result.outputs
    _write(docs / (stem + ".mentions.json"), mentions_to_json(p, mentions, review_flags(p, mentions)),
           cfg.out_dir, out)
    _write(docs / (stem + ".layer.json"), layer_to_json(layer), cfg.out_dir, out)
    _write(docs / (stem + ".diagnostics.tsv"), "".join(x.tsv() + "\n" for x in diags),
           cfg.out_dir, out)
    for mode in ("min", "max"):
        spans = render(p, layer, mode, cfg.include_null)
        _write(docs / ("%s.%s.spans.json" % (stem, mode)), spans_to_json(spans), cfg.out_dir, out)
        if mode == cfg.span_mode:
            _write(docs / ("%s.%s.conll" % (stem, mode)),
                   to_conll(spans, [t.text for t in p.terminals]), cfg.out_dir, out)

    ours = render(p, layer, cfg.span_mode, include_null=False)
    reports = {}
    for scheme, path, fmt in externals:
        theirs = ingest_external(path, fmt, n_tokens=len(p.terminals))
        if fmt == "conll2012":
            theirs = type(theirs)(p.doc_id, theirs.clusters)
        m = align_mentions(ours, theirs, cfg.mu, cfg.compat_dice)
        r = align_referents(ours, theirs, m, cfg.mu, cfg.referent_method, cfg.compat_dice)
        _write(docs / ("%s.%s.alignment.json" % (stem, scheme)),
               alignment_to_json(ours, theirs, m, r), cfg.out_dir, out)
        reports[scheme] = score(ours, theirs, cfg.mu, cfg.compat_dice, cfg.referent_method,
                                scheme, cfg.span_mode)

    result.diagnostics = len(diags)
    if has_errors(diags):
        result.status = "diagnostics"
        result.message = "; ".join(x.message for x in diags if x.severity == "error")
    stash[p.doc_id] = (p, c, layer, reports)
    return result


def run_pipeline(cfg: PipelineConfig) -> RunManifest:
    cfg.check()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    seen: set = set()
    stash: dict = {}
    results = []
    for xml_path in sorted(cfg.corpus_dir.glob("*.xml")):
        try:
            results.append(process_document(cfg, xml_path, seen, stash))
        except (ValueError, KeyError, OSError) as exc:
            # UCCAError, DecisionError and SpanFormatError are ValueErrors
            log.error("%s: %s", xml_path.name, exc)
            results.append(DocumentResult(doc_id=xml_path.stem, status="error",
                                          message="%s: %s" % (xml_path.name, exc),
                                          inputs=_inputs(cfg, xml_path)))

    report_digests = {}
    stats = corpus_stats({k: v[0] for k, v in stash.items()},
                         {k: v[1] for k, v in stash.items()},
                         {k: v[2] for k, v in stash.items()})
    _write(cfg.out_dir / "stats.tsv", stats.tsv(), cfg.out_dir, report_digests)

    totals: dict[str, EvalReport] = {}
    for doc_id in sorted(stash):
        for scheme, rep in sorted(stash[doc_id][3].items()):
            totals[scheme] = totals[scheme] + rep if scheme in totals else rep
    _write(cfg.out_dir / "eval.tsv", report_tsv(totals[s] for s in sorted(totals)),
           cfg.out_dir, report_digests)

    manifest = RunManifest(__version__, cfg.snapshot(), results, report_digests,
                           created=datetime.now(timezone.utc).isoformat(timespec="seconds"))
    (cfg.out_dir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def corpus_statistics(corpus_dir, decisions_dir=None) -> StatsReport:
    """Stats for a corpus directory without writing any outputs."""
    corpus_dir = Path(corpus_dir)
    decisions_dir = Path(decisions_dir) if decisions_dir else corpus_dir
    passages, cands, layers = {}, {}, {}
    for xml_path in sorted(corpus_dir.glob("*.xml")):
        p = read_passage(xml_path)
        dec = decisions_dir / (xml_path.stem + ".json")
        d = DecisionFile.load(dec) if dec.exists() else None
        c = extract_candidates(p)
        m = partitive_mentions(p, expand_multicenter(p, apply_decisions(c, d), d))
        passages[p.doc_id], cands[p.doc_id] = p, c
        layers[p.doc_id] = build_layer(m, d, p.doc_id, p.sort_key)
    return corpus_stats(passages, cands, layers)
