"""Scheme-neutral token-span clusters, and rendering a coreference layer into them.

Maximum spans are full unit yields; minimum spans are the yields of semantic
heads.  Implicit mentions render as null spans unless dropped.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .layer import CorefLayer
from .ucca import Passage, TokenSpan, head_path, head_positions

log = logging.getLogger(__name__)


class SpanFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SpanMention:
    span: TokenSpan
    head: tuple = ()
    source: str = "ucoref"
    source_unit: Optional[str] = None

    @property
    def positions(self) -> tuple:
        return self.span.positions

    @property
    def null(self) -> bool:
        return self.span.null_span


@dataclass(frozen=True)
class SpanCluster:
    label: str
    mentions: tuple


@dataclass(frozen=True)
class SpanLayer:
    doc_id: str
    clusters: tuple = ()

    def mentions(self, include_null: bool = False) -> list:
        """Flattened (cluster index, mention) pairs in layer order."""
        return [(i, m) for i, c in enumerate(self.clusters) for m in c.mentions
                if include_null or not m.null]

    def __len__(self) -> int:
        return sum(len(c.mentions) for c in self.clusters)


def _representative_heads(p: Passage, layer: CorefLayer) -> set:
    """Mentions standing in for a coreferent ancestor mention on its head path."""
    drop = set()
    for r in layer.referents:
        units = {m.unit for m in r.mentions}
        for uid in units:
            if any(a in units and head_path(p, a, uid) for a in p.ancestors(uid)):
                drop.add(uid)
    return drop


def _render(p: Passage, layer: CorefLayer, mode: str, include_null: bool) -> SpanLayer:
    drop = _representative_heads(p, layer)
    clusters = []
    for r in layer.referents:
        out = []
        for m in r.mentions:
            if m.unit in drop:
                continue
            if m.implicit:
                if include_null:
                    out.append(SpanMention(TokenSpan(p.doc_id, ()), (), "ucoref", m.unit))
                continue
            head = head_positions(p, m.unit)
            if mode == "max":
                positions = p.yield_positions(m.unit)
            else:
                positions = head
            if not positions:
                continue
            out.append(SpanMention(TokenSpan(p.doc_id, positions), head, "ucoref", m.unit))
        if out:
            clusters.append(SpanCluster(r.label, tuple(out)))
    return SpanLayer(p.doc_id, tuple(clusters))


def to_max_spans(p: Passage, layer: CorefLayer, include_null: bool = True) -> SpanLayer:
    return _render(p, layer, "max", include_null)


def to_min_spans(p: Passage, layer: CorefLayer, include_null: bool = True) -> SpanLayer:
    return _render(p, layer, "min", include_null)


def render(p: Passage, layer: CorefLayer, mode: str, include_null: bool = True) -> SpanLayer:
    if mode not in ("min", "max"):
        raise ValueError("span mode must be 'min' or 'max', got %r" % mode)
    return _render(p, layer, mode, include_null)


# -- SpanLayer JSON ------------------------------------------------------

def spans_to_json(layer: SpanLayer) -> str:
    clusters = []
    for c in layer.clusters:
        ms = []
        for m in c.mentions:
            row = {"positions": list(m.positions), "head": list(m.head), "null": m.null}
            if m.source_unit is not None:
                row["unit"] = m.source_unit
            if m.source != "ucoref":
                row["source"] = m.source
            ms.append(row)
        clusters.append({"label": c.label, "mentions": ms})
    return json.dumps({"doc_id": layer.doc_id, "clusters": clusters},
                      indent=2, ensure_ascii=False) + "\n"


def spans_from_json(text: str, source: Optional[str] = None,
                    n_tokens: Optional[int] = None) -> SpanLayer:
    try:
        data = json.loads(text)
        doc_id = str(data["doc_id"])
        clusters = []
        for c in data["clusters"]:
            ms = []
            for m in c["mentions"]:
                positions = tuple(sorted({int(x) for x in m.get("positions", [])}))
                if bool(m.get("null", False)) != (not positions):
                    raise SpanFormatError("mention in cluster %r: null flag disagrees with positions"
                                          % c["label"])
                if n_tokens is not None and positions and not (
                        1 <= positions[0] and positions[-1] <= n_tokens):
                    raise SpanFormatError("token index out of range in cluster %r" % c["label"])
                head = tuple(sorted(int(x) for x in m.get("head", [])))
                ms.append(SpanMention(TokenSpan(doc_id, positions), head,
                                      source or m.get("source", "ucoref"), m.get("unit")))
            clusters.append(SpanCluster(str(c["label"]), tuple(ms)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpanFormatError):
            raise
        raise SpanFormatError("not a span layer: %s" % exc) from None
    return SpanLayer(doc_id, tuple(clusters))


# -- CoNLL-2012 coreference columns ---------------------------------------

_CONLL_PART = re.compile(r"\(([^()|]+)\)|\(([^()|]+)|([^()|]+)\)")


def to_conll(layer: SpanLayer, tokens: Iterable[str]) -> str:
    """One token per line; the last column carries cluster brackets.

    Null and discontiguous mentions cannot be expressed and are skipped, as
    are mentions crossing an earlier mention of the same cluster (the
    brackets would pair up differently on reading).
    """
    tokens = list(tokens)
    opens = [[] for _ in tokens]
    closes = [[] for _ in tokens]
    singles = [[] for _ in tokens]
    for cid, c in enumerate(layer.clusters):
        kept = []
        for m in c.mentions:
            pos = m.positions
            if not pos:
                continue
            if pos[-1] - pos[0] + 1 != len(pos):
                log.warning("skipping discontiguous mention %s in cluster %s", pos, c.label)
                continue
            if any(a < pos[0] <= b < pos[-1] or pos[0] < a <= pos[-1] < b for a, b in kept):
                log.warning("skipping mention %s crossing another in cluster %s", pos, c.label)
                continue
            kept.append((pos[0], pos[-1]))
            if pos[-1] > len(tokens):
                raise SpanFormatError("mention %s beyond %d tokens" % (pos, len(tokens)))
            if len(pos) == 1:
                singles[pos[0] - 1].append(cid)
            else:
                opens[pos[0] - 1].append((pos[-1], cid))
                closes[pos[-1] - 1].append((pos[0], cid))
    lines = ["#begin document (%s); part 000" % layer.doc_id]
    for i, tok in enumerate(tokens):
        parts = []
        # outer mentions open first, inner close first
        for _, cid in sorted(opens[i], key=lambda x: (-x[0], x[1])):
            parts.append("(%d" % cid)
        for cid in singles[i]:
            parts.append("(%d)" % cid)
        for _, cid in sorted(closes[i], key=lambda x: (-x[0], x[1])):
            parts.append("%d)" % cid)
        lines.append("%s\t0\t%d\t%s\t%s" % (layer.doc_id, i, tok, "|".join(parts) or "-"))
    lines.append("#end document")
    return "\n".join(lines) + "\n"


def from_conll(text: str, doc_id: Optional[str] = None, source: str = "external") -> SpanLayer:
    """Read the coreference column of a CoNLL-2012 file as one SpanLayer.

    Token positions run 1..N over the whole document, across sentence breaks.
    """
    stacks: dict[str, list] = {}
    clusters: dict[str, list] = {}
    position = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("#begin document"):
            m = re.match(r"#begin document \(?([^);]*)\)?", line)
            if doc_id is None and m:
                doc_id = m.group(1).strip()
            continue
        if not line.strip() or line.startswith("#"):
            continue
        position += 1
        col = line.split()[-1]
        if col in ("-", "_"):
            continue
        stripped = col.replace("|", "")
        if _CONLL_PART.sub("", stripped):
            raise SpanFormatError("line %d: bad coreference field %r" % (lineno, col))
        for single, opening, closing in _CONLL_PART.findall(col):
            if single:
                clusters.setdefault(single, []).append((position, position))
            elif opening:
                stacks.setdefault(opening, []).append(position)
            else:
                if not stacks.get(closing):
                    raise SpanFormatError("line %d: closing %s) without opening" % (lineno, closing))
                start = stacks[closing].pop()
                clusters.setdefault(closing, []).append((start, position))
    unbalanced = sorted(cid for cid, s in stacks.items() if s)
    if unbalanced:
        raise SpanFormatError("unbalanced cluster parentheses for %s" % ", ".join(unbalanced))
    doc_id = doc_id or "document"

    def _key(cid):
        return (0, int(cid), "") if cid.isdigit() else (1, 0, cid)

    out = []
    for cid in sorted(clusters, key=_key):
        ms = tuple(SpanMention(TokenSpan(doc_id, tuple(range(a, b + 1))), (), source)
                   for a, b in sorted(clusters[cid]))
        out.append(SpanCluster(cid, ms))
    return SpanLayer(doc_id, tuple(out))


def ingest_external(path, fmt: Optional[str] = None, n_tokens: Optional[int] = None) -> SpanLayer:
    """Load another scheme's annotation as a SpanLayer (source=external)."""
    path = Path(path)
    if fmt is None:
        fmt = "conll2012" if path.suffix in (".conll", ".conll2012", ".gold_conll") else "spanlayer-json"
    text = path.read_text(encoding="utf-8")
    if fmt == "conll2012":
        layer = from_conll(text)
        if n_tokens is not None:
            for _, m in layer.mentions():
                if m.positions[-1] > n_tokens:
                    raise SpanFormatError("%s: token index %d out of range"
                                          % (path, m.positions[-1]))
        return layer
    if fmt == "spanlayer-json":
        return spans_from_json(text, source="external", n_tokens=n_tokens)
    raise ValueError("unknown external format %r" % fmt)
