"""Corpus statistics: token/unit/candidate counts and mention/referent distributions."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Mapping

from .layer import CorefLayer, classify_referent
from .mentions import CandidateSet
from .ucca import Passage

SENTENCE_FINAL = frozenset({".", "?", "!", "...", "?!", "!?"})


@dataclass
class DocStats:
    doc_id: str = ""
    sentences: int = 0
    tokens: int = 0
    non_punct_tokens: int = 0
    units: int = 0
    candidates: int = 0          # units kept by the category filter (auto + candidates)
    mentions: int = 0
    event_mentions: int = 0
    entity_mentions: int = 0
    other_mentions: int = 0
    implicit_mentions: int = 0
    remote_mentions: int = 0
    referents: int = 0
    event_referents: int = 0
    entity_referents: int = 0
    time_referents: int = 0
    non_singleton_referents: int = 0
    implicit_in_non_singleton: int = 0
    remote_in_non_singleton: int = 0

    def __add__(self, other: "DocStats") -> "DocStats":
        total = DocStats(doc_id="TOTAL")
        for f in fields(self):
            if f.name != "doc_id":
                setattr(total, f.name, getattr(self, f.name) + getattr(other, f.name))
        return total


@dataclass
class StatsReport:
    documents: list
    total: DocStats

    def tsv(self) -> str:
        names = [f.name for f in fields(DocStats)]
        lines = ["\t".join(names)]
        for row in self.documents + [self.total]:
            d = asdict(row)
            lines.append("\t".join(str(d[n]) for n in names))
        return "\n".join(lines) + "\n"


def count_sentences(p: Passage) -> int:
    """Paragraph breaks and sentence-final punctuation delimit sentences."""
    n = 0
    open_sentence = False
    last_para = None
    for t in p.terminals:
        if last_para is not None and t.paragraph != last_para and open_sentence:
            n += 1
            open_sentence = False
        last_para = t.paragraph
        open_sentence = True
        if t.is_punct and t.text in SENTENCE_FINAL:
            n += 1
            open_sentence = False
    return n + (1 if open_sentence else 0)


def document_stats(p: Passage, c: CandidateSet, layer: CorefLayer) -> DocStats:
    s = DocStats(doc_id=p.doc_id)
    s.sentences = count_sentences(p)
    s.tokens = len(p.terminals)
    s.non_punct_tokens = sum(1 for t in p.terminals if not t.is_punct)
    s.units = len(p.units) - 1
    s.candidates = len(c.auto) + len(c.candidates)
    for r in layer.referents:
        s.referents += 1
        kind = classify_referent(r)
        if kind == "event":
            s.event_referents += 1
        elif kind == "time":
            s.time_referents += 1
        else:
            s.entity_referents += 1
        big = len(r) > 1
        s.non_singleton_referents += big
        for m in r.mentions:
            s.mentions += 1
            if m.kind == "scene":
                s.event_mentions += 1
            elif m.kind == "participant":
                s.entity_mentions += 1
            else:
                s.other_mentions += 1
            if m.implicit:
                s.implicit_mentions += 1
                s.implicit_in_non_singleton += big
            if m.via_remote:
                s.remote_mentions += 1
                s.remote_in_non_singleton += big
    return s


def corpus_stats(passages: Mapping, candidates: Mapping, layers: Mapping) -> StatsReport:
    """All three mappings are keyed by doc_id."""
    docs = []
    total = DocStats(doc_id="TOTAL")
    for doc_id in sorted(passages):
        if doc_id not in layers:
            raise KeyError("no coreference layer for passage %r" % doc_id)
        if doc_id not in candidates:
            raise KeyError("no candidate set for passage %r" % doc_id)
        s = document_stats(passages[doc_id], candidates[doc_id], layers[doc_id])
        docs.append(s)
        total = total + s
    return StatsReport(docs, total)
