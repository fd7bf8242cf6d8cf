"""Mention identification over UCCA units.

Scene and Participant units are mentions automatically.  Units whose primary
incoming edge is Time, Elaborator, Relator, Quantity or Adverbial are only
candidates: an annotator decides each through a :class:`DecisionFile`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .ucca import Passage, is_scene, semantic_head, yield_span


class Rule(str, Enum):
    SCENE = "SCENE"
    PARTICIPANT = "PARTICIPANT"
    TIME = "TIME"
    ELABORATOR = "ELABORATOR"
    RELATOR = "RELATOR"
    QUANTITY = "QUANTITY"
    ADVERBIAL = "ADVERBIAL"


# first matching category wins on multi-category edges
CANDIDATE_RULES = (
    ("T", Rule.TIME),
    ("E", Rule.ELABORATOR),
    ("R", Rule.RELATOR),
    ("Q", Rule.QUANTITY),
    ("D", Rule.ADVERBIAL),
)

RELATIONAL_NOUN_SCENE = "RELATIONAL_NOUN_SCENE"

REFERRING = "referring"
NON_REFERRING = "non_referring"
WHOLE_UNIT = "whole_unit_referring"
CONJUNCTS_ONLY = "conjuncts_only"

KINDS = ("scene", "participant", "time", "other")


class DecisionError(ValueError):
    """A decision file contradicts the passage or the candidate set."""


@dataclass
class CandidateSet:
    doc_id: str
    auto: dict = field(default_factory=dict)          # unit id -> Rule
    candidates: dict = field(default_factory=dict)    # unit id -> Rule
    suppressed: dict = field(default_factory=dict)    # unit id -> reason
    multi_center: tuple = ()
    implicit_units: frozenset = frozenset()
    remote_children: frozenset = frozenset()

    def __len__(self) -> int:
        return len(self.auto) + len(self.candidates)


@dataclass(frozen=True)
class Mention:
    unit: str
    kind: str
    implicit: bool = False
    via_remote: bool = False
    provenance: str = "auto"

    @property
    def id(self) -> str:
        return self.unit

    def to_dict(self) -> dict:
        return {"unit": self.unit, "kind": self.kind, "implicit": self.implicit,
                "via_remote": self.via_remote, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Mention":
        if d.get("kind") not in KINDS:
            raise DecisionError("mention %s has unknown kind %r" % (d.get("unit"), d.get("kind")))
        return cls(unit=str(d["unit"]), kind=d["kind"], implicit=bool(d.get("implicit")),
                   via_remote=bool(d.get("via_remote")),
                   provenance=d.get("provenance", "auto"))


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise DecisionError("duplicate key %r" % k)
        out[k] = v
    return out


@dataclass
class DecisionFile:
    doc_id: str
    verdicts: dict = field(default_factory=dict)
    coordination: dict = field(default_factory=dict)
    clusters: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, text: str) -> "DecisionFile":
        try:
            data = json.loads(text, object_pairs_hook=_no_duplicates)
        except json.JSONDecodeError as exc:
            raise DecisionError("decision file is not valid JSON: %s" % exc) from None
        if not isinstance(data, dict) or "doc_id" not in data:
            raise DecisionError("decision file needs a doc_id")
        # null entries (an unfilled questionnaire skeleton) count as absent
        tables = [{k: v for k, v in dict(data.get(name) or {}).items() if v is not None}
                  for name in ("verdicts", "coordination", "clusters")]
        d = cls(str(data["doc_id"]), *tables)
        for uid, v in d.verdicts.items():
            if v not in (REFERRING, NON_REFERRING):
                raise DecisionError("verdict for %s must be %r or %r, got %r"
                                    % (uid, REFERRING, NON_REFERRING, v))
        for uid, v in d.coordination.items():
            if v not in (WHOLE_UNIT, CONJUNCTS_ONLY):
                raise DecisionError("coordination verdict for %s must be %r or %r, got %r"
                                    % (uid, WHOLE_UNIT, CONJUNCTS_ONLY, v))
        for uid, label in d.clusters.items():
            if not isinstance(label, str) or not label:
                raise DecisionError("cluster label for %s must be a non-empty string" % uid)
        return d

    @classmethod
    def load(cls, path) -> "DecisionFile":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def to_json(self) -> str:
        data = {"doc_id": self.doc_id,
                "verdicts": dict(sorted(self.verdicts.items())),
                "coordination": dict(sorted(self.coordination.items())),
                "clusters": dict(sorted(self.clusters.items()))}
        return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def is_relational_noun(p: Passage, uid: str) -> bool:
    """Internal P/S and A over the same tokens (e.g. *teacher*, *friend*)."""
    predicates = p.children(uid, "P", "S")
    if not predicates:
        return False
    pred_spans = {p.yield_positions(e.child) for e in predicates}
    for e in p.children(uid, "A", remote=None):
        if e.has("P", "S") and not e.remote:
            return True
        if p.yield_positions(e.child) in pred_spans and p.yield_positions(e.child):
            return True
    return False


def extract_candidates(p: Passage) -> CandidateSet:
    c = CandidateSet(doc_id=p.doc_id)
    for uid in p.ordered_units():
        primary = p.incoming_categories(uid)
        anywhere = p.incoming_categories(uid, primary_only=False)
        relational = is_relational_noun(p, uid)
        if relational:
            c.suppressed[uid] = RELATIONAL_NOUN_SCENE
        if "A" in anywhere and (relational or not is_scene(p, uid)):
            c.auto[uid] = Rule.PARTICIPANT
        elif is_scene(p, uid) and not relational:
            c.auto[uid] = Rule.SCENE
        else:
            for cat, rule in CANDIDATE_RULES:
                if cat in primary:
                    c.candidates[uid] = rule
                    break
    c.multi_center = tuple(u for u in p.ordered_units() if p.multi_center(u))
    c.implicit_units = frozenset(u for u in p.units if p.units[u].implicit)
    c.remote_children = frozenset(p.remote_parents)
    return c


def _kind_for(rule: Rule) -> str:
    if rule is Rule.SCENE:
        return "scene"
    if rule is Rule.PARTICIPANT:
        return "participant"
    if rule is Rule.TIME:
        return "time"
    return "other"


def apply_decisions(c: CandidateSet, d: Optional[DecisionFile]) -> dict:
    """Auto mentions plus candidates the annotator marked referring.

    Returns a dict unit id -> Mention.  Candidates without a verdict are
    treated as non-referring.
    """
    verdicts = d.verdicts if d is not None else {}
    if d is not None and d.doc_id != c.doc_id:
        raise DecisionError("decision file is for %r, passage is %r" % (d.doc_id, c.doc_id))
    for uid in verdicts:
        if uid in c.auto:
            raise DecisionError("verdict on %s contradicts its automatic %s mention"
                                % (uid, c.auto[uid].value))
        if uid not in c.candidates:
            raise DecisionError("verdict on unknown candidate %s" % uid)

    mentions = {}
    for uid, rule in c.auto.items():
        mentions[uid] = Mention(uid, _kind_for(rule), uid in c.implicit_units,
                                uid in c.remote_children, "auto")
    for uid, rule in c.candidates.items():
        if verdicts.get(uid) == REFERRING:
            mentions[uid] = Mention(uid, _kind_for(rule), uid in c.implicit_units,
                                    uid in c.remote_children, "decided")
    return mentions


def expand_multicenter(p: Passage, mentions: Mapping, d: Optional[DecisionFile]) -> dict:
    """Add conjunct mentions under every referring multi-Center unit.

    The whole unit survives only with a ``whole_unit_referring`` verdict;
    ``conjuncts_only`` (disjunction) drops it.
    """
    coordination = d.coordination if d is not None else {}
    for uid in coordination:
        if uid not in p.units or not p.multi_center(uid):
            raise DecisionError("coordination verdict on %s, which is not a multi-Center unit" % uid)
    out = dict(mentions)
    queue = sorted(out, key=p.sort_key)
    done = set()
    while queue:
        uid = queue.pop(0)
        if uid in done or uid not in out or not p.multi_center(uid):
            continue
        done.add(uid)
        whole = out[uid]
        verdict = coordination.get(uid)
        if verdict is None:
            if whole.provenance == "auto":
                raise DecisionError("multi-Center mention %s needs a coordination verdict" % uid)
            verdict = WHOLE_UNIT
        for e in p.children(uid, "C"):
            child = e.child
            if child in out:
                continue
            if is_scene(p, child):
                kind = "scene"
            else:
                kind = whole.kind if whole.kind != "scene" else "other"
            out[child] = Mention(child, kind, p.units[child].implicit,
                                 child in p.remote_parents, whole.provenance)
            queue.append(child)
        if verdict == CONJUNCTS_ONLY:
            del out[uid]
    return out


def _flat_partitive_quantities(p: Passage, uid: str) -> list:
    seen_q = seen_r = False
    found = []
    for e in p.children(uid):
        if e.has("Q") and not seen_r:
            seen_q = True
        elif e.has("R") and seen_q:
            seen_r = True
        elif e.has("Q") and seen_r:
            found.append(e.child)
    if found and p.children(uid, "C"):
        return found
    return []


def is_v2_partitive(p: Passage, uid: str) -> Optional[str]:
    """Return the Elaborator of a ``[[one (books)_C]_C [of the 5 books]_E]`` unit."""
    centers = p.children(uid, "C")
    elaborators = p.children(uid, "E")
    if len(centers) != 1 or not elaborators:
        return None
    inner = centers[0].child
    if p.children(inner, "Q") and p.children(inner, "C", remote=True):
        return elaborators[0].child
    return None


def partitive_mentions(p: Passage, mentions: Mapping) -> dict:
    """Add the inner-quantity mention of flat (v1) partitives.

    Structured (v2) partitives are left alone; their Elaborator carries the
    second referent already.
    """
    out = dict(mentions)
    for uid in sorted(mentions, key=p.sort_key):
        for q in _flat_partitive_quantities(p, uid):
            if q not in out:
                out[q] = Mention(q, "other", p.units[q].implicit,
                                 q in p.remote_parents, "auto")
    return out


def review_flags(p: Passage, mentions: Mapping) -> dict:
    """Units an annotator should look at again, unit id -> reason."""
    flags = {}
    for uid in sorted(mentions, key=p.sort_key):
        if p.multi_center(uid) and not p.children(uid, "N"):
            flags[uid] = "multi-center without connector, treated as coordination"
        e = is_v2_partitive(p, uid)
        if e is not None and e not in mentions:
            flags[uid] = "partitive elaborator %s is not marked referring" % e
    return flags


def identify_mentions(p: Passage, d: Optional[DecisionFile] = None) -> dict:
    c = extract_candidates(p)
    mentions = apply_decisions(c, d)
    mentions = expand_multicenter(p, mentions, d)
    return partitive_mentions(p, mentions)


def sorted_mentions(p: Passage, mentions: Mapping) -> list:
    return [mentions[u] for u in sorted(mentions, key=p.sort_key)]


def mentions_to_json(p: Passage, mentions: Mapping, flags: Optional[Mapping] = None) -> str:
    rows = []
    for m in sorted_mentions(p, mentions):
        row = m.to_dict()
        span = yield_span(p, m.unit)
        row["positions"] = list(span.positions)
        row["head"] = sorted({pos for h in semantic_head(p, m.unit)
                              for pos in p.yield_positions(h)})
        row["text"] = p.text(span.positions)
        rows.append(row)
    data = {"doc_id": p.doc_id, "mentions": rows, "review": dict(flags or {})}
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def questionnaire(p: Passage, c: CandidateSet) -> str:
    """Candidate list for an annotator, with a decision-file skeleton."""
    def row(uid, rule):
        pos = p.yield_positions(uid)
        return {"unit": uid, "rule": rule.value, "positions": list(pos),
                "text": p.text(pos) if pos else "(implicit)"}
    data = {
        "doc_id": p.doc_id,
        "auto": [row(u, r) for u, r in c.auto.items()],
        "candidates": [row(u, r) for u, r in c.candidates.items()],
        "multi_center": [{"unit": u, "text": p.text(p.yield_positions(u)),
                          "auto": u in c.auto} for u in c.multi_center],
        "suppressed": dict(c.suppressed),
        "decisions": {"doc_id": p.doc_id,
                      "verdicts": {u: None for u in c.candidates},
                      "coordination": {u: None for u in c.multi_center if u in c.auto},
                      "clusters": {}},
    }
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"
