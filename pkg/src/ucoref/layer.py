"""The coreference layer: referent nodes, each parenting its coreferring mentions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .mentions import (
    DecisionError,
    DecisionFile,
    Mention,
    extract_candidates,
    Rule,
)
from .ucca import Passage, is_scene

SINGLETON_PREFIX = "_"
NEGATORS = frozenset({"not", "n't", "never", "no", "nt", "neither", "nor", "without"})


@dataclass(frozen=True)
class Referent:
    label: str
    mentions: tuple  # of Mention

    @property
    def kind(self) -> str:
        return classify_referent(self)

    @property
    def mention_ids(self) -> tuple:
        return tuple(m.unit for m in self.mentions)

    def __len__(self) -> int:
        return len(self.mentions)


@dataclass(frozen=True)
class CorefLayer:
    doc_id: str
    referents: tuple
    unclustered: frozenset = frozenset()

    @property
    def mentions(self) -> dict:
        return {m.unit: m for r in self.referents for m in r.mentions}

    def referent_of(self) -> dict:
        return {m.unit: r.label for r in self.referents for m in r.mentions}

    def __iter__(self):
        return iter(self.referents)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    rule: str
    units: tuple
    message: str

    def tsv(self) -> str:
        return "\t".join((self.severity, self.rule, ",".join(self.units), self.message))


def classify_referent(r: Referent) -> str:
    kinds = {m.kind for m in r.mentions}
    if "scene" in kinds:
        return "event"
    if "time" in kinds:
        return "time"
    return "entity"


def build_layer(mentions: Mapping, d: Optional[DecisionFile], doc_id: Optional[str] = None,
                order=None) -> CorefLayer:
    """Group mentions into referents by the decision file's cluster labels.

    Mentions without a label become singleton referents.  `order` is a sort
    key over unit ids (normally ``Passage.sort_key``).
    """
    clusters = d.clusters if d is not None else {}
    doc_id = doc_id or (d.doc_id if d is not None else "")
    order = order or (lambda u: u)
    for uid in clusters:
        if uid not in mentions:
            raise DecisionError("cluster assignment for %s, which is not a mention" % uid)
    labels = set(clusters.values())
    groups: dict[str, list] = {}
    unclustered = set()
    for uid in sorted(mentions, key=order):
        label = clusters.get(uid)
        if label is None:
            label = SINGLETON_PREFIX + uid
            if label in labels:
                raise DecisionError("label %r collides with a singleton label" % label)
            unclustered.add(uid)
        groups.setdefault(label, []).append(mentions[uid])
    referents = tuple(Referent(label, tuple(ms)) for label, ms in groups.items())
    return CorefLayer(doc_id, referents, frozenset(unclustered))


def mention_for_unit(p: Passage, uid: str) -> Mention:
    """Reconstruct a mention from the passage alone (kind from structure)."""
    c = extract_candidates(p)
    rule = c.auto.get(uid) or c.candidates.get(uid)
    if rule is Rule.SCENE or (rule is None and is_scene(p, uid)):
        kind = "scene"
    elif rule is Rule.PARTICIPANT:
        kind = "participant"
    elif rule is Rule.TIME:
        kind = "time"
    else:
        kind = "other"
    return Mention(uid, kind, p.units[uid].implicit, uid in p.remote_parents,
                   "auto" if uid in c.auto else "decided")


def layer_to_json(layer: CorefLayer) -> str:
    data = {
        "doc_id": layer.doc_id,
        "referents": [{"label": r.label, "kind": r.kind, "mentions": list(r.mention_ids)}
                      for r in layer.referents],
        "mentions": [m.to_dict() for r in layer.referents for m in r.mentions],
    }
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def layer_from_json(text: str, p: Optional[Passage] = None) -> CorefLayer:
    data = json.loads(text)
    details = {m["unit"]: Mention.from_dict(m) for m in data.get("mentions", [])}
    seen = set()
    referents = []
    unclustered = set()
    for r in data["referents"]:
        ms = []
        for uid in r["mentions"]:
            if uid in seen:
                raise DecisionError("mention %s appears in two referents" % uid)
            seen.add(uid)
            if uid in details:
                ms.append(details[uid])
            elif p is not None:
                if uid not in p.units:
                    raise DecisionError("layer references unknown unit %s" % uid)
                ms.append(mention_for_unit(p, uid))
            else:
                raise DecisionError("no mention details for %s and no passage given" % uid)
        if not ms:
            raise DecisionError("referent %r has no mentions" % r["label"])
        if r["label"] == SINGLETON_PREFIX + ms[0].unit and len(ms) == 1:
            unclustered.add(ms[0].unit)
        referents.append(Referent(r["label"], tuple(ms)))
    return CorefLayer(data["doc_id"], tuple(referents), frozenset(unclustered))


def read_layer(path, p: Optional[Passage] = None) -> CorefLayer:
    return layer_from_json(Path(path).read_text(encoding="utf-8"), p)


def _negated(p: Passage, uid: str) -> bool:
    for e in p.children(uid, "D"):
        words = p.text(p.yield_positions(e.child)).lower().split()
        if words and all(w in NEGATORS for w in words):
            return True
    return False


def _predicate_text(p: Passage, uid: str) -> str:
    pos = set()
    for e in p.children(uid, "P", "S"):
        pos.update(p.yield_positions(e.child))
    return p.text(pos).lower()


def validate_layer(p: Passage, layer: CorefLayer) -> list:
    """Check a layer against the structurally decidable guideline rules."""
    diags = []
    ref = layer.referent_of()
    sizes = {r.label: len(r) for r in layer.referents}
    total = len(ref)

    for uid in sorted(ref, key=p.sort_key):
        centers = p.children(uid, "C")
        if len(centers) == 1:
            c = centers[0].child
            if c in ref and ref[c] != ref[uid]:
                diags.append(Diagnostic(
                    "error", "center-coref", (uid, c),
                    "%s and its single Center %s are in different referents (%s, %s)"
                    % (uid, c, ref[uid], ref[c])))
        elif len(centers) >= 2:
            conj = [e.child for e in centers if e.child in ref]
            for i, a in enumerate(conj):
                for b in conj[i + 1:]:
                    if ref[a] == ref[b]:
                        diags.append(Diagnostic(
                            "error", "conjunct-merge", (a, b),
                            "conjuncts %s and %s of %s share referent %s"
                            % (a, b, uid, ref[a])))

    mentions = layer.mentions
    for uid in sorted(ref, key=p.sort_key):
        m = mentions[uid]
        if uid in p.remote_parents and sizes[ref[uid]] == 1 and total > 1:
            diags.append(Diagnostic(
                "warning", "remote-unlinked", (uid,),
                "remote-edge child %s is a singleton referent" % uid))
        if m.implicit and sizes[ref[uid]] == 1:
            diags.append(Diagnostic(
                "warning", "implicit-singleton", (uid,),
                "implicit mention %s is not linked to any other mention" % uid))
        edge = p.primary_parent.get(uid)
        if (edge is not None and edge.has("E") and m.kind != "scene"
                and edge.parent in ref and ref[edge.parent] != ref[uid]
                and not p.children(uid, "R")):
            diags.append(Diagnostic(
                "warning", "appositive-unlinked", (edge.parent, uid),
                "elaborator mention %s is not coreferent with %s" % (uid, edge.parent)))

    for r in layer.referents:
        scenes = [m.unit for m in r.mentions
                  if m.unit in p.units and is_scene(p, m.unit)]
        for i, a in enumerate(scenes):
            for b in scenes[i + 1:]:
                if (_negated(p, a) != _negated(p, b)
                        and _predicate_text(p, a) == _predicate_text(p, b)):
                    diags.append(Diagnostic(
                        "warning", "negation-merge", (a, b),
                        "scene %s and its negation %s share referent %s" % (a, b, r.label)))
    return sorted(diags, key=lambda d: (d.severity != "error", d.rule,
                                        [p.sort_key(u) for u in d.units]))


def has_errors(diags: Iterable[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diags)


def remote_participation(p: Passage, layer: CorefLayer) -> list:
    """(remote parent, referent label, child) for every remote Participant edge."""
    ref = layer.referent_of()
    out = []
    for e in p.remote_edges():
        if e.has("A") and e.child in ref:
            out.append((e.parent, ref[e.child], e.child))
    return out
