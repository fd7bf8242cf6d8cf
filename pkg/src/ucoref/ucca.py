"""UCCA foundational-layer passages: parsing, serialization and structural queries.

A passage is a DAG of layer-1 units over layer-0 terminals.  Every non-root
unit has exactly one primary (non-remote) parent; remote edges add further
parents.  Passages are treated as immutable once built.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

CATEGORIES = frozenset("H P S A C E D F R T Q G L N U".split())

CATEGORY_NAMES = {
    "H": "Parallel Scene",
    "P": "Process",
    "S": "State",
    "A": "Participant",
    "C": "Center",
    "E": "Elaborator",
    "D": "Adverbial",
    "F": "Function",
    "R": "Relator",
    "T": "Time",
    "Q": "Quantity",
    "G": "Ground",
    "L": "Linker",
    "N": "Connector",
    "U": "Punctuation",
}

# linkage nodes/edges live beside the foundational tree and are skipped
LINKAGE_NODE_TYPES = frozenset({"LKG"})
LINKAGE_EDGE_TYPES = frozenset({"LA", "LR", "LNK"})
TERMINAL_EDGE = "Terminal"
HEAD_CATEGORIES = frozenset("CSP")
TRUE_VALUES = ("true", "1", "yes")


class UCCAError(ValueError):
    """Malformed or structurally invalid passage."""


@dataclass(frozen=True)
class Terminal:
    id: str
    position: int
    text: str
    is_punct: bool = False
    paragraph: int = 1


@dataclass(frozen=True)
class Edge:
    parent: str
    child: str
    categories: frozenset
    remote: bool = False

    def has(self, *cats: str) -> bool:
        return any(c in self.categories for c in cats)

    @property
    def tag(self) -> str:
        return "+".join(sorted(self.categories))


@dataclass(frozen=True)
class Unit:
    id: str
    implicit: bool = False
    outgoing: tuple = ()
    terminals: tuple = ()  # ids of directly anchored terminals, in order
    node_type: str = "FN"

    @property
    def unanalyzable(self) -> bool:
        # several terminals and no internal layer-1 structure
        return len(self.terminals) > 1 and not self.outgoing

    @property
    def primary(self) -> tuple:
        return tuple(e for e in self.outgoing if not e.remote)


@dataclass(frozen=True)
class TokenSpan:
    doc_id: str
    positions: tuple = ()

    @property
    def null_span(self) -> bool:
        return not self.positions

    def __len__(self) -> int:
        return len(self.positions)


class Passage:
    """Validated UCCA passage.

    Construction checks every structural invariant; use :func:`parse_passage`
    for XML input.
    """

    def __init__(self, doc_id: str, terminals: Iterable[Terminal],
                 units: Iterable[Unit], root: str):
        self.doc_id = doc_id
        self.terminals = tuple(sorted(terminals, key=lambda t: t.position))
        self.units = {u.id: u for u in units}
        self.root = root
        self.terminal_by_id = {t.id: t for t in self.terminals}
        self.primary_parent: dict[str, Edge] = {}
        self.remote_parents: dict[str, list] = {}
        self._validate()
        self._order = self._document_order()

    def __repr__(self) -> str:
        return "Passage(%r, %d terminals, %d units)" % (
            self.doc_id, len(self.terminals), len(self.units))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Passage):
            return NotImplemented
        return (self.doc_id == other.doc_id and self.root == other.root
                and self.terminals == other.terminals
                and self.units == other.units)

    def __hash__(self):
        return hash((self.doc_id, self.root, len(self.units)))

    def _validate(self) -> None:
        positions = [t.position for t in self.terminals]
        if len(set(positions)) != len(positions):
            dup = next(p for p in positions if positions.count(p) > 1)
            raise UCCAError("duplicate terminal position %d" % dup)
        if positions != list(range(1, len(positions) + 1)):
            raise UCCAError("terminal positions are not contiguous 1..N")
        for t in self.terminals:
            if not t.text:
                raise UCCAError("terminal %s has empty text" % t.id)
        if self.root not in self.units:
            raise UCCAError("root unit %s does not exist" % self.root)

        anchored: dict[str, str] = {}
        for unit in self.units.values():
            if unit.implicit and (unit.terminals or unit.outgoing):
                raise UCCAError("implicit unit %s has children" % unit.id)
            for tid in unit.terminals:
                if tid not in self.terminal_by_id:
                    raise UCCAError("unit %s references unknown terminal %s"
                                    % (unit.id, tid))
                if tid in anchored:
                    raise UCCAError("terminal %s anchored by both %s and %s"
                                    % (tid, anchored[tid], unit.id))
                anchored[tid] = unit.id
            for edge in unit.outgoing:
                if edge.parent != unit.id:
                    raise UCCAError("edge %s->%s stored under unit %s"
                                    % (edge.parent, edge.child, unit.id))
                if edge.child not in self.units:
                    raise UCCAError("edge %s->%s references unknown node %s"
                                    % (edge.parent, edge.child, edge.child))
                if not edge.categories:
                    raise UCCAError("edge %s->%s has no category"
                                    % (edge.parent, edge.child))
                bad = set(edge.categories) - CATEGORIES
                if bad:
                    raise UCCAError("edge %s->%s has unknown category %s"
                                    % (edge.parent, edge.child, ",".join(sorted(bad))))
                if edge.remote:
                    self.remote_parents.setdefault(edge.child, []).append(edge)
                elif edge.child in self.primary_parent:
                    raise UCCAError("unit %s has two primary parents (%s, %s)"
                                    % (edge.child, self.primary_parent[edge.child].parent,
                                       edge.parent))
                else:
                    self.primary_parent[edge.child] = edge

        if self.root in self.primary_parent or self.root in self.remote_parents:
            raise UCCAError("root unit %s has an incoming edge" % self.root)
        for uid in self.units:
            if uid != self.root and uid not in self.primary_parent:
                raise UCCAError("unit %s has no primary incoming edge" % uid)

        # primary tree: every unit reachable from root, no cycles
        seen: set[str] = set()
        stack = [self.root]
        while stack:
            uid = stack.pop()
            if uid in seen:
                raise UCCAError("cycle in primary edges at unit %s" % uid)
            seen.add(uid)
            stack.extend(e.child for e in self.units[uid].primary)
        unreachable = set(self.units) - seen
        if unreachable:
            raise UCCAError("cycle in primary edges at unit %s" % min(unreachable))
        missing = set(self.terminal_by_id) - set(anchored)
        if missing:
            raise UCCAError("terminal %s is not anchored by any unit" % min(missing))

        # full graph (remote edges included) must stay acyclic
        state: dict[str, int] = {}
        for start in self.units:
            if start in state:
                continue
            state[start] = 1
            stack2 = [(start, iter(self.units[start].outgoing))]
            while stack2:
                uid, it = stack2[-1]
                edge = next(it, None)
                if edge is None:
                    state[uid] = 2
                    stack2.pop()
                    continue
                s = state.get(edge.child, 0)
                if s == 1:
                    raise UCCAError("cycle through edge %s->%s"
                                    % (edge.parent, edge.child))
                if s == 0:
                    state[edge.child] = 1
                    stack2.append((edge.child, iter(self.units[edge.child].outgoing)))

    def _document_order(self) -> dict:
        order = {}
        for uid in self.units:
            pos = self.yield_positions(uid, exclude_punct=False)
            order[uid] = (pos[0] if pos else self._anchor_position(uid),
                          -len(pos), _id_key(uid))
        return order

    def _anchor_position(self, uid: str) -> float:
        # implicit units sort right after the last token of their parent
        edge = self.primary_parent.get(uid)
        if edge is None:
            return 0
        pos = self.yield_positions(edge.parent, exclude_punct=False)
        return (pos[-1] + 0.5) if pos else self._anchor_position(edge.parent)

    # -- queries -------------------------------------------------------

    def unit(self, uid: str) -> Unit:
        try:
            return self.units[uid]
        except KeyError:
            raise KeyError("unknown unit id %r" % uid) from None

    def sort_key(self, uid: str):
        return self._order[uid]

    def ordered_units(self, include_root: bool = False) -> list:
        ids = sorted(self.units, key=self.sort_key)
        return ids if include_root else [u for u in ids if u != self.root]

    def children(self, uid: str, *cats: str, remote: Optional[bool] = False) -> list:
        """Outgoing edges of `uid`, optionally filtered by category.

        remote=False returns primary edges only, True remote only, None both.
        """
        out = []
        for e in self.unit(uid).outgoing:
            if remote is not None and e.remote != remote:
                continue
            if cats and not e.has(*cats):
                continue
            out.append(e)
        return sorted(out, key=lambda e: self.sort_key(e.child))

    def incoming(self, uid: str) -> list:
        self.unit(uid)
        edges = [self.primary_parent[uid]] if uid in self.primary_parent else []
        return edges + list(self.remote_parents.get(uid, ()))

    def incoming_categories(self, uid: str, primary_only: bool = True) -> frozenset:
        edges = self.incoming(uid)
        if primary_only:
            edges = [e for e in edges if not e.remote]
        return frozenset(c for e in edges for c in e.categories)

    def yield_positions(self, uid: str, exclude_punct: bool = True) -> tuple:
        positions = []
        stack = [uid]
        while stack:
            unit = self.unit(stack.pop())
            for tid in unit.terminals:
                t = self.terminal_by_id[tid]
                if not (exclude_punct and t.is_punct):
                    positions.append(t.position)
            stack.extend(e.child for e in unit.primary)
        return tuple(sorted(positions))

    def text(self, positions: Iterable[int]) -> str:
        return " ".join(self.terminals[p - 1].text for p in sorted(positions))

    def ancestors(self, uid: str) -> Iterator[str]:
        while uid in self.primary_parent:
            uid = self.primary_parent[uid].parent
            yield uid

    def multi_center(self, uid: str) -> bool:
        return len(self.children(uid, "C")) >= 2

    def remote_edges(self) -> list:
        edges = [e for es in self.remote_parents.values() for e in es]
        return sorted(edges, key=lambda e: (self.sort_key(e.parent), self.sort_key(e.child)))


def _id_key(uid: str):
    parts = []
    for piece in uid.replace(".", " ").split():
        parts.append((0, int(piece), "") if piece.isdigit() else (1, 0, piece))
    return tuple(parts)


def yield_span(p: Passage, uid: str, exclude_punct: bool = True) -> TokenSpan:
    """Terminal positions covered by `uid` through primary edges."""
    return TokenSpan(p.doc_id, p.yield_positions(uid, exclude_punct))


def is_scene(p: Passage, uid: str) -> bool:
    return bool(p.children(uid, "P", "S"))


def semantic_head(p: Passage, uid: str) -> tuple:
    """Head units of `uid`, found by descending Center, State and Process edges.

    Unanalyzable and implicit units are their own heads; a unit with several
    Centers gets one head per Center.  Result is in document order.
    """
    heads = []
    stack = [uid]
    while stack:
        cur = stack.pop()
        unit = p.unit(cur)
        edges = [] if unit.implicit or unit.unanalyzable else p.children(cur, *HEAD_CATEGORIES)
        if not edges:
            heads.append(cur)
        else:
            stack.extend(reversed([e.child for e in edges]))
    return tuple(sorted(set(heads), key=p.sort_key))


def head_positions(p: Passage, uid: str, exclude_punct: bool = True) -> tuple:
    pos = set()
    for h in semantic_head(p, uid):
        pos.update(p.yield_positions(h, exclude_punct))
    return tuple(sorted(pos))


def head_path(p: Passage, ancestor: str, uid: str) -> bool:
    """True if `uid` is reached from `ancestor` along C/S/P primary edges only."""
    cur = uid
    while cur != ancestor:
        edge = p.primary_parent.get(cur)
        if edge is None or not edge.has(*HEAD_CATEGORIES):
            return False
        if p.unit(edge.parent).unanalyzable:
            return False
        cur = edge.parent
    return uid != ancestor


# -- XML interchange -----------------------------------------------------

def _attrs(elem: ET.Element) -> dict:
    a = elem.find("attributes")
    return dict(a.attrib) if a is not None else {}


def _flag(value) -> bool:
    return str(value).strip().lower() in TRUE_VALUES


def _edge_categories(edge_elem: ET.Element) -> list:
    cats = [c.get("tag") for c in edge_elem.findall("category") if c.get("tag")]
    if not cats:
        etype = edge_elem.get("type", "")
        cats = [c for c in etype.replace("|", "+").split("+") if c]
    return cats


def parse_passage(xml_text: str, doc_id: Optional[str] = None) -> Passage:
    """Read a passage from the standard UCCA XML interchange format."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise UCCAError("malformed XML: %s" % exc) from None
    if root.tag != "root":
        raise UCCAError("expected <root> element, got <%s>" % root.tag)
    doc_id = doc_id or root.get("passageID") or "passage"

    layers = {layer.get("layerID"): layer for layer in root.findall("layer")}
    if "0" not in layers or "1" not in layers:
        raise UCCAError("passage %s needs layers 0 and 1" % doc_id)

    terminals = []
    for node in layers["0"].findall("node"):
        nid = node.get("ID", "")
        attrs = _attrs(node)
        try:
            position = int(attrs.get("position") or nid.split(".", 1)[1])
        except (IndexError, ValueError):
            raise UCCAError("terminal node %r has no numeric position" % nid) from None
        if nid in {t.id for t in terminals}:
            raise UCCAError("duplicate terminal id %s" % nid)
        terminals.append(Terminal(
            id=nid, position=position, text=attrs.get("text", ""),
            is_punct=node.get("type") == "Punctuation",
            paragraph=int(attrs.get("paragraph", 1))))
    terminal_ids = {t.id for t in terminals}

    nodes = [n for n in layers["1"].findall("node")
             if n.get("type") not in LINKAGE_NODE_TYPES]
    node_ids = [n.get("ID") for n in nodes]
    if len(set(node_ids)) != len(node_ids):
        raise UCCAError("duplicate unit id in layer 1")
    linkage_ids = {n.get("ID") for n in layers["1"].findall("node")
                   if n.get("type") in LINKAGE_NODE_TYPES}

    units = []
    for node in nodes:
        nid = node.get("ID")
        outgoing, anchored = [], []
        for e in node.findall("edge"):
            to = e.get("toID")
            cats = _edge_categories(e)
            if cats == [TERMINAL_EDGE]:
                if to not in terminal_ids:
                    raise UCCAError("edge %s->%s references unknown terminal %s"
                                    % (nid, to, to))
                anchored.append(to)
                continue
            if set(cats) <= LINKAGE_EDGE_TYPES or to in linkage_ids:
                continue
            outgoing.append(Edge(nid, to, frozenset(cats),
                                 remote=_flag(_attrs(e).get("remote", False))))
        attrs = _attrs(node)
        units.append(Unit(
            id=nid, implicit=_flag(attrs.get("implicit", False)),
            outgoing=tuple(outgoing), terminals=tuple(anchored),
            node_type=node.get("type", "FN")))

    known = {u.id for u in units}
    for u in units:
        for e in u.outgoing:
            if e.child not in known:
                raise UCCAError("edge %s->%s references unknown node %s"
                                % (e.parent, e.child, e.child))
    has_parent = {e.child for u in units for e in u.outgoing if not e.remote}
    roots = [u.id for u in units if u.id not in has_parent]
    if len(roots) != 1:
        raise UCCAError("expected exactly one layer-1 root, found %s"
                        % (", ".join(sorted(roots, key=_id_key)) or "none (cycle in primary edges)"))
    return Passage(doc_id, terminals, units, roots[0])


def to_xml(p: Passage) -> str:
    """Serialize to the standard UCCA XML format (stable, pretty-printed)."""
    root = ET.Element("root", passageID=p.doc_id, annotationID="0")
    ET.SubElement(root, "attributes")
    l0 = ET.SubElement(root, "layer", layerID="0")
    ET.SubElement(l0, "attributes")
    para_pos: dict[int, int] = {}
    for t in p.terminals:
        para_pos[t.paragraph] = para_pos.get(t.paragraph, 0) + 1
        node = ET.SubElement(l0, "node", ID=t.id,
                             type="Punctuation" if t.is_punct else "Word")
        ET.SubElement(node, "attributes", text=t.text, paragraph=str(t.paragraph),
                      paragraph_position=str(para_pos[t.paragraph]),
                      position=str(t.position))
    l1 = ET.SubElement(root, "layer", layerID="1")
    ET.SubElement(l1, "attributes")
    for uid in sorted(p.units, key=_id_key):
        unit = p.units[uid]
        node = ET.SubElement(l1, "node", ID=uid, type=unit.node_type)
        if unit.implicit:
            ET.SubElement(node, "attributes", implicit="True")
        else:
            ET.SubElement(node, "attributes")
        for e in unit.outgoing:
            cats = sorted(e.categories)
            edge = ET.SubElement(node, "edge", toID=e.child, type=cats[0])
            if e.remote:
                ET.SubElement(edge, "attributes", remote="True")
            else:
                ET.SubElement(edge, "attributes")
            if len(cats) > 1:
                for c in cats:
                    ET.SubElement(edge, "category", tag=c)
        for tid in unit.terminals:
            edge = ET.SubElement(node, "edge", toID=tid, type=TERMINAL_EDGE)
            ET.SubElement(edge, "attributes")
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def read_passage(path) -> Passage:
    from pathlib import Path
    path = Path(path)
    return parse_passage(path.read_text(encoding="utf-8"))
