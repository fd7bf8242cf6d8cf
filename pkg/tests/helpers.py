"""Compact passage builder for tests.

A node is ``(categories, content)`` or ``(categories, content, name)``.
``categories`` is a tag string, several tags joined by ``|``.  ``content`` is
a string of space-separated tokens (one token makes a leaf, several make an
unanalyzable unit), a list of child nodes, or ``None`` for an implicit unit.
Remote edges are ``(parent name, child name, category)``.
"""

import xml.etree.ElementTree as ET

from ucoref.ucca import parse_passage

PUNCT = set(".,?!;:")


def passage_xml(doc_id, nodes, remotes=(), paragraphs=None):
    root = ET.Element("root", passageID=doc_id)
    l0 = ET.SubElement(root, "layer", layerID="0")
    l1 = ET.SubElement(root, "layer", layerID="1")
    names = {}
    counter = {"t": 0, "u": 1}
    units = []

    def terminal(text):
        counter["t"] += 1
        k = counter["t"]
        para = paragraphs[k - 1] if paragraphs else 1
        node = ET.SubElement(l0, "node", ID="0.%d" % k,
                             type="Punctuation" if text in PUNCT else "Word")
        ET.SubElement(node, "attributes", text=text, paragraph=str(para),
                      paragraph_position=str(k))
        return "0.%d" % k, text in PUNCT

    def unit(node_def):
        cats, content = node_def[0], node_def[1]
        counter["u"] += 1
        uid = "1.%d" % counter["u"]
        node = ET.Element("node", ID=uid, type="FN")
        units.append((counter["u"], node))
        if len(node_def) > 2:
            names[node_def[2]] = uid
        if content is None:
            ET.SubElement(node, "attributes", implicit="True")
        elif isinstance(content, str):
            for tok in content.split():
                tid, punct = terminal(tok)
                if punct:
                    node.set("type", "PNCT")
                ET.SubElement(node, "edge", toID=tid, type="Terminal")
        else:
            for child in content:
                add_edge(node, child[0], unit(child))
        return uid

    def add_edge(node, cats, child_id, remote=False):
        tags = cats.split("|")
        edge = ET.SubElement(node, "edge", toID=child_id, type=tags[0])
        if remote:
            ET.SubElement(edge, "attributes", remote="True")
        if len(tags) > 1:
            for t in tags:
                ET.SubElement(edge, "category", tag=t)

    top = ET.Element("node", ID="1.1", type="FN")
    units.append((1, top))
    for child in nodes:
        add_edge(top, child[0], unit(child))
    by_id = {uid: node for _, node in units for uid in [node.get("ID")]}
    for parent, child, cat in remotes:
        add_edge(by_id[names[parent]], cat, names[child], remote=True)
    for _, node in sorted(units, key=lambda x: x[0]):
        l1.append(node)
    return ET.tostring(root, encoding="unicode"), names


def build(doc_id, nodes, remotes=(), paragraphs=None):
    """(Passage, name -> unit id)."""
    xml, names = passage_xml(doc_id, nodes, remotes, paragraphs)
    return parse_passage(xml), names


# -- layer mutations ----------------------------------------------------------

def _relabel(layer, moves, extra=()):
    """Rebuild `layer` with unit -> label moves and extra (Mention, label) pairs."""
    from ucoref.layer import CorefLayer, Referent

    groups = {}
    for r in layer.referents:
        for m in r.mentions:
            groups.setdefault(moves.get(m.unit, r.label), []).append(m)
    for m, label in extra:
        groups.setdefault(label, []).append(m)
    return CorefLayer(layer.doc_id, tuple(Referent(k, tuple(v)) for k, v in groups.items()))


def mutation_sites(p, layer):
    """(kind, units) for every structural violation that can be injected."""
    from ucoref.layer import mention_for_unit

    ref = layer.referent_of()
    sites = []
    for uid in sorted(ref, key=p.sort_key):
        centers = p.children(uid, "C")
        if len(centers) == 1:
            c = centers[0].child
            mention = layer.mentions.get(c) or mention_for_unit(p, c)
            sites.append(("center-coref", (uid, c), mention))
        elif len(centers) > 1:
            conj = [e.child for e in centers if e.child in ref]
            for i, a in enumerate(conj):
                for b in conj[i + 1:]:
                    sites.append(("conjunct-merge", (a, b), None))
    return sites


def mutate(p, layer, site, rng):
    """Inject one violation; returns the mutated layer."""
    kind, (x, y), mention = site
    ref = layer.referent_of()
    if kind == "conjunct-merge":
        return _relabel(layer, {y: ref[x]})
    labels = sorted({r.label for r in layer.referents} - {ref[x]})
    target = rng.choice(labels + ["mut-%d" % rng.randrange(1000)])
    if y in ref:
        return _relabel(layer, {y: target})
    return _relabel(layer, {}, extra=[(mention, target)])


def mutated_layers(fixtures, n, seed=0):
    """`n` (passage, layer, expected rule, units) mutants over (p, layer) fixtures."""
    import random

    rng = random.Random(seed)
    pool = [(p, layer, site) for p, layer in fixtures for site in mutation_sites(p, layer)]
    out = []
    while len(out) < n:
        p, layer, site = pool[len(out) % len(pool)] if len(out) < len(pool) else rng.choice(pool)
        out.append((p, mutate(p, layer, site, rng), site[0], site[1]))
    return out


NOUNS = ["Ivy", "William", "book", "dog", "city", "river", "house", "tree"]
VERBS = ["met", "saw", "left", "read", "found"]


def synthetic_gold(seed):
    """A random passage of scenes over plain and coordinated noun phrases,
    with a guideline-clean decision file."""
    import random

    from ucoref.mentions import DecisionFile

    rng = random.Random(seed)
    scenes = []
    coords = []
    for s in range(rng.randint(2, 4)):
        args = []
        for a in range(rng.randint(1, 2)):
            name = "s%da%d" % (s, a)
            shape = rng.choice(["leaf", "np", "coord"])
            if shape == "leaf":
                args.append(("A", rng.choice(NOUNS), name))
            elif shape == "np":
                args.append(("A", [("E", "old"), ("C", rng.choice(NOUNS))], name))
            else:
                x, y = rng.sample(NOUNS, 2)
                args.append(("A", [("C", x, name + "x"), ("N", rng.choice(["and", "or"])),
                                   ("C", y, name + "y")], name))
                coords.append(name)
        scenes.append(("H", args[:1] + [("P", rng.choice(VERBS))] + args[1:], "s%d" % s))
        scenes.append(("U", "."))
    xml, names = passage_xml("syn%d" % seed, scenes)
    p = parse_passage(xml)
    coordination = {names[c]: rng.choice(["whole_unit_referring", "conjuncts_only"])
                    for c in coords}
    d = DecisionFile(p.doc_id, coordination=coordination)
    from ucoref.mentions import identify_mentions

    mentions = identify_mentions(p, d)
    clusters = {}
    for uid in sorted(mentions, key=p.sort_key):
        label = rng.choice(["r0", "r1", "r2", None])
        if label is None:
            continue
        edge = p.primary_parent.get(uid)
        if edge is not None and p.multi_center(edge.parent) and edge.has("C"):
            sibs = {e.child for e in p.children(edge.parent, "C")}
            if any(clusters.get(s) == label for s in sibs):
                continue
        clusters[uid] = label
    d.clusters = clusters
    return p, d
