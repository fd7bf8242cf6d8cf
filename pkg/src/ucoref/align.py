"""Greedy one-to-one alignment of mentions and referents, and P/R/F scoring.

Pairs are scored with the Dice coefficient over token positions and picked
best-first; an aligned item leaves the pool.  Picking stops once the best
remaining score drops below ``mu`` or reaches zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .spans import SpanLayer, SpanMention


class AlignmentError(ValueError):
    pass


def overlap_score(a: Sequence[int], b: Sequence[int], compat: bool = False) -> Fraction:
    """Dice coefficient 2|a∩b| / (|a|+|b|).

    With ``compat`` the factor 2 is left out, which caps the score at 1/2.
    """
    a = a.positions if hasattr(a, "positions") else a
    b = b.positions if hasattr(b, "positions") else b
    if not a or not b:
        raise AlignmentError("null spans cannot be scored")
    inter = len(set(a) & set(b))
    return Fraction(inter if compat else 2 * inter, len(a) + len(b))


@dataclass
class Alignment:
    pairs: list          # (index in A, index in B, score), in pick order
    unaligned_a: list
    unaligned_b: list
    mu: Fraction

    def matched(self) -> int:
        return len(self.pairs)

    def pair_set(self) -> set:
        return {(i, j) for i, j, _ in self.pairs}


def _pair_key(pos_a: tuple, pos_b: tuple) -> tuple:
    # symmetric in the two sides, so swapping A and B picks the same pairs
    lo, hi = sorted((pos_a, pos_b))
    return (min(pos_a[0], pos_b[0]), max(pos_a[0], pos_b[0]),
            len(pos_a) + len(pos_b), lo, hi)


def greedy(scored: Iterable, n_a: int, n_b: int, mu) -> Alignment:
    """Best-first one-to-one selection.

    `scored` holds (score, tie_key, i, j).  Pairs scoring 0 or below `mu`
    never qualify.
    """
    mu = Fraction(mu)
    if not 0 <= mu <= 1:
        raise AlignmentError("mu must lie in [0, 1], got %s" % mu)
    eligible = [s for s in scored if s[0] > 0 and s[0] >= mu]
    eligible.sort(key=lambda s: (-s[0], s[1], s[2], s[3]))
    used_a, used_b, pairs = set(), set(), []
    for score, _, i, j in eligible:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j, score))
    return Alignment(pairs, [i for i in range(n_a) if i not in used_a],
                     [j for j in range(n_b) if j not in used_b], mu)


def _check_docs(a: SpanLayer, b: SpanLayer) -> None:
    if a.doc_id != b.doc_id:
        raise AlignmentError("document id mismatch: %r vs %r" % (a.doc_id, b.doc_id))


def align_mentions(a: SpanLayer, b: SpanLayer, mu=0, compat: bool = False) -> Alignment:
    """Align the non-null mentions of two layers.

    Indices in the result refer to ``layer.mentions()`` order.
    """
    _check_docs(a, b)
    ma = [m for _, m in a.mentions()]
    mb = [m for _, m in b.mentions()]
    index_b: dict[int, list] = {}
    for j, m in enumerate(mb):
        for pos in m.positions:
            index_b.setdefault(pos, []).append(j)
    scored = []
    for i, x in enumerate(ma):
        for j in sorted({j for pos in x.positions for j in index_b.get(pos, ())}):
            y = mb[j]
            scored.append((overlap_score(x.positions, y.positions, compat),
                           _pair_key(x.positions, y.positions), i, j))
    return greedy(scored, len(ma), len(mb), mu)


def _cluster_index(layer: SpanLayer) -> tuple:
    """Map flattened mention index -> compact referent index (non-null clusters only)."""
    flat = layer.mentions()
    compact = {}
    for ci, _ in flat:
        compact.setdefault(ci, len(compact))
    members = [[] for _ in compact]
    for ci, m in flat:
        members[compact[ci]].append(m)
    return [compact[ci] for ci, _ in flat], members


def _cluster_positions(members: list) -> tuple:
    return tuple(sorted({p for m in members for p in m.positions}))


def align_referents(a: SpanLayer, b: SpanLayer, m: Alignment, mu=0,
                    method: str = "links", compat: bool = False) -> Alignment:
    """Align referents (clusters with at least one non-null mention).

    ``links`` scores a cluster pair by 2·(aligned mention pairs between them)
    / (|cluster A| + |cluster B|); ``tokens`` uses Dice over the clusters'
    token unions instead.
    """
    _check_docs(a, b)
    of_a, members_a = _cluster_index(a)
    of_b, members_b = _cluster_index(b)
    scored = []
    if method == "links":
        links: dict[tuple, int] = {}
        for i, j, _ in m.pairs:
            key = (of_a[i], of_b[j])
            links[key] = links.get(key, 0) + 1
        for (ca, cb), n in links.items():
            score = Fraction(n if compat else 2 * n, len(members_a[ca]) + len(members_b[cb]))
            scored.append((score, _pair_key(_cluster_positions(members_a[ca]),
                                            _cluster_positions(members_b[cb])), ca, cb))
    elif method == "tokens":
        for ca, xs in enumerate(members_a):
            pa = _cluster_positions(xs)
            for cb, ys in enumerate(members_b):
                pb = _cluster_positions(ys)
                if set(pa) & set(pb):
                    scored.append((overlap_score(pa, pb, compat), _pair_key(pa, pb), ca, cb))
    else:
        raise ValueError("unknown referent scoring method %r" % method)
    return greedy(scored, len(members_a), len(members_b), mu)


# -- scoring ---------------------------------------------------------------

@dataclass(frozen=True)
class PRF:
    n_a: int
    n_b: int
    matched: int

    @property
    def precision(self) -> float:
        return self.matched / self.n_a if self.n_a else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.n_b if self.n_b else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.n_a + other.n_a, self.n_b + other.n_b, self.matched + other.matched)


# (level, mention base, match) rows, in report order
GRID = (
    ("mention", "exact", "exact"),
    ("mention", "fuzzy", "fuzzy"),
    ("referent", "exact", "exact"),
    ("referent", "exact", "fuzzy"),
    ("referent", "fuzzy", "exact"),
    ("referent", "fuzzy", "fuzzy"),
)


@dataclass
class EvalReport:
    scheme: str = ""
    span_mode: str = "max"
    cells: dict = field(default_factory=dict)   # GRID row -> PRF

    def __add__(self, other: "EvalReport") -> "EvalReport":
        cells = {k: self.cells.get(k, PRF(0, 0, 0)) + other.cells.get(k, PRF(0, 0, 0))
                 for k in GRID}
        return EvalReport(self.scheme or other.scheme, self.span_mode, cells)

    def rows(self) -> list:
        out = []
        for key in GRID:
            level, base, match = key
            prf = self.cells.get(key, PRF(0, 0, 0))
            mode = match if level == "mention" else "%s-mentions/%s" % (base, match)
            out.append((self.scheme, self.span_mode, mode, level,
                        prf.precision, prf.recall, prf.f1))
        return out


TSV_HEADER = ("scheme", "span-mode", "match-mode", "level", "P", "R", "F")


def report_tsv(reports: Iterable[EvalReport]) -> str:
    lines = ["\t".join(TSV_HEADER)]
    for rep in reports:
        for scheme, mode, match, level, p, r, f in rep.rows():
            lines.append("\t".join((scheme, mode, match, level,
                                    "%.1f" % (100 * p), "%.1f" % (100 * r), "%.1f" % (100 * f))))
    return "\n".join(lines) + "\n"


def _dedupe(layer: SpanLayer) -> SpanLayer:
    """Count a unit once even if it appears more than once (remote duplicates)."""
    seen = set()
    clusters = []
    for c in layer.clusters:
        ms = []
        for m in c.mentions:
            key = (m.positions, m.source_unit) if m.source_unit else None
            if key is not None and key in seen:
                continue
            if key is not None:
                seen.add(key)
            ms.append(m)
        clusters.append(type(c)(c.label, tuple(ms)))
    return type(layer)(layer.doc_id, tuple(clusters))


def score(a: SpanLayer, b: SpanLayer, mu=0, compat: bool = False,
          referent_method: str = "links", scheme: str = "", span_mode: str = "max") -> EvalReport:
    """Mention and referent P/R/F of `a` (prediction) against `b` (reference)."""
    _check_docs(a, b)
    a, b = _dedupe(a), _dedupe(b)
    n_a, n_b = len(a.mentions()), len(b.mentions())
    r_a, r_b = len(_cluster_index(a)[1]), len(_cluster_index(b)[1])
    cells = {}
    bases = {"exact": align_mentions(a, b, mu=1),
             "fuzzy": align_mentions(a, b, mu=mu, compat=compat)}
    for base, m in bases.items():
        cells[("mention", base, base)] = PRF(n_a, n_b, m.matched())
        for match, threshold in (("exact", 1), ("fuzzy", mu)):
            ra = align_referents(a, b, m, mu=threshold, method=referent_method,
                                 compat=compat and match == "fuzzy")
            cells[("referent", base, match)] = PRF(r_a, r_b, ra.matched())
    return EvalReport(scheme, span_mode, cells)


def alignment_to_json(a: SpanLayer, b: SpanLayer, m: Alignment,
                      referents: Optional[Alignment] = None) -> str:
    fa, fb = a.mentions(), b.mentions()
    labels_a = [a.clusters[ci].label for ci, _ in fa]
    labels_b = [b.clusters[ci].label for ci, _ in fb]
    data = {
        "doc_id": a.doc_id,
        "mu": str(m.mu),
        "pairs": [{"a": list(fa[i][1].positions), "b": list(fb[j][1].positions),
                   "a_label": labels_a[i], "b_label": labels_b[j],
                   "score": str(s)} for i, j, s in m.pairs],
        "unaligned_a": [list(fa[i][1].positions) for i in m.unaligned_a],
        "unaligned_b": [list(fb[j][1].positions) for j in m.unaligned_b],
    }
    if referents is not None:
        ca = sorted({ci for ci, _ in fa})
        cb = sorted({ci for ci, _ in fb})
        data["referent_pairs"] = [{"a": a.clusters[ca[i]].label, "b": b.clusters[cb[j]].label,
                                   "score": str(s)} for i, j, s in referents.pairs]
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"
