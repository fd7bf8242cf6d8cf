from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from ucoref.align import (
    GRID,
    PRF,
    AlignmentError,
    EvalReport,
    align_mentions,
    align_referents,
    alignment_to_json,
    overlap_score,
    report_tsv,
    score,
)
from ucoref.spans import SpanCluster, SpanLayer, SpanMention
from ucoref.ucca import TokenSpan


def layer(clusters, doc="d"):
    """clusters: list of lists of position tuples."""
    return SpanLayer(doc, tuple(
        SpanCluster("c%d" % k, tuple(SpanMention(TokenSpan(doc, tuple(sorted(ps)))) for ps in c))
        for k, c in enumerate(clusters) if c))


def flat(lay):
    return [m.positions for _, m in lay.mentions()]


spans = st.lists(st.integers(1, 8), min_size=1, max_size=4).map(lambda x: tuple(sorted(set(x))))
contiguous = st.tuples(st.integers(1, 8), st.integers(0, 3)).map(
    lambda x: tuple(range(x[0], min(8, x[0] + x[1]) + 1)))
any_span = st.one_of(spans, contiguous)


@st.composite
def layers(draw, max_mentions=6, unique=False):
    n = draw(st.integers(0, max_mentions))
    ms = draw(st.lists(any_span, min_size=n, max_size=n, unique=unique))
    ids = draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
    clusters = [[] for _ in range(3)]
    for m, c in zip(ms, ids):
        clusters[c].append(m)
    return layer(clusters)


mus = st.fractions(0, 1, max_denominator=12)


# -- overlap ---------------------------------------------------------------

def test_overlap_examples():
    assert overlap_score((3, 4, 5), (4, 5)) == Fraction(4, 5)
    assert overlap_score((1, 2), (1, 2)) == 1
    assert overlap_score((1,), (2,)) == 0
    assert overlap_score((3, 4, 5), (4, 5), compat=True) == Fraction(2, 5)


def test_overlap_null():
    with pytest.raises(AlignmentError):
        overlap_score((), (1,))


# -- mention alignment -------------------------------------------------------

def test_exact_pair_picked_first():
    a = layer([[tuple(range(1, 7))], [(10,)]])
    b = layer([[tuple(range(1, 8))], [(10,)]])
    al = align_mentions(a, b, 0)
    assert al.pairs[0] == (1, 1, 1)
    assert al.pair_set() == {(0, 0), (1, 1)}


def test_one_pair_for_shared_token():
    a = layer([[(1, 2), (2, 3)]])
    b = layer([[(2,)]])
    al = align_mentions(a, b, 0)
    assert al.matched() == 1
    assert al.pair_set() == oracles.exhaustive(flat(a), flat(b), 0)
    assert al.pair_set() == {(0, 0)}


def test_self_alignment_mu1():
    a = layer([[(1, 2), (4,)], [(6, 7, 8)]])
    al = align_mentions(a, a, 1)
    assert [s for _, _, s in al.pairs] == [1, 1, 1]
    assert al.unaligned_a == [] and al.unaligned_b == []


def test_doc_mismatch():
    with pytest.raises(AlignmentError):
        align_mentions(layer([[(1,)]], "x"), layer([[(1,)]], "y"))


def test_bad_mu():
    a = layer([[(1,)]])
    with pytest.raises(AlignmentError):
        align_mentions(a, a, Fraction(3, 2))


def test_disjoint_never_aligned():
    al = align_mentions(layer([[(1,)]]), layer([[(2,)]]), 0)
    assert al.matched() == 0


@settings(max_examples=1000, deadline=None)
@given(layers(), layers())
def test_mu1_is_exact_matching(a, b):
    al = align_mentions(a, b, 1)
    fa, fb = flat(a), flat(b)
    assert all(fa[i] == fb[j] and s == 1 for i, j, s in al.pairs)
    assert al.matched() == oracles.exact_matching_count(fa, fb)


@settings(max_examples=300, deadline=None)
@given(layers(), layers(), mus, mus)
def test_monotone_in_mu(a, b, x, y):
    lo, hi = min(x, y), max(x, y)
    assert align_mentions(a, b, lo).pair_set() >= align_mentions(a, b, hi).pair_set()


@settings(max_examples=300, deadline=None)
@given(layers(), layers(), mus)
def test_greedy_equals_best_first(a, b, mu):
    al = align_mentions(a, b, mu)
    assert al.pairs == oracles.best_first(flat(a), flat(b), mu)


@settings(max_examples=300, deadline=None)
@given(layers(), layers(), mus)
def test_greedy_equals_exhaustive(a, b, mu):
    assert align_mentions(a, b, mu).pair_set() == oracles.exhaustive(flat(a), flat(b), mu)


@settings(max_examples=300, deadline=None)
@given(layers(unique=True), layers(unique=True), mus)
def test_symmetric(a, b, mu):
    ab = align_mentions(a, b, mu).pair_set()
    ba = align_mentions(b, a, mu).pair_set()
    assert ab == {(i, j) for j, i in ba}


@settings(max_examples=300, deadline=None)
@given(layers(), layers(), mus)
def test_alignment_invariants(a, b, mu):
    al = align_mentions(a, b, mu)
    ia = [i for i, _, _ in al.pairs]
    jb = [j for _, j, _ in al.pairs]
    assert len(set(ia)) == len(ia) and len(set(jb)) == len(jb)
    scores = [s for _, _, s in al.pairs]
    assert all(s > 0 and s >= mu for s in scores)
    assert scores == sorted(scores, reverse=True)
    assert sorted(ia + al.unaligned_a) == list(range(len(flat(a))))


# -- referents -------------------------------------------------------------

def test_referent_two_thirds():
    a = layer([[(1,), (3,)]])
    b = layer([[(1,)]])
    r = align_referents(a, b, align_mentions(a, b, 0))
    assert r.pairs == [(0, 0, Fraction(2, 3))]


def test_referent_identity():
    a = layer([[(1,)], [(2,)]])
    r = align_referents(a, a, align_mentions(a, a, 1), 1)
    assert r.pair_set() == {(0, 0), (1, 1)}


def test_referent_tokens_method():
    a = layer([[(1, 2), (5,)]])
    b = layer([[(2,), (5, 6)]])
    r = align_referents(a, b, align_mentions(a, b, 0), method="tokens")
    assert r.pairs == [(0, 0, Fraction(2 * 2, 3 + 3))]


def test_referent_bad_method():
    a = layer([[(1,)]])
    with pytest.raises(ValueError):
        align_referents(a, a, align_mentions(a, a), method="ceaf")


def _cluster_scores(a, b, m):
    """Hand-rolled link-count Dice with the tie key over cluster token unions."""
    of_a = [ci for ci, c in enumerate(x for x in a.clusters) for _ in c.mentions]
    of_b = [ci for ci, c in enumerate(x for x in b.clusters) for _ in c.mentions]
    links = {}
    for i, j, _ in m.pairs:
        links[of_a[i], of_b[j]] = links.get((of_a[i], of_b[j]), 0) + 1
    out = {}
    for (ca, cb), n in links.items():
        pa = tuple(sorted({p for x in a.clusters[ca].mentions for p in x.positions}))
        pb = tuple(sorted({p for x in b.clusters[cb].mentions for p in x.positions}))
        s = Fraction(2 * n, len(a.clusters[ca].mentions) + len(b.clusters[cb].mentions))
        out[ca, cb] = (s, oracles.tie_key(pa, pb))
    return out


def test_referent_three_vs_two_fixture():
    a = layer([[(1,), (5,)], [(2, 3)], [(7,), (9,)]])
    b = layer([[(1,), (2, 3), (7,)], [(5,), (9,)]])
    m = align_mentions(a, b, 0)
    r = align_referents(a, b, m, 0)
    scores = _cluster_scores(a, b, m)
    assert r.pair_set() == oracles.referent_exhaustive(3, 2, scores, 0)
    assert r.pairs[0][2] == Fraction(1, 2)
    assert r.matched() == 2


@settings(max_examples=300, deadline=None)
@given(layers(), layers(), mus)
def test_referent_greedy_equals_exhaustive(a, b, mu):
    m = align_mentions(a, b, 0)
    r = align_referents(a, b, m, mu)
    scores = _cluster_scores(a, b, m)
    assert r.pair_set() == oracles.referent_exhaustive(len(a.clusters), len(b.clusters),
                                                       scores, mu)


# -- scoring --------------------------------------------------------------

def test_prf_formula():
    x = PRF(10, 8, 6)
    assert x.precision == pytest.approx(0.6)
    assert x.recall == pytest.approx(0.75)
    assert x.f1 == pytest.approx(2 / 3)
    assert PRF(0, 0, 0).f1 == 0.0


def test_report_tsv():
    a = layer([[(1,), (3,)]])
    text = report_tsv([score(a, a, scheme="self", span_mode="min")])
    lines = text.splitlines()
    assert lines[0] == "scheme\tspan-mode\tmatch-mode\tlevel\tP\tR\tF"
    assert len(lines) == 1 + len(GRID)
    assert all(line.endswith("100.0\t100.0\t100.0") for line in lines[1:])


def test_report_addition():
    a = layer([[(1,), (3,)]])
    b = layer([[(1,)]])
    total = score(a, b) + score(a, a)
    assert total.cells[("mention", "exact", "exact")] == PRF(4, 3, 3)
    assert isinstance(total, EvalReport)


def test_remote_duplicates_counted_once():
    dup = SpanMention(TokenSpan("d", (2,)), (), "ucoref", "1.5")
    a = SpanLayer("d", (SpanCluster("x", (dup, dup)),))
    b = layer([[(2,)]])
    assert score(a, b).cells[("mention", "exact", "exact")] == PRF(1, 1, 1)


@settings(max_examples=100, deadline=None)
@given(layers())
def test_self_score(a):
    rep = score(a, a)
    for key in GRID:
        cell = rep.cells[key]
        if cell.n_a:
            assert (cell.precision, cell.recall, cell.f1) == (1.0, 1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(layers(), layers())
def test_fuzzy_recall_at_least_exact(a, b):
    c = score(a, b).cells
    assert c["mention", "fuzzy", "fuzzy"].recall >= c["mention", "exact", "exact"].recall
    for base in ("exact", "fuzzy"):
        assert c["referent", base, "fuzzy"].recall >= c["referent", base, "exact"].recall
    assert c["referent", "fuzzy", "fuzzy"].recall >= c["referent", "exact", "exact"].recall
    assert c["referent", "fuzzy", "exact"].recall >= c["referent", "exact", "exact"].recall


def test_alignment_json():
    a = layer([[(1,), (3,)]])
    b = layer([[(1,)]])
    m = align_mentions(a, b)
    text = alignment_to_json(a, b, m, align_referents(a, b, m))
    assert '"score": "2/3"' in text
