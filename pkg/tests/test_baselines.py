import numpy as np
import pytest

from fairy.baselines import (METHODS, RandomWalkSimilarity, espresso_score,
                             pra_score, rex_global_score, score_corpus,
                             walker_for)
from fairy.errors import GraphError
from fairy.features import PathCorpus
from fairy.graph import invert_type
from fairy.paths import (ExplanationPath, build_pattern_stats,
                         enumerate_paths, pair_key, pattern_of)
from helpers import DenseWalker, espresso_oracle, pra_walks, random_graph


def reversed_path(p):
    return ExplanationPath(
        nodes=tuple(reversed(p.nodes)),
        edge_types=tuple(invert_type(et) for et in reversed(p.edge_types)),
        timestamps=tuple(reversed(p.timestamps)))


# -- pra ----------------------------------------------------------------------

def test_pra_hand_values(toy):
    paths = enumerate_paths(toy, "chemistry", 13, max_len=2, user="sam")
    scores = {p.nodes[1]: pra_score(toy, p, 13) for p in paths}
    # bomb-post files under two categories, so that walk halves
    assert scores == {"bomb-post": 0.5, "charlie": 1.0}


def test_pra_every_toy_explanation_is_forced(toy):
    # the fixture branches nowhere else: each step has exactly one choice
    for p in enumerate_paths(toy, "bomb-post", 13, max_len=4):
        assert pra_score(toy, p, 13) == 1.0


def test_pra_rejects_untraversable_step(toy):
    late = ExplanationPath(nodes=("charlie", "health-post"),
                           edge_types=("upvotes",), timestamps=(14,))
    assert pra_score(toy, late, 15) == 1.0
    with pytest.raises(GraphError, match="not traversable"):
        pra_score(toy, late, 13)


@pytest.mark.parametrize("seed", range(25))
def test_pra_matches_walk_enumeration(seed):
    g, item, seen_at, max_len = random_graph(seed, max_nodes=10)
    for p in enumerate_paths(g, item, seen_at, max_len=min(max_len, 3)):
        pattern = pattern_of(p, g)
        complete, stranded = pra_walks(g, pattern, p.nodes[0], seen_at)
        mass = {trail: prob for trail, prob in complete}
        assert p.nodes in mass
        assert pra_score(g, p, seen_at) == pytest.approx(mass[p.nodes], abs=1e-12)
        # probability is conserved across complete and stranded walks
        total = sum(prob for _, prob in complete) + \
            sum(prob for _, prob in stranded)
        assert total == pytest.approx(1.0, abs=1e-9)


# -- rex-global -----------------------------------------------------------------

def test_rex_global_is_one_minus_confidence(toy):
    one_pair = {pair_key("alice", "bomb-post", 13):
                enumerate_paths(toy, "bomb-post", 13, max_len=4)}
    stats = build_pattern_stats(one_pair, toy)
    for p in one_pair[pair_key("alice", "bomb-post", 13)]:
        assert rex_global_score(p, stats, toy) == 0.0

    two_pairs = dict(one_pair)
    two_pairs[pair_key("alice", "health-post", 13)] = \
        enumerate_paths(toy, "health-post", 13, max_len=4)
    stats2 = build_pattern_stats(two_pairs, toy)
    for paths in two_pairs.values():
        for p in paths:
            assert rex_global_score(p, stats2, toy) == 0.5


# -- random-walk similarity ------------------------------------------------------

def test_walker_vectors_are_distributions(toy):
    w = RandomWalkSimilarity(toy, seen_at=13)
    for n in ("alice", "bomb-post", "food"):
        v = w.vector(n)
        assert v.min() >= 0.0
        assert v.sum() == pytest.approx(1.0, abs=1e-9)


def test_walker_raw_is_symmetric(toy):
    w = RandomWalkSimilarity(toy, seen_at=13)
    assert w.raw("alice", "bomb-post") == w.raw("bomb-post", "alice")
    assert w.raw("alice", "alice") > 0.0


def test_walker_matches_dense_reference(toy):
    fast = RandomWalkSimilarity(toy, seen_at=13)
    slow = DenseWalker(toy, seen_at=13)
    fast.ensure(toy.nodes)  # exercise the batched code path
    for n in sorted(toy.nodes):
        got = fast.vector(n)
        want = slow.vector(n)
        for i, nid in enumerate(fast._ids):
            assert got[i] == pytest.approx(want[slow.idx[nid]], abs=1e-9)


def test_walker_sees_only_valid_edges(toy):
    before = RandomWalkSimilarity(toy, seen_at=13)
    after = RandomWalkSimilarity(toy, seen_at=15)
    # charlie's upvote exists only in the later view
    assert after.raw("charlie", "health-post") > before.raw("charlie", "health-post")


def test_walker_unknown_node(toy):
    with pytest.raises(GraphError):
        RandomWalkSimilarity(toy, seen_at=13).ensure(["nobody"])


def test_walker_for_caches_per_time(toy):
    assert walker_for(toy, 13) is walker_for(toy, 13)
    assert walker_for(toy, 13) is not walker_for(toy, 14)


# -- espresso ---------------------------------------------------------------------

def test_espresso_direct_edge_scores_one(toy):
    p = ExplanationPath(nodes=("sam", "bomb-post"), edge_types=("asks",),
                        timestamps=(7,))
    assert espresso_score(toy, p, 13) == 1.0


def test_espresso_in_unit_interval(toy):
    for p in enumerate_paths(toy, "bomb-post", 13, max_len=4):
        s = espresso_score(toy, p, 13)
        assert 0.0 <= s <= 1.0


def test_espresso_reversal_invariance(toy):
    for p in enumerate_paths(toy, "bomb-post", 13, max_len=4):
        assert espresso_score(toy, p, 13) == pytest.approx(
            espresso_score(toy, reversed_path(p), 13), abs=1e-12)


def test_espresso_center_agg_validated(toy):
    p = enumerate_paths(toy, "bomb-post", 13, max_len=4)[0]
    with pytest.raises(ValueError, match="center_agg"):
        espresso_score(toy, p, 13, center_agg="median")
    # mean pooling is a different statistic but stays in range
    s = espresso_score(toy, p, 13, center_agg="mean")
    assert 0.0 <= s <= 1.0


@pytest.mark.parametrize("seed", range(25))
def test_espresso_matches_dense_reference(seed):
    g, item, seen_at, max_len = random_graph(seed, max_nodes=12)
    slow = DenseWalker(g, seen_at)
    for p in enumerate_paths(g, item, seen_at, max_len=max_len):
        assert espresso_score(g, p, seen_at) == pytest.approx(
            espresso_oracle(g, p, seen_at, walker=slow), abs=1e-9)


# -- corpus scoring ----------------------------------------------------------------

def test_score_corpus_order_and_values(toy):
    instances = {
        pair_key("alice", "bomb-post", 13):
            enumerate_paths(toy, "bomb-post", 13, max_len=4),
        pair_key("alice", "health-post", 13):
            enumerate_paths(toy, "health-post", 13, max_len=4),
    }
    corpus = PathCorpus(toy, instances)
    for method in METHODS:
        rows = list(score_corpus(corpus, method))
        assert [(k, pid) for k, pid, _ in rows] == \
            [(k, p.id) for k, paths in instances.items() for p in paths]
        assert all(np.isfinite(v) for _, _, v in rows)
    espresso = {pid: v for _, pid, v in score_corpus(corpus, "espresso")}
    key = pair_key("alice", "bomb-post", 13)
    for p in instances[key]:
        assert espresso[p.id] == espresso_score(toy, p, 13)


def test_score_corpus_rejects_unknown_method(toy):
    with pytest.raises(ValueError, match="unknown method"):
        list(score_corpus(PathCorpus(toy, {}), "pagerank"))
