"""Reference path scorers the learned ranker is compared against.

All three score a mined path; higher means "ranks first". They see the
same temporally valid slice of the graph the miner saw: edges dated on
or after the impression do not exist for them.

- "pra": probability of the path under pattern-constrained uniform
  random walks (product of reciprocal branching factors).
- "rex-global": rarity of the path's type-level shape, 1 - confidence.
- "espresso": random-walk cohesion of the path's interior with the
  user and the item.
"""
from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import sparse

from .errors import GraphError
from .features import PathCorpus
from .graph import InteractionGraph
from .paths import (ExplanationPath, PatternStats, build_pattern_stats,
                    parse_pair_key, pattern_of)

METHODS = ("pra", "rex-global", "espresso")

RESTART = 0.15
RWR_ITERATIONS = 10


def _valid(ts: int | None, seen_at: int) -> bool:
    return ts is None or ts < seen_at


# -- pattern-constrained walk probability ------------------------------------

def pra_score(g: InteractionGraph, path: ExplanationPath, seen_at: int) -> float:
    """Product over steps of 1 / (number of same-typed choices).

    At each node the walker picks uniformly among distinct neighbors
    reachable by that step's edge type that have that step's target
    node type, so the products over all complete walks of one pattern
    sum to 1.
    """
    prob = 1.0
    for src, et, dst in zip(path.nodes, path.edge_types, path.nodes[1:]):
        want_type = g.node_type(dst)
        choices = {e.target for e in g.out_edges(src)
                   if e.edge_type == et and _valid(e.timestamp, seen_at)
                   and g.nodes[e.target].node_type == want_type}
        if dst not in choices:
            raise GraphError(
                f"path step ({src!r},{et!r},{dst!r}) is not traversable "
                f"at t={seen_at}")
        prob /= len(choices)
    return prob


# -- pattern rarity -----------------------------------------------------------

def rex_global_score(path: ExplanationPath, stats: PatternStats,
                     g: InteractionGraph) -> float:
    """1 - confidence of the path's pattern: rarer shapes score higher."""
    return 1.0 - stats.confidence(pattern_of(path, g))


# -- random-walk cohesion -------------------------------------------------------

class RandomWalkSimilarity:
    """Symmetrized random walk with restart over the valid weighted graph.

    ``raw(a, b)`` averages the stationary mass b gets from a's walk and
    vice versa. Vectors are cached per source; ``ensure`` computes a
    batch of sources in one pass.
    """

    def __init__(self, g: InteractionGraph, seen_at: int,
                 restart: float = RESTART, iterations: int = RWR_ITERATIONS,
                 batch: int = 128):
        self.g = g
        self.seen_at = seen_at
        self.restart = restart
        self.iterations = iterations
        self.batch = batch
        self._ids = list(g.nodes)
        self._index = {nid: i for i, nid in enumerate(self._ids)}
        n = len(self._ids)
        weight: dict[tuple[int, int], float] = {}
        for src, edges in g.adjacency.items():
            si = self._index[src]
            for e in edges:
                if _valid(e.timestamp, seen_at):
                    key = (si, self._index[e.target])
                    weight[key] = weight.get(key, 0.0) + e.weight
        rows = np.fromiter((k[0] for k in weight), dtype=np.int64, count=len(weight))
        cols = np.fromiter((k[1] for k in weight), dtype=np.int64, count=len(weight))
        vals = np.fromiter(weight.values(), dtype=float, count=len(weight))
        W = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
        sums = np.asarray(W.sum(axis=1)).ravel()
        dead = sums == 0.0  # a walker stuck on an isolated node stays put
        if dead.any():
            idx = np.flatnonzero(dead)
            W = W + sparse.csr_matrix(
                (np.ones(len(idx)), (idx, idx)), shape=(n, n))
            sums = sums + dead
        inv = sparse.diags(1.0 / sums)
        self._PT = (inv @ W).T.tocsr()
        self._vectors: dict[str, np.ndarray] = {}

    def ensure(self, sources: Iterable[str]) -> None:
        missing = sorted({s for s in sources if s not in self._vectors})
        for s in missing:
            if s not in self._index:
                raise GraphError(f"no node {s!r} in graph")
        for start in range(0, len(missing), self.batch):
            chunk = missing[start:start + self.batch]
            n = len(self._ids)
            E = np.zeros((n, len(chunk)))
            for j, s in enumerate(chunk):
                E[self._index[s], j] = 1.0
            V = E.copy()
            for _ in range(self.iterations):
                V = (1.0 - self.restart) * (self._PT @ V) + self.restart * E
            for j, s in enumerate(chunk):
                self._vectors[s] = V[:, j].copy()

    def vector(self, source: str) -> np.ndarray:
        if source not in self._vectors:
            self.ensure([source])
        return self._vectors[source]

    def raw(self, a: str, b: str) -> float:
        va, vb = self.vector(a), self.vector(b)
        return (va[self._index[b]] + vb[self._index[a]]) / 2.0


def walker_for(g: InteractionGraph, seen_at: int) -> RandomWalkSimilarity:
    """Per-graph, per-impression-time walker cache."""
    cache = g._indexes().setdefault("rwr", {})
    got = cache.get(seen_at)
    if got is None:
        got = cache[seen_at] = RandomWalkSimilarity(g, seen_at)
    return got


def espresso_score(g: InteractionGraph, path: ExplanationPath, seen_at: int,
                   walker: RandomWalkSimilarity | None = None,
                   center_agg: str = "min") -> float:
    """Cohesion of the path interior, in [0, 1].

    The internal node most similar to both endpoints becomes the
    center (ties go to the smaller node id); the rest are scored
    against their already-chosen neighbor, walking outward. The final
    score is the mean node score, normalized by the largest raw
    similarity that the procedure looked at.
    """
    if center_agg not in ("min", "mean"):
        raise ValueError(f"center_agg must be min or mean, got {center_agg!r}")
    internal = path.internal_nodes
    if not internal:
        return 1.0  # a direct edge has no interior to doubt
    if walker is None:
        walker = walker_for(g, seen_at)
    user, item = path.nodes[0], path.nodes[-1]
    walker.ensure(set(internal) | {user, item})

    used: list[float] = []
    center_scores: list[float] = []
    for n in internal:
        to_user = walker.raw(n, user)
        to_item = walker.raw(n, item)
        used += [to_user, to_item]
        if center_agg == "min":
            center_scores.append(min(to_user, to_item))
        else:
            center_scores.append((to_user + to_item) / 2.0)
    best = max(center_scores)
    candidates = [i for i, s in enumerate(center_scores) if s == best]
    center_pos = min(candidates, key=lambda i: internal[i])

    node_scores = [0.0] * len(internal)
    node_scores[center_pos] = best
    for i in range(center_pos - 1, -1, -1):  # leftward, toward the user
        s = walker.raw(internal[i], internal[i + 1])
        node_scores[i] = s
        used.append(s)
    for i in range(center_pos + 1, len(internal)):  # rightward, toward the item
        s = walker.raw(internal[i], internal[i - 1])
        node_scores[i] = s
        used.append(s)

    m = max(used)
    if m == 0.0:
        return 0.0
    return float(np.mean(node_scores) / m)


# -- corpus scoring -------------------------------------------------------------

def score_corpus(corpus: PathCorpus, method: str,
                 stats: PatternStats | None = None,
                 center_agg: str = "min",
                 ) -> Iterator[tuple[str, str, float]]:
    """(pair key, path id, score) for every path, in corpus order."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    g = corpus.graph
    if method == "rex-global" and stats is None:
        stats = build_pattern_stats(corpus.instances, g)
    for key, paths in corpus.instances.items():
        _user, _item, seen_at = parse_pair_key(key)
        walker = walker_for(g, seen_at) if method == "espresso" else None
        for p in paths:
            if method == "pra":
                value = pra_score(g, p, seen_at)
            elif method == "rex-global":
                value = rex_global_score(p, stats, g)
            else:
                value = espresso_score(g, p, seen_at, walker=walker,
                                       center_agg=center_agg)
            yield key, p.id, value
