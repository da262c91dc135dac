"""Shared reference implementations for the test suite.

``oracle_paths`` is a deliberately naive enumerator (dict-based, no
interning, no pruning) kept independent of the production miner so the
two can be checked against each other.
"""
import random
from collections import defaultdict

import numpy as np

from fairy.graph import Schema, build_graph


def oracle_paths(g, source, item, seen_at, max_len):
    """Reference enumeration of valid simple paths, unsorted."""
    # merge parallel same-type edges into one relation: undated wins,
    # otherwise the earliest valid date
    rel = {}
    for e in g.edges():
        if e.timestamp is not None and e.timestamp >= seen_at:
            continue
        key = (e.source, e.target, e.edge_type)
        if key not in rel:
            rel[key] = e.timestamp
        elif e.timestamp is None:
            rel[key] = None
        elif rel[key] is not None and e.timestamp < rel[key]:
            rel[key] = e.timestamp
    out = defaultdict(list)
    for (s, d, t), ts in sorted(rel.items()):
        out[s].append((d, t, ts))

    results = []

    def rec(node, nodes, etypes, tss):
        if node == item and etypes:
            results.append((tuple(nodes), tuple(etypes), tuple(tss)))
            return
        if len(etypes) == max_len:
            return
        for d, t, ts in out[node]:
            if d != item and d in nodes:
                continue
            rec(d, nodes + [d], etypes + [t], tss + [ts])

    if source != item:
        rec(source, [source], [], [])
    return results


RANDOM_SCHEMA = Schema(
    node_types=frozenset({"u", "v", "w"}),
    edge_types=frozenset({"p", "q", "r"}),
    permitted_triples=frozenset(
        (a, e, b) for a in "uvw" for e in "pqr" for b in "uvw"),
    repeatable_edge_types=frozenset({"p", "q", "r"}),
)


def random_graph(seed, max_nodes=16):
    """Seeded random typed multigraph plus a mining task for it."""
    rng = random.Random(seed)
    n = rng.randint(4, max_nodes)
    types = [rng.choice("uvw") for _ in range(n)]
    nodes = [{"id": f"n{i}", "type": types[i], "is_user": i == 0,
              "weight": round(rng.random(), 3)} for i in range(n)]
    m = rng.randint(0, 3 * n)
    edges = []
    for i in range(m):
        ts = None if rng.random() < 0.3 else rng.randint(0, 20)
        edges.append({"src": f"n{rng.randrange(n)}", "dst": f"n{rng.randrange(n)}",
                      "type": rng.choice("pqr"), "ts": ts, "id": f"e{i}"})
    g = build_graph(RANDOM_SCHEMA, nodes, edges)
    item = f"n{rng.randint(1, n - 1)}"
    seen_at = rng.randint(1, 25)
    max_len = rng.randint(1, 5)
    return g, item, seen_at, max_len


def path_key_set(paths):
    """Comparable form for a path collection."""
    return {(p.nodes, p.edge_types, p.timestamps) for p in paths}


# -- baseline reference implementations (dense, unbatched, uncached) ----------

def pra_walks(g, pattern, source, seen_at):
    """Every pattern-constrained walk with its probability.

    Returns (complete, stranded): walks that followed the whole pattern
    and walks that died at a node with no matching choice. The two
    probability masses always sum to 1.
    """
    complete, stranded = [], []

    def rec(node, step, prob, trail):
        if step == len(pattern.edge_types):
            complete.append((tuple(trail), prob))
            return
        et = pattern.edge_types[step]
        nt = pattern.node_types[step + 1]
        choices = sorted({
            e.target for e in g.out_edges(node)
            if e.edge_type == et
            and (e.timestamp is None or e.timestamp < seen_at)
            and g.nodes[e.target].node_type == nt})
        if not choices:
            stranded.append((tuple(trail), prob))
            return
        for c in choices:
            rec(c, step + 1, prob / len(choices), trail + [c])

    rec(source, 0, 1.0, [source])
    return complete, stranded


class DenseWalker:
    """Dense-numpy random walk with restart, one vector at a time."""

    def __init__(self, g, seen_at, restart=0.15, iterations=10):
        self.ids = sorted(g.nodes)
        self.idx = {nid: i for i, nid in enumerate(self.ids)}
        n = len(self.ids)
        W = np.zeros((n, n))
        for e in g.edges():
            if e.timestamp is None or e.timestamp < seen_at:
                W[self.idx[e.source], self.idx[e.target]] += e.weight
        for i in range(n):
            if W[i].sum() == 0.0:
                W[i, i] = 1.0
        self.P = W / W.sum(axis=1, keepdims=True)
        self.restart = restart
        self.iterations = iterations
        self._memo = {}

    def vector(self, source):
        got = self._memo.get(source)
        if got is None:
            e = np.zeros(len(self.ids))
            e[self.idx[source]] = 1.0
            v = e.copy()
            for _ in range(self.iterations):
                v = (1.0 - self.restart) * (self.P.T @ v) + self.restart * e
            got = self._memo[source] = v
        return got

    def raw(self, a, b):
        return (self.vector(a)[self.idx[b]] + self.vector(b)[self.idx[a]]) / 2.0


def espresso_oracle(g, path, seen_at, walker=None):
    """Reference interior-cohesion score, mirroring the published recipe."""
    internal = list(path.nodes[1:-1])
    if not internal:
        return 1.0
    if walker is None:
        walker = DenseWalker(g, seen_at)
    u, f = path.nodes[0], path.nodes[-1]
    used, center = [], []
    for n in internal:
        tu, tf = walker.raw(n, u), walker.raw(n, f)
        used += [tu, tf]
        center.append(min(tu, tf))
    best = max(center)
    pos = min((i for i, s in enumerate(center) if s == best),
              key=lambda i: internal[i])
    scores = [0.0] * len(internal)
    scores[pos] = best
    for i in range(pos - 1, -1, -1):
        scores[i] = walker.raw(internal[i], internal[i + 1])
        used.append(scores[i])
    for i in range(pos + 1, len(internal)):
        scores[i] = walker.raw(internal[i], internal[i - 1])
        used.append(scores[i])
    m = max(used)
    return 0.0 if m == 0.0 else sum(scores) / len(scores) / m

