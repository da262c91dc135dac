"""Node-to-node similarity providers used by the path featurizer.

Both providers return values in [0, 1] and treat ``sim(a, a)`` as 1.
They bridge heterogeneous node types by mapping every node onto the
categories it is associated with: a category stands for itself, any
other node for the categories it links to directly (items via their
"belongs to" targets, users via the categories they follow).
"""
from __future__ import annotations

import json
from collections import deque
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .errors import GraphError
from .graph import InteractionGraph, Schema, base_type, read_jsonl

TAXONOMY_EDGE = "belongs to"


class Similarity(Protocol):
    def sim(self, a: str, b: str) -> float: ...


def category_types(schema: Schema, taxonomy_edge: str = TAXONOMY_EDGE) -> frozenset[str]:
    """Node types that form the taxonomy: types X permitted to nest via
    (X, taxonomy_edge, X)."""
    return frozenset(t for (s, e, d) in schema.permitted_triples
                     if e == taxonomy_edge and s == d for t in (s,))


def associated_categories(g: InteractionGraph, n: str,
                          cat_types: frozenset[str]) -> frozenset[str]:
    """Category nodes a node stands for (itself, if it is one)."""
    node = g.node(n)
    if node.node_type in cat_types:
        return frozenset((n,))
    return frozenset(e.target for e in g.out_edges(n)
                     if g.nodes[e.target].node_type in cat_types)


class TaxonomicSimilarity:
    """1 / (1 + d) where d is the smallest hop distance between any two
    categories the nodes are associated with, measured on the taxonomy
    treated as undirected. Unrelated or category-less nodes score 0."""

    def __init__(self, g: InteractionGraph, taxonomy_edge: str = TAXONOMY_EDGE):
        self.g = g
        self.taxonomy_edge = taxonomy_edge
        self.cat_types = category_types(g.schema, taxonomy_edge)
        self._assoc: dict[str, frozenset[str]] = {}
        self._dist: dict[str, dict[str, int]] = {}

    def _associated(self, n: str) -> frozenset[str]:
        got = self._assoc.get(n)
        if got is None:
            got = self._assoc[n] = associated_categories(self.g, n, self.cat_types)
        return got

    def _distances_from(self, c: str) -> dict[str, int]:
        got = self._dist.get(c)
        if got is not None:
            return got
        g = self.g
        dist = {c: 0}
        queue = deque([c])
        while queue:
            cur = queue.popleft()
            for e in g.out_edges(cur):
                if base_type(e.edge_type) != self.taxonomy_edge:
                    continue
                t = e.target
                if g.nodes[t].node_type in self.cat_types and t not in dist:
                    dist[t] = dist[cur] + 1
                    queue.append(t)
        self._dist[c] = dist
        return dist

    def taxonomy_distance(self, a: str, b: str) -> int | None:
        """Hop distance between two nodes' nearest associated categories."""
        ca, cb = self._associated(a), self._associated(b)
        if not ca or not cb:
            return None
        best: int | None = None
        for c in ca:
            dist = self._distances_from(c)
            for other in cb:
                d = dist.get(other)
                if d is not None and (best is None or d < best):
                    best = d
        return best

    def sim(self, a: str, b: str) -> float:
        if a == b:
            self.g.node(a)
            return 1.0
        d = self.taxonomy_distance(a, b)
        if d is None:
            return 0.0
        return 1.0 / (1.0 + d)


class EmbeddingSimilarity:
    """Cosine similarity over node vectors, rescaled to [0, 1].

    Nodes without their own vector borrow the mean vector of their
    associated categories. When even that fails, ``fallback`` (another
    similarity provider) answers instead, or 0 without one.
    """

    def __init__(self, g: InteractionGraph,
                 vectors: Mapping[str, Sequence[float]],
                 taxonomy_edge: str = TAXONOMY_EDGE,
                 fallback: Similarity | None = None):
        self.g = g
        self.cat_types = category_types(g.schema, taxonomy_edge)
        self.fallback = fallback
        dims = {len(v) for v in vectors.values()}
        if len(dims) > 1:
            raise GraphError(f"embedding vectors have mixed dimensions {sorted(dims)}")
        self._vectors = {k: np.asarray(v, dtype=float) for k, v in vectors.items()}
        self._derived: dict[str, np.ndarray | None] = {}

    def vector_for(self, n: str) -> np.ndarray | None:
        v = self._vectors.get(n)
        if v is not None:
            return v
        if n in self._derived:
            return self._derived[n]
        cats = associated_categories(self.g, n, self.cat_types)
        have = [self._vectors[c] for c in sorted(cats) if c in self._vectors]
        out = np.mean(have, axis=0) if have else None
        self._derived[n] = out
        return out

    def sim(self, a: str, b: str) -> float:
        if a == b:
            self.g.node(a)
            return 1.0
        va, vb = self.vector_for(a), self.vector_for(b)
        if va is None or vb is None:
            return self.fallback.sim(a, b) if self.fallback is not None else 0.0
        na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
        if na == 0.0 or nb == 0.0:
            return 0.0
        cos = float(np.dot(va, vb) / (na * nb))
        cos = max(-1.0, min(1.0, cos))
        return (cos + 1.0) / 2.0


def load_embeddings(path: str | Path) -> dict[str, list[float]]:
    """Read node vectors from JSON Lines of {"id", "vector"}."""
    out: dict[str, list[float]] = {}
    for rec in read_jsonl(path):
        try:
            nid, vec = str(rec["id"]), [float(x) for x in rec["vector"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"bad embedding record {rec!r}: {exc}") from exc
        if nid in out:
            raise GraphError(f"duplicate embedding for {nid!r}")
        out[nid] = vec
    return out


def save_embeddings(vectors: Mapping[str, Sequence[float]],
                    path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for nid, vec in vectors.items():
            fh.write(json.dumps({"id": nid, "vector": list(map(float, vec))}) + "\n")
