"""Turns explanation paths into fixed-length numeric vectors.

Five feature groups describe a path: the people on it ("user"), the
topics on it ("category"), the content on it ("item"), properties of
this specific walk ("instance") and corpus statistics of its type-level
shape ("pattern"). Group averages run over internal nodes only; the
endpoints are shared by every candidate path of a pair and carry no
ranking signal. Presence flags let a model tell a true zero from an
absent group.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import GraphError
from .graph import InteractionGraph, Schema, base_type, invert_type
from .paths import (ExplanationPath, PatternStats, build_pattern_stats,
                    parse_pair_key, pattern_of)
from .similarity import (TAXONOMY_EDGE, Similarity, TaxonomicSimilarity,
                         associated_categories, category_types)

FEATURE_GROUPS = ("user", "category", "item", "instance", "pattern")
FOLLOW_EDGE = "follows"
RECENCY_SENTINEL = float(2 ** 31)  # stands in when no edge on the path is dated

# which presence flags travel with which group when masking
GROUP_FLAGS = {
    "user": ("flag:users",),
    "category": ("flag:categories",),
    "item": ("flag:items",),
    "instance": ("flag:internal", "flag:timestamps"),
    "pattern": (),
}


@dataclass
class PathCorpus:
    """A graph plus per-pair mined paths, keyed by "user|item|seen_at"."""

    graph: InteractionGraph
    instances: dict[str, list[ExplanationPath]]

    def n_paths(self) -> int:
        return sum(len(v) for v in self.instances.values())


class TaxonomyView:
    """Depth and branching of the category taxonomy.

    Depth 0 is a root (a category with no parent); a category under
    several parents takes the smallest depth. A cyclic taxonomy has no
    consistent depth and is rejected.
    """

    def __init__(self, g: InteractionGraph, taxonomy_edge: str = TAXONOMY_EDGE,
                 cat_types: frozenset[str] | None = None):
        if cat_types is None:
            cat_types = category_types(g.schema, taxonomy_edge)
        self.cat_types = cat_types
        inverse = invert_type(taxonomy_edge)
        parents: dict[str, list[str]] = {}
        children: dict[str, int] = {}
        cats = [n for n in g.nodes.values() if n.node_type in cat_types]
        for node in cats:
            ps, kids = [], 0
            for e in g.out_edges(node.id):
                if g.nodes[e.target].node_type not in cat_types:
                    continue
                if e.edge_type == taxonomy_edge:
                    ps.append(e.target)
                elif e.edge_type == inverse:
                    kids += 1
            parents[node.id] = ps
            children[node.id] = kids
        depth: dict[str, int] = {c: 0 for c, ps in parents.items() if not ps}
        queue = deque(depth)
        inv = invert_type(taxonomy_edge)
        while queue:
            cur = queue.popleft()
            d = depth[cur] + 1
            for e in g.out_edges(cur):
                t = e.target
                if (e.edge_type == inv and g.nodes[t].node_type in cat_types
                        and t not in depth):
                    depth[t] = d
                    queue.append(t)
        missing = set(parents) - set(depth)
        if missing:
            raise GraphError(
                f"taxonomy contains a cycle through {sorted(missing)[:3]}")
        self._depth = depth
        self._children = children

    def depth(self, c: str) -> int:
        try:
            return self._depth[c]
        except KeyError:
            raise GraphError(f"{c!r} is not a category node") from None

    def child_count(self, c: str) -> int:
        try:
            return self._children[c]
        except KeyError:
            raise GraphError(f"{c!r} is not a category node") from None


def user_action_types(schema: Schema, user_type: str = "user") -> list[str]:
    """Edge types a user can initiate, in stable order."""
    return sorted({e for (s, e, _d) in schema.permitted_triples if s == user_type})


def feature_layout(schema: Schema, user_type: str = "user",
                   masked_groups: Sequence[str] = (),
                   include_node_type_counts: bool = True,
                   edge_count_mode: str = "per_type") -> list[str]:
    """Column names, in the exact order vectors are laid out."""
    bad = set(masked_groups) - set(FEATURE_GROUPS)
    if bad:
        raise ValueError(f"unknown feature groups {sorted(bad)}; "
                         f"expected subset of {FEATURE_GROUPS}")
    if edge_count_mode not in ("per_type", "per_base"):
        raise ValueError(f"edge_count_mode must be per_type or per_base, "
                         f"got {edge_count_mode!r}")
    masked = set(masked_groups)
    names: list[str] = []
    if "user" not in masked:
        names.append("user:link_ratio")
        names += [f"user:activity:{t}" for t in user_action_types(schema, user_type)]
    if "category" not in masked:
        names += ["category:popularity", "category:depth", "category:children"]
    if "item" not in masked:
        names += ["item:specificity", "item:engagement"]
    if "instance" not in masked:
        names += ["instance:sim_item", "instance:sim_user",
                  "instance:length", "instance:recency"]
        if schema.repeatable_edge_types:
            names.append("instance:mean_edge_weight")
    if "pattern" not in masked:
        names += ["pattern:frequency", "pattern:confidence"]
        if edge_count_mode == "per_type":
            for t in sorted(schema.edge_types):
                names.append(f"pattern:edges:{t}")
                names.append(f"pattern:edges:{invert_type(t)}")
        else:
            names += [f"pattern:edges:{t}" for t in sorted(schema.edge_types)]
        if include_node_type_counts:
            names += [f"pattern:nodes:{t}" for t in sorted(schema.node_types)]
    for group in FEATURE_GROUPS:
        if group not in masked:
            names += list(GROUP_FLAGS[group])
    return names


def _edge_group_weights(g: InteractionGraph) -> dict:
    """(src, edge_type, dst) -> [(timestamp, weight), ...], cached per graph."""
    cache = g._indexes()
    got = cache.get("edge_groups")
    if got is None:
        got = {}
        for e in g.edges():
            got.setdefault((e.source, e.edge_type, e.target), []).append(
                (e.timestamp, e.weight))
        cache["edge_groups"] = got
    return got


class PathFeaturizer(BaseEstimator, TransformerMixin):
    """Fits corpus-level state (pattern statistics, taxonomy shape) and
    transforms paths into feature matrices.

    Parameters mirror the layout switches: ``masked_groups`` removes
    whole groups (flags included), ``similarity`` swaps the node
    similarity provider (taxonomic by default), ``popularity_attr``
    names a node attribute to read category popularity from (node
    weight otherwise), ``user_aggregate`` picks mean or max pooling
    over a path's internal users.
    """

    def __init__(self, user_type: str = "user",
                 taxonomy_edge: str = TAXONOMY_EDGE,
                 follow_edge: str = FOLLOW_EDGE,
                 similarity: Similarity | None = None,
                 popularity_attr: str | None = None,
                 masked_groups: tuple = (),
                 include_node_type_counts: bool = True,
                 user_aggregate: str = "mean",
                 edge_count_mode: str = "per_type"):
        self.user_type = user_type
        self.taxonomy_edge = taxonomy_edge
        self.follow_edge = follow_edge
        self.similarity = similarity
        self.popularity_attr = popularity_attr
        self.masked_groups = masked_groups
        self.include_node_type_counts = include_node_type_counts
        self.user_aggregate = user_aggregate
        self.edge_count_mode = edge_count_mode

    # -- fitting ------------------------------------------------------------

    def fit(self, X: PathCorpus, y=None) -> "PathFeaturizer":
        if self.user_aggregate not in ("mean", "max"):
            raise ValueError(f"user_aggregate must be mean or max, "
                             f"got {self.user_aggregate!r}")
        g = X.graph
        schema = g.schema
        self.feature_names_ = feature_layout(
            schema, user_type=self.user_type, masked_groups=self.masked_groups,
            include_node_type_counts=self.include_node_type_counts,
            edge_count_mode=self.edge_count_mode)
        self.graph_ = g
        self.cat_types_ = category_types(schema, self.taxonomy_edge)
        self.user_action_types_ = user_action_types(schema, self.user_type)
        self.taxonomy_ = TaxonomyView(g, self.taxonomy_edge, self.cat_types_)
        self.similarity_ = (self.similarity if self.similarity is not None
                            else TaxonomicSimilarity(g, self.taxonomy_edge))
        self.pattern_stats_ = build_pattern_stats(X.instances, g)
        self.n_features_ = len(self.feature_names_)
        return self

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.feature_names_, dtype=object)

    # -- node-level helpers ---------------------------------------------------

    def _attr_float(self, node, key: str) -> float | None:
        raw = node.attributes.get(key)
        if raw is None:
            return None
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise GraphError(
                f"node {node.id!r} attribute {key!r} is not numeric: {raw!r}")

    def _link_ratio(self, n: str) -> float:
        g = self.graph_
        node = g.nodes[n]
        followers = self._attr_float(node, "followers")
        followees = self._attr_float(node, "followees")
        inv_follow = invert_type(self.follow_edge)
        if followers is None:
            followers = float(sum(
                1 for e in g.out_edges(n)
                if e.edge_type == inv_follow
                and g.nodes[e.target].node_type == self.user_type))
        if followees is None:
            followees = float(sum(
                1 for e in g.out_edges(n)
                if e.edge_type == self.follow_edge
                and g.nodes[e.target].node_type == self.user_type))
        return followers / max(1.0, followees)

    def _activity(self, n: str, action: str) -> float:
        return sum(e.weight for e in self.graph_.out_edges(n)
                   if e.edge_type == action and not e.is_inverse)

    def _popularity(self, c: str) -> float:
        node = self.graph_.nodes[c]
        if self.popularity_attr is not None:
            got = self._attr_float(node, self.popularity_attr)
            if got is not None:
                return got
        return node.weight

    def _specificity(self, i: str) -> float:
        return float(len(associated_categories(self.graph_, i, self.cat_types_)))

    def _engagement(self, i: str) -> float:
        g = self.graph_
        users = {e.target for e in g.out_edges(i)
                 if g.nodes[e.target].node_type == self.user_type}
        return float(len(users))

    # -- path vectors ---------------------------------------------------------

    def _values(self, user: str, item: str, seen_at: int,
                path: ExplanationPath) -> dict[str, float]:
        g = self.graph_
        internal = path.internal_nodes
        users = [n for n in internal if g.node_type(n) == self.user_type]
        cats = [n for n in internal if g.node_type(n) in self.cat_types_]
        items = [n for n in internal
                 if g.node_type(n) != self.user_type
                 and g.node_type(n) not in self.cat_types_]
        pool = max if self.user_aggregate == "max" else (
            lambda xs: sum(xs) / len(xs))

        vals: dict[str, float] = {}
        if users:
            vals["user:link_ratio"] = pool([self._link_ratio(n) for n in users])
            for t in self.user_action_types_:
                vals[f"user:activity:{t}"] = pool(
                    [self._activity(n, t) for n in users])
        else:
            vals["user:link_ratio"] = 0.0
            for t in self.user_action_types_:
                vals[f"user:activity:{t}"] = 0.0

        if cats:
            k = float(len(cats))
            vals["category:popularity"] = sum(self._popularity(c) for c in cats) / k
            vals["category:depth"] = sum(self.taxonomy_.depth(c) for c in cats) / k
            vals["category:children"] = sum(
                self.taxonomy_.child_count(c) for c in cats) / k
        else:
            vals["category:popularity"] = 0.0
            vals["category:depth"] = 0.0
            vals["category:children"] = 0.0

        if items:
            k = float(len(items))
            vals["item:specificity"] = sum(self._specificity(i) for i in items) / k
            vals["item:engagement"] = sum(self._engagement(i) for i in items) / k
        else:
            vals["item:specificity"] = 0.0
            vals["item:engagement"] = 0.0

        length = path.length
        if internal:
            denom = float(length - 1)
            vals["instance:sim_item"] = sum(
                self.similarity_.sim(n, item) for n in internal) / denom
            vals["instance:sim_user"] = sum(
                self.similarity_.sim(n, user) for n in internal) / denom
        else:
            vals["instance:sim_item"] = 0.0
            vals["instance:sim_user"] = 0.0
        vals["instance:length"] = float(length)
        dated = [seen_at - ts for ts in path.timestamps if ts is not None]
        vals["instance:recency"] = float(min(dated)) if dated else RECENCY_SENTINEL
        if g.schema.repeatable_edge_types:
            groups = _edge_group_weights(g)
            total = 0.0
            for a, et, b in zip(path.nodes, path.edge_types, path.nodes[1:]):
                try:
                    members = groups[(a, et, b)]
                except KeyError:
                    raise GraphError(
                        f"path step ({a!r},{et!r},{b!r}) has no edge in the graph")
                total += sum(w for ts, w in members
                             if ts is None or ts < seen_at)
            vals["instance:mean_edge_weight"] = total / length

        pat = pattern_of(path, g)
        vals["pattern:frequency"] = self.pattern_stats_.frequency(pat)
        vals["pattern:confidence"] = self.pattern_stats_.confidence(pat)
        if self.edge_count_mode == "per_type":
            for t in g.schema.edge_types:
                vals[f"pattern:edges:{t}"] = float(path.edge_types.count(t))
                ti = invert_type(t)
                vals[f"pattern:edges:{ti}"] = float(path.edge_types.count(ti))
        else:
            for t in g.schema.edge_types:
                vals[f"pattern:edges:{t}"] = float(
                    sum(1 for et in path.edge_types if base_type(et) == t))
        if self.include_node_type_counts:
            for t in g.schema.node_types:
                vals[f"pattern:nodes:{t}"] = float(
                    sum(1 for n in path.nodes if g.node_type(n) == t))

        vals["flag:users"] = 1.0 if users else 0.0
        vals["flag:categories"] = 1.0 if cats else 0.0
        vals["flag:items"] = 1.0 if items else 0.0
        vals["flag:internal"] = 1.0 if internal else 0.0
        vals["flag:timestamps"] = 1.0 if dated else 0.0
        return vals

    def vector(self, user: str, item: str, seen_at: int,
               path: ExplanationPath) -> np.ndarray:
        vals = self._values(user, item, seen_at, path)
        return np.array([vals[name] for name in self.feature_names_],
                        dtype=float)

    def transform_paths(self, user: str, item: str, seen_at: int,
                        paths: Sequence[ExplanationPath]) -> np.ndarray:
        """Feature matrix for one pair's candidate paths, row per path."""
        out = np.empty((len(paths), self.n_features_), dtype=float)
        for i, p in enumerate(paths):
            out[i] = self.vector(user, item, seen_at, p)
        return out

    def transform(self, X: PathCorpus) -> np.ndarray:
        """Feature matrix over the whole corpus; rows follow corpus order
        (see ``row_index``)."""
        blocks = []
        for key, paths in X.instances.items():
            user, item, seen_at = parse_pair_key(key)
            if paths:
                blocks.append(self.transform_paths(user, item, seen_at, paths))
        if not blocks:
            return np.empty((0, self.n_features_), dtype=float)
        return np.vstack(blocks)

    def row_index(self, X: PathCorpus) -> list[tuple[str, str]]:
        """(pair key, path id) per transform row, in matrix order."""
        return [(key, p.id) for key, paths in X.instances.items() for p in paths]
