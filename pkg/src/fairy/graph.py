"""Schema-validated heterogeneous interaction graphs built from event logs.

A graph holds one user's local neighborhood: typed, weighted nodes and
typed, weighted, timestamped multi-edges. Every ingested edge gets a
synthesized inverse twin so traversal is bidirectional. Graphs are
immutable after construction and safe to share across threads.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import GraphError, SchemaError

INVERSE_SUFFIX = "⁻¹"  # superscript -1, appended to inverse edge types


def is_inverse_type(edge_type: str) -> bool:
    return edge_type.endswith(INVERSE_SUFFIX)


def invert_type(edge_type: str) -> str:
    """follows -> follows⁻¹ and back."""
    if is_inverse_type(edge_type):
        return edge_type[: -len(INVERSE_SUFFIX)]
    return edge_type + INVERSE_SUFFIX


def base_type(edge_type: str) -> str:
    """Edge type with any inverse marker stripped."""
    if is_inverse_type(edge_type):
        return edge_type[: -len(INVERSE_SUFFIX)]
    return edge_type


@dataclass(frozen=True)
class Schema:
    """Permitted node types, edge (action) types and their triples.

    ``repeatable_edge_types`` marks actions that may be performed more than
    once on the same target (edge weight then counts repetitions).
    """

    node_types: frozenset[str]
    edge_types: frozenset[str]
    permitted_triples: frozenset[tuple[str, str, str]]
    repeatable_edge_types: frozenset[str] = frozenset()
    platform_name: str = ""

    def __post_init__(self):
        if not self.node_types:
            raise SchemaError("schema declares no node types")
        for name in list(self.node_types) + list(self.edge_types):
            if not name or not name.strip():
                raise SchemaError("empty type name in schema")
            if INVERSE_SUFFIX in name:
                raise SchemaError(
                    f"type name {name!r} contains the reserved inverse marker")
        for src, et, dst in self.permitted_triples:
            if src not in self.node_types:
                raise SchemaError(f"triple references undeclared node type {src!r}")
            if dst not in self.node_types:
                raise SchemaError(f"triple references undeclared node type {dst!r}")
            if et not in self.edge_types:
                raise SchemaError(f"triple references undeclared edge type {et!r}")
        extra = self.repeatable_edge_types - self.edge_types
        if extra:
            raise SchemaError(f"repeatable lists undeclared edge types {sorted(extra)}")

    def allows(self, src_type: str, edge_type: str, dst_type: str) -> bool:
        """True if the forward-oriented triple is permitted."""
        return (src_type, edge_type, dst_type) in self.permitted_triples

    def to_dict(self) -> dict:
        return {
            "platform": self.platform_name,
            "node_types": sorted(self.node_types),
            "edge_types": sorted(self.edge_types),
            "triples": sorted([list(t) for t in self.permitted_triples]),
            "repeatable": sorted(self.repeatable_edge_types),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Schema":
        try:
            node_types = list(data["node_types"])
            edge_types = list(data["edge_types"])
            triples = [tuple(t) for t in data["triples"]]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc}") from exc
        for seq, label in ((node_types, "node"), (edge_types, "edge")):
            if len(seq) != len(set(seq)):
                raise SchemaError(f"duplicate {label} type names")
        for t in triples:
            if len(t) != 3:
                raise SchemaError(f"triple {t!r} does not have 3 elements")
        return cls(
            node_types=frozenset(node_types),
            edge_types=frozenset(edge_types),
            permitted_triples=frozenset(triples),
            repeatable_edge_types=frozenset(data.get("repeatable", [])),
            platform_name=str(data.get("platform", "")),
        )


def load_schema(path: str | Path) -> Schema:
    """Read and validate a schema JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read schema {path}: {exc}") from exc
    return Schema.from_dict(data)


def bundled_schema(name: str) -> Schema:
    """Load one of the schemas shipped with the package (quora, lastfm)."""
    from importlib import resources

    ref = resources.files("fairy.schemas").joinpath(f"{name}.json")
    try:
        data = json.loads(ref.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise SchemaError(f"no bundled schema named {name!r}") from exc
    return Schema.from_dict(data)


@dataclass(frozen=True)
class Node:
    id: str
    node_type: str
    weight: float = 0.0
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.weight < 0:
            raise GraphError(f"node {self.id!r} has negative weight")


@dataclass(frozen=True)
class Edge:
    """One directed edge. Inverse edges are synthesized, never ingested."""

    id: str
    source: str
    target: str
    edge_type: str
    weight: float = 1.0
    timestamp: int | None = None  # epoch seconds of the FIRST occurrence
    is_inverse: bool = False

    def __post_init__(self):
        if self.weight < 0:
            raise GraphError(f"edge {self.id!r} has negative weight")

    def inverted(self) -> "Edge":
        return Edge(
            id=self.id + INVERSE_SUFFIX,
            source=self.target,
            target=self.source,
            edge_type=invert_type(self.edge_type),
            weight=self.weight,
            timestamp=self.timestamp,
            is_inverse=not self.is_inverse,
        )


class InteractionGraph:
    """Immutable snapshot of one user's neighborhood.

    ``adjacency`` maps node id -> outgoing edges (forward and inverse).
    Mutation means rebuilding; derived graphs carry ``revision + 1``.
    """

    __slots__ = ("schema", "nodes", "adjacency", "user", "revision",
                 "_index", "_explicit_edge_ids")

    def __init__(self, schema: Schema, nodes: dict[str, Node],
                 adjacency: dict[str, list[Edge]], user: str,
                 revision: int = 0,
                 explicit_edge_ids: frozenset[str] = frozenset()):
        self.schema = schema
        self.nodes = nodes
        self.adjacency = adjacency
        self.user = user
        self.revision = revision
        self._index: dict | None = None  # lazy caches, see _indexes()
        self._explicit_edge_ids = explicit_edge_ids

    # -- basic accessors ---------------------------------------------------

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.nodes

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise GraphError(f"no node {node_id!r} in graph") from None

    def node_type(self, node_id: str) -> str:
        return self.node(node_id).node_type

    def out_edges(self, node_id: str) -> list[Edge]:
        self.node(node_id)
        return self.adjacency.get(node_id, [])

    def edges(self, forward_only: bool = False) -> Iterator[Edge]:
        for edges in self.adjacency.values():
            for e in edges:
                if forward_only and e.is_inverse:
                    continue
                yield e

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        """Directed edge count, inverses included."""
        return sum(len(v) for v in self.adjacency.values())

    # -- shared lazy caches -------------------------------------------------

    def _indexes(self) -> dict:
        """Per-graph caches used by the miner and scorers; safe because
        the graph is immutable."""
        if self._index is None:
            self._index = {}
        return self._index


def degree(g: InteractionGraph, n: str, edge_type: str | None = None,
           target_type: str | None = None) -> int:
    """Outgoing-edge count of ``n``, optionally filtered by edge type
    and/or target node type. Inverse types are matched literally, so
    filtering on "follows" never counts "follows⁻¹" edges."""
    count = 0
    for e in g.out_edges(n):
        if edge_type is not None and e.edge_type != edge_type:
            continue
        if target_type is not None and g.nodes[e.target].node_type != target_type:
            continue
        count += 1
    return count


def _bfs_distances(g: InteractionGraph, start: str) -> dict[str, int]:
    dist = {start: 0}
    queue = deque([start])
    adjacency = g.adjacency
    while queue:
        cur = queue.popleft()
        d = dist[cur] + 1
        for e in adjacency.get(cur, ()):
            if e.target not in dist:
                dist[e.target] = d
                queue.append(e.target)
    return dist


def eccentricity(g: InteractionGraph, n: str) -> int:
    """Greatest geodesic distance from ``n`` to any node it can reach.

    Distances run over the bidirectional adjacency (inverse edges
    included), so the measure matches undirected hop distance.
    """
    g.node(n)
    dist = _bfs_distances(g, n)
    return max((d for nid, d in dist.items() if nid != n), default=0)


def ego_subgraph(g: InteractionGraph, center: str, radius: int) -> InteractionGraph:
    """Induced subgraph of all nodes within ``radius`` hops of ``center``.

    The center becomes the focal user of the result.
    """
    g.node(center)
    if radius < 0:
        raise GraphError("radius must be >= 0")
    dist = _bfs_distances(g, center)
    keep = {nid for nid, d in dist.items() if d <= radius}
    nodes = {nid: g.nodes[nid] for nid in keep}
    adjacency: dict[str, list[Edge]] = {nid: [] for nid in keep}
    for nid in keep:
        for e in g.adjacency.get(nid, ()):
            if e.target in keep:
                adjacency[nid].append(e)
    return InteractionGraph(
        schema=g.schema, nodes=nodes, adjacency=adjacency, user=center,
        revision=g.revision + 1,
        explicit_edge_ids=g._explicit_edge_ids,
    )


def _default_edge_id(src: str, edge_type: str, dst: str) -> str:
    return f"{src}|{edge_type}|{dst}"


def build_graph(schema: Schema, node_records: Iterable[Mapping],
                edge_records: Iterable[Mapping]) -> InteractionGraph:
    """Build a validated graph from node/edge record streams.

    Records follow the JSON Lines formats: nodes
    ``{"id","type","weight","attrs","is_user"}`` and edges
    ``{"src","dst","type","weight","ts"}`` (optional ``"id"`` keeps
    multi-edges of one type distinct). Repeated records of one action
    collapse to a single edge whose weight is the repetition count and
    whose timestamp is the first occurrence; an inverse edge is
    synthesized for every forward edge.
    """
    nodes: dict[str, Node] = {}
    user: str | None = None
    for rec in node_records:
        try:
            nid = str(rec["id"])
            ntype = str(rec["type"])
        except KeyError as exc:
            raise GraphError(f"node record missing key {exc}: {rec!r}") from None
        if nid in nodes:
            raise GraphError(f"duplicate node id {nid!r}")
        if ntype not in schema.node_types:
            raise GraphError(f"node {nid!r} has undeclared type {ntype!r}")
        attrs = dict(rec.get("attrs") or {})
        node = Node(id=nid, node_type=ntype,
                    weight=float(rec.get("weight", 0.0)), attributes=attrs)
        nodes[nid] = node
        if rec.get("is_user"):
            if user is not None:
                raise GraphError(
                    f"multiple focal users ({user!r} and {nid!r})")
            user = nid
    if user is None:
        raise GraphError("no node flagged as the focal user")

    # Collapse repeated actions; keep explicitly-identified edges distinct.
    collapsed: dict[tuple[str, str, str], list] = {}
    explicit: list[tuple[str, Mapping]] = []
    explicit_ids: set[str] = set()
    order: list[tuple[str, tuple]] = []
    for rec in edge_records:
        try:
            src, dst, etype = str(rec["src"]), str(rec["dst"]), str(rec["type"])
        except KeyError as exc:
            raise GraphError(f"edge record missing key {exc}: {rec!r}") from None
        if is_inverse_type(etype):
            raise GraphError(
                f"edge {src!r}->{dst!r} ingests inverse-marked type {etype!r}; "
                f"inverses are synthesized")
        for endpoint in (src, dst):
            if endpoint not in nodes:
                raise GraphError(
                    f"edge ({src!r},{etype!r},{dst!r}) references missing node "
                    f"{endpoint!r}")
        if not schema.allows(nodes[src].node_type, etype, nodes[dst].node_type):
            raise GraphError(
                f"edge ({src!r},{etype!r},{dst!r}) violates schema: triple "
                f"({nodes[src].node_type}, {etype}, {nodes[dst].node_type}) "
                f"is not permitted")
        weight = float(rec.get("weight", 1.0))
        if weight < 0:
            raise GraphError(f"edge ({src!r},{etype!r},{dst!r}) has negative weight")
        ts = rec.get("ts")
        ts = int(ts) if ts is not None else None
        if "id" in rec and rec["id"] is not None:
            eid = str(rec["id"])
            if eid in explicit_ids:
                raise GraphError(f"duplicate edge id {eid!r}")
            explicit_ids.add(eid)
            explicit.append((eid, (src, dst, etype, weight, ts)))
            order.append(("explicit", len(explicit) - 1))
        else:
            key = (src, dst, etype)
            bucket = collapsed.get(key)
            if bucket is None:
                collapsed[key] = [weight, ts, ts is None]
                order.append(("collapsed", key))
            else:
                bucket[0] += weight
                if ts is None:
                    bucket[2] = True
                elif bucket[1] is None or ts < bucket[1]:
                    bucket[1] = ts

    adjacency: dict[str, list[Edge]] = {nid: [] for nid in nodes}

    def _admit(eid: str, src: str, dst: str, etype: str,
               weight: float, ts: int | None):
        if etype not in schema.repeatable_edge_types and weight not in (0.0, 1.0):
            raise GraphError(
                f"edge ({src!r},{etype!r},{dst!r}) has weight {weight} but "
                f"{etype!r} is not repeatable")
        fwd = Edge(id=eid, source=src, target=dst, edge_type=etype,
                   weight=weight, timestamp=ts)
        adjacency[src].append(fwd)
        adjacency[dst].append(fwd.inverted())

    for kind, ref in order:
        if kind == "explicit":
            eid, (src, dst, etype, weight, ts) = explicit[ref]
            _admit(eid, src, dst, etype, weight, ts)
        else:
            src, dst, etype = ref
            weight, min_ts, any_epoch = collapsed[ref]
            ts = None if any_epoch else min_ts
            eid = _default_edge_id(src, etype, dst)
            if eid in explicit_ids:
                raise GraphError(
                    f"edge id {eid!r} is both explicit and auto-generated")
            _admit(eid, src, dst, etype, weight, ts)

    return InteractionGraph(schema=schema, nodes=nodes, adjacency=adjacency,
                            user=user, revision=0,
                            explicit_edge_ids=frozenset(explicit_ids))


# -- snapshots ---------------------------------------------------------------

SCHEMA_FILE = "schema.json"
NODES_FILE = "nodes.jsonl"
EDGES_FILE = "edges.jsonl"


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise GraphError(f"{path}:{lineno}: bad JSON: {exc}") from exc


def write_jsonl(path: str | Path, records: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def node_record(g: InteractionGraph, node: Node) -> dict:
    rec: dict = {"id": node.id, "type": node.node_type, "weight": node.weight,
                 "attrs": dict(node.attributes)}
    rec["is_user"] = node.id == g.user
    return rec


def edge_record(g: InteractionGraph, e: Edge) -> dict:
    rec: dict = {"src": e.source, "dst": e.target, "type": e.edge_type,
                 "weight": e.weight, "ts": e.timestamp}
    if e.id in g._explicit_edge_ids:
        rec["id"] = e.id
    return rec


def save_graph(g: InteractionGraph, directory: str | Path) -> None:
    """Write the three snapshot files (schema + node/edge logs)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / SCHEMA_FILE, "w", encoding="utf-8") as fh:
        json.dump(g.schema.to_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    write_jsonl(directory / NODES_FILE,
                (node_record(g, n) for n in g.nodes.values()))
    write_jsonl(directory / EDGES_FILE,
                (edge_record(g, e) for e in g.edges(forward_only=True)))


def load_graph(directory: str | Path) -> InteractionGraph:
    """Rebuild a graph from its snapshot directory."""
    directory = Path(directory)
    schema = load_schema(directory / SCHEMA_FILE)
    return build_graph(schema,
                       read_jsonl(directory / NODES_FILE),
                       read_jsonl(directory / EDGES_FILE))
