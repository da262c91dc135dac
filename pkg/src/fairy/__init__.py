"""Explanation-path mining and ranking for feed transparency.

The pipeline: build a user's interaction graph from event logs, mine
temporally valid explanation paths between the user and a feed item,
featurize the paths, and rank them with a pairwise model trained on
human judgments. Three reference scorers are included for comparison.
"""
from .errors import (FairyError, GraphError, LayoutError, PathCapExceeded,
                     SchemaError)
from .graph import (Edge, InteractionGraph, Node, Schema, build_graph,
                    bundled_schema, ego_subgraph, load_graph, load_schema,
                    save_graph)

__version__ = "0.1.0"

__all__ = [
    "Edge", "FairyError", "GraphError", "InteractionGraph", "LayoutError",
    "Node", "PathCapExceeded", "Schema", "SchemaError", "build_graph",
    "bundled_schema", "ego_subgraph", "load_graph", "load_schema",
    "save_graph", "__version__",
]
