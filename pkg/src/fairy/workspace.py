"""On-disk layout for one judgment study.

A workspace directory holds the graph snapshot, the feed, the mined
paths, sampled candidate pairs, the append-only judgment log and one
trained model per aspect. Every piece of the pipeline (command line,
HTTP service, tests) reads and writes through this class so they agree
on file names and formats.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import DuplicateJudgmentError, FairyError
from .features import PathCorpus
from .graph import InteractionGraph, load_graph, save_graph
from .harness import (CandidatePair, Judgment, load_candidates,
                      load_judgments, sample_random_pairs, save_candidates)
from .paths import FeedItem, load_feed, load_paths, save_feed, save_paths
from .ranking import PairwiseRanker, load_model, save_model

WORKSPACE_ENV = "FAIRY_WORKSPACE"
DEFAULT_CONFIG = {
    "seed": 0,
    "max_len": 4,
    "cap": 1_000_000,
    "pairs_per_item": 25,
    "user_type": "user",
}


class Workspace:
    """Accessor for one study directory; loads lazily, caches reads."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._graph: InteractionGraph | None = None
        self._feed: list[FeedItem] | None = None
        self._corpus: PathCorpus | None = None
        self._config: dict | None = None
        self._judgments: list[Judgment] | None = None

    @classmethod
    def locate(cls, root: str | Path | None = None) -> "Workspace":
        """Use the given root, or fall back to the environment."""
        if root is None:
            root = os.environ.get(WORKSPACE_ENV)
        if not root:
            raise FairyError(
                f"no workspace given and {WORKSPACE_ENV} is not set")
        ws = cls(root)
        if not ws.root.is_dir():
            raise FairyError(f"workspace directory {ws.root} does not exist")
        return ws

    # -- file locations ---------------------------------------------------------

    @property
    def graph_dir(self) -> Path:
        return self.root / "graph"

    @property
    def feed_path(self) -> Path:
        return self.root / "feed.jsonl"

    @property
    def paths_path(self) -> Path:
        return self.root / "paths.jsonl"

    @property
    def candidates_path(self) -> Path:
        return self.root / "candidates.jsonl"

    @property
    def judgments_path(self) -> Path:
        return self.root / "judgments.jsonl"

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    def model_path(self, aspect: str) -> Path:
        return self.root / "models" / f"{aspect}.json"

    # -- config -----------------------------------------------------------------

    def config(self) -> dict:
        if self._config is None:
            merged = dict(DEFAULT_CONFIG)
            if self.config_path.exists():
                with open(self.config_path, encoding="utf-8") as fh:
                    merged.update(json.load(fh))
            self._config = merged
        return self._config

    def write_config(self, overrides: dict) -> None:
        merged = dict(DEFAULT_CONFIG)
        merged.update(overrides)
        self.root.mkdir(parents=True, exist_ok=True)
        _atomic_json(self.config_path, merged)
        self._config = merged

    # -- pipeline artifacts -------------------------------------------------------

    def graph(self) -> InteractionGraph:
        if self._graph is None:
            if not self.graph_dir.is_dir():
                raise FairyError(f"no graph snapshot under {self.graph_dir}; "
                                 "run build-graph first")
            self._graph = load_graph(self.graph_dir)
        return self._graph

    def save_graph(self, g: InteractionGraph) -> None:
        save_graph(g, self.graph_dir)
        self._graph = g
        self._corpus = None

    def feed(self) -> list[FeedItem]:
        if self._feed is None:
            if not self.feed_path.exists():
                raise FairyError(f"no feed file at {self.feed_path}")
            self._feed = load_feed(self.feed_path)
        return self._feed

    def save_feed(self, feed: list[FeedItem]) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        save_feed(feed, self.feed_path)
        self._feed = feed

    def corpus(self) -> PathCorpus:
        if self._corpus is None:
            if not self.paths_path.exists():
                raise FairyError(f"no path dump at {self.paths_path}; "
                                 "run mine first")
            self._corpus = PathCorpus(self.graph(),
                                      load_paths(self.paths_path))
        return self._corpus

    def save_corpus(self, corpus: PathCorpus) -> None:
        save_paths(corpus.instances, self.paths_path)
        self._corpus = corpus

    def candidates(self) -> list[CandidatePair]:
        """Stored candidate pairs; sampled once (workspace-seeded) and
        persisted if no sample exists yet, so reruns see the same study."""
        if self.candidates_path.exists():
            return load_candidates(self.candidates_path, self.corpus())
        cfg = self.config()
        corpus = self.corpus()
        n = cfg["pairs_per_item"] * max(1, len(self.feed()))
        total = sum(len(p) * (len(p) - 1) // 2
                    for p in corpus.instances.values())
        pairs = sample_random_pairs(corpus, min(n, total) or 1,
                                    seed=cfg["seed"])
        save_candidates(pairs, self.candidates_path)
        return pairs

    def save_candidates(self, pairs: list[CandidatePair]) -> None:
        save_candidates(pairs, self.candidates_path)

    # -- judgments ------------------------------------------------------------

    def judgments(self) -> list[Judgment]:
        if self._judgments is None:
            if self.judgments_path.exists():
                self._judgments = load_judgments(self.judgments_path)
            else:
                self._judgments = []
        return self._judgments

    def append_judgment(self, judgment: Judgment) -> None:
        """Durable append; refuses a duplicate (pair_id, judge, aspect)."""
        key = (judgment.pair_id, judgment.judge, judgment.aspect)
        for existing in self.judgments():
            if (existing.pair_id, existing.judge, existing.aspect) == key:
                raise DuplicateJudgmentError(
                    f"judgment for {judgment.pair_id!r} by "
                    f"{judgment.judge!r} on {judgment.aspect!r} "
                    "already recorded")
        line = json.dumps(judgment.to_dict(), ensure_ascii=False)
        with open(self.judgments_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.judgments().append(judgment)

    # -- models ----------------------------------------------------------------

    def model(self, aspect: str) -> PairwiseRanker | None:
        path = self.model_path(aspect)
        if not path.exists():
            return None
        return load_model(path)

    def save_model(self, model: PairwiseRanker, aspect: str) -> None:
        """Write then rename, so readers only ever see a whole file."""
        path = self.model_path(aspect)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            os.close(fd)
            save_model(model, tmp)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _atomic_json(path: Path, payload: dict) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
