"""HTTP facade over a workspace.

Endpoints cover the judgment loop: list feed items, hand out unjudged
candidate pairs, accept judgments (durable, duplicate-safe), retrain a
model per aspect, serve rankings with per-feature contributions, and
report study statistics. All bodies are JSON; malformed input is a 400,
an unknown item a 404, a duplicate judgment a 409, and a training
request while another is running a 503.
"""
from __future__ import annotations

import threading
from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import DuplicateJudgmentError, FairyError
from .features import PathFeaturizer
from .graph import base_type, is_inverse_type
from .harness import (ASPECTS, Judgment, train_for_aspect,
                      transitivity_score)
from .paths import ExplanationPath, pair_key
from .ranking import PairwiseRanker
from .workspace import Workspace


class JudgmentBody(BaseModel):
    pair_id: str
    better: str
    worse: str
    aspect: str
    judge: str
    judged_at: int = 0


def _render_path(g, p: ExplanationPath) -> dict[str, Any]:
    """A path as the UI draws it: labeled typed nodes and arrow labels,
    inverse edges flagged so they can be drawn right-to-left."""
    nodes = [{"id": n,
              "label": g.node(n).attributes.get("label", n),
              "type": g.node_type(n)} for n in p.nodes]
    edges = [{"type": et, "base": base_type(et),
              "inverted": is_inverse_type(et)} for et in p.edge_types]
    return {"id": p.id, "nodes": nodes, "edges": edges, "length": p.length}


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="explanation judgment service")
    # the judgment frontend is served as static files from any origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    cfg = workspace.config()
    graph = workspace.graph()
    corpus = workspace.corpus()
    feed = workspace.feed()
    featurizer = PathFeaturizer(user_type=cfg["user_type"]).fit(corpus)
    candidates = workspace.candidates()
    by_candidate_id = {c.id: c for c in candidates}
    models: dict[str, PairwiseRanker] = {}
    for aspect in ASPECTS:
        stored = workspace.model(aspect)
        if stored is not None:
            models[aspect] = stored
    train_lock = threading.Lock()
    write_lock = threading.Lock()
    app.state.train_lock = train_lock

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def check_aspect(aspect: str) -> str:
        if aspect not in ASPECTS:
            raise HTTPException(
                400, f"aspect must be one of {list(ASPECTS)}, got {aspect!r}")
        return aspect

    @app.get("/feed-items")
    def feed_items():
        return [{"item": f.item, "seen_at": f.seen_at, "session": f.session,
                 "paths": len(corpus.instances.get(
                     pair_key(graph.user, f.item, f.seen_at), ())),
                 "user": graph.user}
                for f in feed]

    @app.get("/pairs")
    def pairs(aspect: str, n: int = Query(default=10, ge=1),
              judge: str | None = None):
        check_aspect(aspect)
        done = {(j.pair_id, j.judge) for j in workspace.judgments()
                if j.aspect == aspect}
        if judge is None:
            judged_ids = {pair_id for pair_id, _ in done}
        else:
            judged_ids = {pair_id for pair_id, by in done if by == judge}
        queue = [c for c in candidates if c.id not in judged_ids][:n]
        return [{"id": c.id, "pair_key": c.pair_key, "kind": c.kind,
                 "a": _render_path(graph, c.a),
                 "b": _render_path(graph, c.b)} for c in queue]

    @app.post("/judgments", status_code=201)
    def post_judgment(body: JudgmentBody):
        check_aspect(body.aspect)
        candidate = by_candidate_id.get(body.pair_id)
        if candidate is None:
            raise HTTPException(
                400, f"unknown candidate pair {body.pair_id!r}")
        if {body.better, body.worse} != {candidate.a.id, candidate.b.id}:
            raise HTTPException(
                400, "better/worse must name the two paths of the pair")
        try:
            judgment = Judgment(pair_id=body.pair_id, better=body.better,
                                worse=body.worse, aspect=body.aspect,
                                judge=body.judge, judged_at=body.judged_at)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None
        with write_lock:
            try:
                workspace.append_judgment(judgment)
            except DuplicateJudgmentError as exc:
                raise HTTPException(409, str(exc)) from None
        total = sum(1 for j in workspace.judgments()
                    if j.aspect == body.aspect)
        return {"stored": True, "pair_id": body.pair_id,
                "aspect": body.aspect, "judgments_for_aspect": total}

    @app.post("/train")
    def train(aspect: str):
        check_aspect(aspect)
        if not train_lock.acquire(blocking=False):
            raise HTTPException(503, "a training run is already in progress")
        try:
            try:
                outcome = train_for_aspect(corpus, workspace.judgments(),
                                           aspect, featurizer=featurizer,
                                           seed=cfg["seed"])
            except ValueError as exc:
                raise HTTPException(400, str(exc)) from None
            workspace.save_model(outcome.model, aspect)
            models[aspect] = outcome.model
            return {"aspect": aspect, "selected_C": outcome.selected_C,
                    "dev_accuracy": outcome.dev_accuracy_by_C[
                        outcome.selected_C],
                    "n_train": outcome.n_train, "n_dev": outcome.n_dev,
                    "n_held_out": outcome.n_held_out}
        finally:
            train_lock.release()

    @app.get("/rank")
    def rank(user: str, item: str, aspect: str,
             k: int = Query(default=3, ge=1)):
        check_aspect(aspect)
        model = models.get(aspect)
        if model is None:
            raise HTTPException(
                404, f"no trained model for aspect {aspect!r}; "
                     "POST /train first")
        if user != graph.user:
            raise HTTPException(404, f"unknown user {user!r}")
        hit = next((f for f in feed if f.item == item), None)
        if hit is None:
            raise HTTPException(404, f"unknown item {item!r}")
        key = pair_key(user, item, hit.seen_at)
        paths = corpus.instances.get(key)
        if not paths:
            raise HTTPException(404, f"no mined paths for {key!r}")
        vectors = {p.id: featurizer.vector(user, item, hit.seen_at, p)
                   for p in paths}
        ids = [p.id for p in paths]
        order = model.rank(np.stack([vectors[i] for i in ids]), ids)
        by_id = {p.id: p for p in paths}
        names = featurizer.feature_names_
        results = []
        for path_id in order[:k]:
            p = by_id[path_id]
            rendered = _render_path(graph, p)
            rendered["score"] = model.decision_function(vectors[path_id])
            rendered["contributions"] = {
                name: float(c) for name, c in
                zip(names, model.contributions(vectors[path_id]))}
            results.append(rendered)
        return {"user": user, "item": item, "seen_at": hit.seen_at,
                "aspect": aspect, "k": k, "results": results}

    @app.get("/stats")
    def stats():
        judgments = workspace.judgments()
        per_aspect = {a: [j for j in judgments if j.aspect == a]
                      for a in ASPECTS}
        return {
            "platform": graph.schema.platform_name,
            "user": graph.user,
            "nodes": graph.n_nodes,
            "edges": graph.n_edges,
            "feed_items": len(feed),
            "mined_pairs": len(corpus.instances),
            "paths": corpus.n_paths(),
            "candidates": len(candidates),
            "judgments": {a: len(js) for a, js in per_aspect.items()},
            "transitivity": {
                a: transitivity_score([(j.better, j.worse) for j in js])
                for a, js in per_aspect.items()},
            "models": {a: a in models for a in ASPECTS},
        }

    return app


def serve(workspace: Workspace, host: str = "127.0.0.1",
          port: int = 8040) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(workspace), host=host, port=port)
