"""HTTP service tests: judgment loop, training, ranking, stats."""
import numpy as np
import pytest
from fastapi.testclient import TestClient

from fairy.datasets import synthetic_platform
from fairy.features import PathCorpus, PathFeaturizer
from fairy.harness import CandidatePair
from fairy.paths import enumerate_paths, pair_key
from fairy.service import create_app
from fairy.workspace import Workspace

MAX_LEN = 3


@pytest.fixture(scope="module")
def demo():
    g, feed = synthetic_platform("demo", seed=0)
    instances = {}
    for f in feed:
        paths = enumerate_paths(g, f.item, f.seen_at, max_len=MAX_LEN)
        assert len(paths) >= 4
        instances[pair_key(g.user, f.item, f.seen_at)] = paths
    return g, feed, instances


def make_workspace(root, demo, **overrides):
    g, feed, instances = demo
    ws = Workspace(root)
    cfg = {"max_len": MAX_LEN, "pairs_per_item": 30}
    cfg.update(overrides)
    ws.write_config(cfg)
    ws.save_graph(g)
    ws.save_feed(feed)
    ws.save_corpus(PathCorpus(g, instances))
    return ws


@pytest.fixture()
def ws(tmp_path, demo):
    return make_workspace(tmp_path / "study", demo)


@pytest.fixture()
def client(ws):
    return TestClient(create_app(ws))


def post_judgment(client, pair, aspect="relevance", judge="p1", flip=False):
    better, worse = pair["a"]["id"], pair["b"]["id"]
    if flip:
        better, worse = worse, better
    return client.post("/judgments", json={
        "pair_id": pair["id"], "better": better, "worse": worse,
        "aspect": aspect, "judge": judge})


class TestFeedItems:
    def test_lists_every_feed_entry(self, client, demo):
        g, feed, instances = demo
        body = client.get("/feed-items").json()
        assert [e["item"] for e in body] == [f.item for f in feed]
        for entry in body:
            assert entry["user"] == g.user
            assert entry["paths"] >= 4


class TestPairQueue:
    def test_returns_n_pairs_with_rendered_paths(self, client, demo):
        g, _, _ = demo
        body = client.get("/pairs",
                          params={"aspect": "relevance", "n": 5}).json()
        assert len(body) == 5
        for pair in body:
            assert pair["a"]["id"] < pair["b"]["id"]
            for side in ("a", "b"):
                path = pair[side]
                assert path["nodes"][0]["id"] == g.user
                assert len(path["nodes"]) == path["length"] + 1
                assert len(path["edges"]) == path["length"]
                for node in path["nodes"]:
                    assert set(node) == {"id", "label", "type"}
                for edge in path["edges"]:
                    assert set(edge) == {"type", "base", "inverted"}
                    if edge["inverted"]:
                        assert edge["type"] != edge["base"]

    def test_aspect_is_required(self, client):
        assert client.get("/pairs").status_code == 400

    def test_unknown_aspect_rejected(self, client):
        r = client.get("/pairs", params={"aspect": "beauty"})
        assert r.status_code == 400

    def test_judged_pairs_leave_the_queue(self, client):
        first = client.get("/pairs", params={"aspect": "relevance"}).json()[0]
        assert post_judgment(client, first).status_code == 201
        remaining = client.get("/pairs", params={"aspect": "relevance",
                                                 "n": 1000}).json()
        assert first["id"] not in [p["id"] for p in remaining]
        # the other aspect still offers the pair
        other = client.get("/pairs", params={"aspect": "surprisal",
                                             "n": 1000}).json()
        assert first["id"] in [p["id"] for p in other]

    def test_judge_scoped_queue(self, client):
        first = client.get("/pairs", params={"aspect": "relevance"}).json()[0]
        post_judgment(client, first, judge="p1")
        mine = client.get("/pairs", params={"aspect": "relevance", "n": 1000,
                                            "judge": "p1"}).json()
        assert first["id"] not in [p["id"] for p in mine]
        theirs = client.get("/pairs", params={"aspect": "relevance",
                                              "n": 1000,
                                              "judge": "p2"}).json()
        assert first["id"] in [p["id"] for p in theirs]


class TestJudgments:
    def test_created_and_counted(self, client):
        pairs = client.get("/pairs", params={"aspect": "relevance",
                                             "n": 2}).json()
        r = post_judgment(client, pairs[0])
        assert r.status_code == 201
        assert r.json()["judgments_for_aspect"] == 1
        r = post_judgment(client, pairs[1])
        assert r.json()["judgments_for_aspect"] == 2

    def test_duplicate_is_409_and_not_stored_twice(self, client):
        pair = client.get("/pairs", params={"aspect": "relevance"}).json()[0]
        assert post_judgment(client, pair).status_code == 201
        assert post_judgment(client, pair).status_code == 409
        # flipping the direction does not dodge the duplicate check
        assert post_judgment(client, pair, flip=True).status_code == 409
        stats = client.get("/stats").json()
        assert stats["judgments"]["relevance"] == 1

    def test_same_pair_other_judge_or_aspect_is_fine(self, client):
        pair = client.get("/pairs", params={"aspect": "relevance"}).json()[0]
        assert post_judgment(client, pair, judge="p1").status_code == 201
        assert post_judgment(client, pair, judge="p2").status_code == 201
        assert post_judgment(client, pair, aspect="surprisal",
                             judge="p1").status_code == 201

    def test_unknown_pair_is_400(self, client):
        r = client.post("/judgments", json={
            "pair_id": "nope#a+b", "better": "a", "worse": "b",
            "aspect": "relevance", "judge": "p1"})
        assert r.status_code == 400

    def test_paths_must_match_the_pair(self, client):
        pair = client.get("/pairs", params={"aspect": "relevance"}).json()[0]
        r = client.post("/judgments", json={
            "pair_id": pair["id"], "better": pair["a"]["id"],
            "worse": "someone-else", "aspect": "relevance", "judge": "p1"})
        assert r.status_code == 400

    def test_malformed_body_is_400(self, client):
        r = client.post("/judgments", json={"pair_id": 7})
        assert r.status_code == 400
        r = client.post("/judgments", content=b"not json at all",
                        headers={"content-type": "application/json"})
        assert r.status_code == 400

    def test_survives_a_restart(self, ws, demo):
        client = TestClient(create_app(ws))
        pairs = client.get("/pairs", params={"aspect": "relevance",
                                             "n": 3}).json()
        for p in pairs:
            assert post_judgment(client, p).status_code == 201
        reopened = TestClient(create_app(Workspace(ws.root)))
        stats = reopened.get("/stats").json()
        assert stats["judgments"]["relevance"] == 3
        assert post_judgment(reopened, pairs[0]).status_code == 409
        queue = reopened.get("/pairs", params={"aspect": "relevance",
                                               "n": 1000}).json()
        assert {p["id"] for p in pairs}.isdisjoint(q["id"] for q in queue)


def judge_many(client, aspect, n, judge="p1"):
    """Judge n pairs with a deterministic shorter-is-better policy."""
    pairs = client.get("/pairs", params={"aspect": aspect, "n": n,
                                         "judge": judge}).json()
    assert len(pairs) == n
    for pair in pairs:
        a, b = pair["a"], pair["b"]
        better = a if (a["length"], a["id"]) <= (b["length"], b["id"]) else b
        worse = b if better is a else a
        r = client.post("/judgments", json={
            "pair_id": pair["id"], "better": better["id"],
            "worse": worse["id"], "aspect": aspect, "judge": judge})
        assert r.status_code == 201
    return pairs


class TestTraining:
    def test_too_few_judgments_is_400(self, client):
        r = client.post("/train", params={"aspect": "relevance"})
        assert r.status_code == 400
        assert "at least 10" in r.json()["detail"]

    def test_train_returns_dev_accuracy_and_persists(self, ws):
        client = TestClient(create_app(ws))
        judge_many(client, "relevance", 20)
        r = client.post("/train", params={"aspect": "relevance"})
        assert r.status_code == 200
        body = r.json()
        assert body["aspect"] == "relevance"
        assert 0.0 <= body["dev_accuracy"] <= 1.0
        assert body["n_train"] + body["n_dev"] + body["n_held_out"] == 20
        assert ws.model_path("relevance").exists()
        # a fresh service sees the stored model
        reopened = TestClient(create_app(Workspace(ws.root)))
        assert reopened.get("/stats").json()["models"]["relevance"] is True

    def test_busy_while_training_is_503(self, ws):
        app = create_app(ws)
        client = TestClient(app)
        judge_many(client, "relevance", 12)
        assert app.state.train_lock.acquire(blocking=False)
        try:
            r = client.post("/train", params={"aspect": "relevance"})
            assert r.status_code == 503
        finally:
            app.state.train_lock.release()
        assert client.post("/train",
                           params={"aspect": "relevance"}).status_code == 200


class TestRank:
    def test_needs_a_model(self, client, demo):
        _, feed, _ = demo
        r = client.get("/rank", params={"user": "u0", "item": feed[0].item,
                                        "aspect": "relevance"})
        assert r.status_code == 404

    def test_matches_the_model_ranking_exactly(self, ws, demo):
        g, feed, instances = demo
        client = TestClient(create_app(ws))
        judge_many(client, "surprisal", 15)
        assert client.post("/train",
                           params={"aspect": "surprisal"}).status_code == 200
        item = feed[0]
        r = client.get("/rank", params={
            "user": g.user, "item": item.item, "aspect": "surprisal",
            "k": 5})
        assert r.status_code == 200
        body = r.json()
        paths = instances[pair_key(g.user, item.item, item.seen_at)]
        model = Workspace(ws.root).model("surprisal")
        featurizer = PathFeaturizer().fit(ws.corpus())
        X = np.stack([featurizer.vector(g.user, item.item, item.seen_at, p)
                      for p in paths])
        expected = model.rank(X, [p.id for p in paths])[:5]
        assert [p["id"] for p in body["results"]] == expected
        scores = [p["score"] for p in body["results"]]
        assert scores == sorted(scores, reverse=True)
        for entry in body["results"]:
            contributions = entry["contributions"]
            assert set(contributions) == set(featurizer.feature_names_)
            assert sum(contributions.values()) == pytest.approx(
                entry["score"], abs=1e-9)

    def test_unknown_item_and_user_are_404(self, ws, demo):
        g, feed, _ = demo
        client = TestClient(create_app(ws))
        judge_many(client, "relevance", 12)
        client.post("/train", params={"aspect": "relevance"})
        base = {"aspect": "relevance", "k": 3}
        r = client.get("/rank", params={**base, "user": g.user,
                                        "item": "no-such-item"})
        assert r.status_code == 404
        r = client.get("/rank", params={**base, "user": "someone-else",
                                        "item": feed[0].item})
        assert r.status_code == 404

    def test_k_must_be_positive(self, ws, demo):
        g, feed, _ = demo
        client = TestClient(create_app(ws))
        r = client.get("/rank", params={"user": g.user, "item": feed[0].item,
                                        "aspect": "relevance", "k": 0})
        assert r.status_code == 400


class TestStats:
    def test_graph_and_corpus_figures(self, client, demo):
        g, feed, instances = demo
        stats = client.get("/stats").json()
        assert stats["nodes"] == g.n_nodes
        assert stats["edges"] == g.n_edges
        assert stats["feed_items"] == len(feed)
        assert stats["mined_pairs"] == len(instances)
        assert stats["paths"] == sum(len(v) for v in instances.values())
        assert stats["judgments"] == {"relevance": 0, "surprisal": 0}
        assert stats["transitivity"] == {"relevance": 1.0, "surprisal": 1.0}
        assert stats["models"] == {"relevance": False, "surprisal": False}

    def test_transitivity_over_handmade_triplets(self, tmp_path, demo):
        g, feed, instances = demo
        ws = make_workspace(tmp_path / "tri", demo)
        key = pair_key(g.user, feed[0].item, feed[0].seen_at)
        p0, p1, p2 = instances[key][:3]
        ws.save_candidates([CandidatePair(pair_key=key, a=p0, b=p1),
                            CandidatePair(pair_key=key, a=p0, b=p2),
                            CandidatePair(pair_key=key, a=p1, b=p2)])
        client = TestClient(create_app(ws))
        pairs = client.get("/pairs", params={"aspect": "relevance",
                                             "n": 3}).json()
        assert len(pairs) == 3
        ranked = sorted(p.id for p in (p0, p1, p2))
        # consistent total order on relevance
        for pair in pairs:
            client.post("/judgments", json={
                "pair_id": pair["id"],
                "better": min(pair["a"]["id"], pair["b"]["id"]),
                "worse": max(pair["a"]["id"], pair["b"]["id"]),
                "aspect": "relevance", "judge": "p1"})
        # a cycle on surprisal: 0>1, 1>2, 2>0
        beats = [(ranked[0], ranked[1]), (ranked[1], ranked[2]),
                 (ranked[2], ranked[0])]
        for pair in pairs:
            ids = {pair["a"]["id"], pair["b"]["id"]}
            better, worse = next((b, w) for b, w in beats
                                 if {b, w} == ids)
            client.post("/judgments", json={
                "pair_id": pair["id"], "better": better, "worse": worse,
                "aspect": "surprisal", "judge": "p1"})
        stats = client.get("/stats").json()
        assert stats["judgments"] == {"relevance": 3, "surprisal": 3}
        assert stats["transitivity"]["relevance"] == 1.0
        assert stats["transitivity"]["surprisal"] == 0.0


def test_cross_origin_requests_allowed(client):
    """A browser frontend served from another origin can read responses."""
    r = client.get("/feed-items", headers={"Origin": "http://localhost:5173"})
    assert r.status_code == 200
    assert r.headers["access-control-allow-origin"] == "*"
