"""Small built-in datasets: a hand-checkable fixture graph plus synthetic
generators used by the test suite, the demo pipeline and benchmarks."""
from __future__ import annotations

import numpy as np

from .features import PathCorpus
from .graph import (INVERSE_SUFFIX, InteractionGraph, Schema, build_graph,
                    bundled_schema)
from .paths import FeedItem, enumerate_paths, pair_key
from .ranking import PreferencePair

TOY_SCHEMA = Schema(
    node_types=frozenset({"user", "category", "post"}),
    edge_types=frozenset({"follows", "asks", "posts", "upvotes", "belongs to"}),
    permitted_triples=frozenset({
        ("user", "follows", "user"),
        ("user", "follows", "category"),
        ("user", "asks", "post"),
        ("user", "posts", "post"),
        ("user", "upvotes", "post"),
        ("post", "belongs to", "category"),
        ("category", "belongs to", "category"),
    }),
    repeatable_edge_types=frozenset(),
    platform_name="toy",
)

TOY_NODES = [
    {"id": "alice", "type": "user", "weight": 0.0,
     "attrs": {"followers": "2", "followees": "3"}, "is_user": True},
    {"id": "bob", "type": "user"},
    {"id": "charlie", "type": "user"},
    {"id": "sam", "type": "user"},
    {"id": "health", "type": "category", "weight": 0.9},
    {"id": "chemistry", "type": "category", "weight": 0.7},
    {"id": "organics", "type": "category", "weight": 0.5},
    {"id": "food", "type": "category", "weight": 0.3},
    {"id": "health-post", "type": "post"},
    {"id": "bomb-post", "type": "post"},
    {"id": "food-question", "type": "post"},
]

TOY_EDGES = [
    {"src": "alice", "dst": "bob", "type": "follows", "ts": 1},
    {"src": "alice", "dst": "health", "type": "follows", "ts": 2},
    {"src": "alice", "dst": "food-question", "type": "asks", "ts": 3},
    {"src": "sam", "dst": "health-post", "type": "posts", "ts": 4},
    {"src": "bob", "dst": "charlie", "type": "follows", "ts": 5},
    {"src": "charlie", "dst": "chemistry", "type": "follows", "ts": 6},
    {"src": "sam", "dst": "bomb-post", "type": "asks", "ts": 7},
    {"src": "charlie", "dst": "sam", "type": "follows", "ts": 8},
    {"src": "charlie", "dst": "health-post", "type": "upvotes", "ts": 14},
    {"src": "health-post", "dst": "health", "type": "belongs to", "ts": None},
    {"src": "bomb-post", "dst": "chemistry", "type": "belongs to", "ts": None},
    {"src": "bomb-post", "dst": "organics", "type": "belongs to", "ts": None},
    {"src": "food-question", "dst": "food", "type": "belongs to", "ts": None},
    {"src": "food", "dst": "organics", "type": "belongs to", "ts": None},
]

TOY_FEED = [{"item": "bomb-post", "seen_at": 13, "session": "s1"}]


def toy_graph() -> InteractionGraph:
    """Eleven-node fixture around user "alice"; every path is hand-checkable.

    The feed shows her "bomb-post" at t=13; the one edge dated after that
    (charlie's upvote at t=14) exists to exercise temporal validity.
    """
    return build_graph(TOY_SCHEMA, TOY_NODES, TOY_EDGES)


def planted_preferences(n_pairs: int, dim: int, seed: int = 0,
                        margin_range: tuple[float, float] = (1.0, 3.0),
                        noise: float = 0.5,
                        ) -> tuple[list[PreferencePair], np.ndarray]:
    """Linearly separable preference pairs with a known scoring direction.

    Each better vector sits ``margin`` above its worse twin along the
    planted unit direction, plus orthogonal noise scaled by ``noise``
    (0 makes the pairs exactly margin-separated), so a pairwise model
    that learns the direction ranks every pair correctly.
    """
    rng = np.random.default_rng(seed)
    w = rng.normal(size=dim)
    w /= np.linalg.norm(w)
    pairs = []
    for i in range(n_pairs):
        xw = rng.normal(size=dim)
        margin = rng.uniform(*margin_range)
        jitter = rng.normal(size=dim)
        jitter -= (jitter @ w) * w
        xb = xw + margin * w + jitter * rng.uniform(0.0, noise)
        pairs.append(PreferencePair(better_id=f"p{i}:better",
                                    worse_id=f"p{i}:worse",
                                    x_better=xb, x_worse=xw,
                                    judge=f"j{i % 3}", aspect="relevance"))
    return pairs, w


CONTRAST_SCHEMA = Schema(
    node_types=frozenset({"user", "item"}),
    edge_types=frozenset({"e1", "e2"}),
    permitted_triples=frozenset({
        ("user", "e1", "item"), ("user", "e2", "item"),
        ("item", "e1", "item"), ("item", "e2", "item"),
    }),
    platform_name="contrast",
)


def frequency_contrast_corpus(n_items: int = 12, wide: int = 10,
                              narrow: int = 3) -> tuple[PathCorpus, list[FeedItem]]:
    """Corpus where path shapes differ only in how common they are.

    Every feed item is reachable by ``wide`` two-hop routes of one shape
    (e1/e1) and ``narrow`` routes of another (e2/e2); nothing else about
    the routes differs, so only pattern features separate them. Useful
    for checking that a model picks up (or is denied) pattern signal.
    """
    nodes = [{"id": "u", "type": "user", "is_user": True}]
    edges = []
    for j in range(n_items):
        nodes.append({"id": f"f{j}", "type": "item"})
        for kind, count, et in (("a", wide, "e1"), ("b", narrow, "e2")):
            for i in range(count):
                mid = f"{kind}{j}x{i}"
                nodes.append({"id": mid, "type": "item"})
                edges.append({"src": "u", "dst": mid, "type": et})
                edges.append({"src": mid, "dst": f"f{j}", "type": et})
    g = build_graph(CONTRAST_SCHEMA, nodes, edges)
    feed = [FeedItem(item=f"f{j}", seen_at=10) for j in range(n_items)]
    instances = {
        pair_key(g.user, f.item, f.seen_at):
            enumerate_paths(g, f.item, f.seen_at, max_len=2)
        for f in feed
    }
    return PathCorpus(g, instances), feed


# Synthetic platforms. Entity-to-entity edges are undated (always valid);
# user activity is dated so temporal filtering has something to bite on.
# Activity endpoints follow a flattened power law (popular targets exist,
# no runaway hubs) and feed items are the candidates whose immediate
# relations overlap the focal user's own most, the way a recommender
# feed behaves. The constants are calibrated so the *-scale profiles hit
# their stated node, edge and per-pair path densities at seed 0.
SCALE_PROFILES = {
    # Small enough for the end-to-end command-line demo to finish in
    # seconds, large enough that every feed item has dozens of paths.
    "demo": {
        "schema": "quora", "n_users": 60, "n_questions": 50, "n_answers": 40,
        "n_categories": 12, "follows_user": 3.0, "follows_cat": 1.0,
        "upvotes_answer": 2.0, "upvotes_question": 1.0,
        "focal_follows": 8, "focal_upvotes": 6,
        "n_feed": 3, "max_len": 4,
    },
    "lastfm-scale": {
        "schema": "lastfm", "n_users": 10200, "n_tracks": 9000,
        "n_albums": 1500, "n_artists": 1500, "n_tags": 800,
        "follows": 0.8, "scrobbles": 0.6, "loves": 0.2, "tags_per_track": 1.0,
        "focal_follows": 25, "focal_scrobbles": 130,
        "n_feed": 3, "max_len": 5,
    },
    "quora-scale": {
        "schema": "quora", "n_users": 8000, "n_questions": 12000,
        "n_answers": 10000, "n_categories": 2000,
        "follows_user": 5.0, "follows_cat": 4.0,
        "upvotes_answer": 12.0, "upvotes_question": 4.0,
        "focal_follows": 30, "focal_upvotes": 25,
        "n_feed": 3, "max_len": 4,
    },
}


def _powerlaw_picks(rng: np.random.Generator, n: int, size: int,
                    a: float = 0.5) -> np.ndarray:
    """size draws from range(n), rank r drawn proportionally to 1/r^a."""
    weights = 1.0 / np.arange(1, n + 1, dtype=float) ** a
    weights /= weights.sum()
    return rng.choice(n, size=size, p=weights)


def _dated(rng: np.random.Generator, seen_at: int):
    """Timestamp drawn so most edges predate the impression; one in ten
    edges is undated."""
    if rng.random() < 0.1:
        return None
    return int(rng.integers(1, int(seen_at * 1.25)))


def _overlap_feed(candidates: dict[str, set], anchor: set, n_feed: int,
                  seen_at: int) -> list[FeedItem]:
    """The n_feed candidates whose relation sets overlap the focal
    user's anchor set most; deterministic tie-break on id."""
    scored = sorted(((len(rel & anchor), item)
                     for item, rel in candidates.items()),
                    key=lambda s: (-s[0], s[1]))
    return [FeedItem(item=item, seen_at=seen_at, session="synthetic")
            for _score, item in scored[:n_feed]]


def _lastfm_platform(p: dict, seed: int) -> tuple[InteractionGraph, list[FeedItem]]:
    rng = np.random.default_rng(seed)
    seen_at = 1000
    users = [f"u{i}" for i in range(p["n_users"])]
    tracks = [f"t{i}" for i in range(p["n_tracks"])]
    nodes = [{"id": "u0", "type": "user", "is_user": True,
              "attrs": {"followers": "40",
                        "followees": str(p["focal_follows"])}}]
    nodes += [{"id": u, "type": "user"} for u in users[1:]]
    nodes += [{"id": t, "type": "track"} for t in tracks]
    nodes += [{"id": f"al{i}", "type": "album"} for i in range(p["n_albums"])]
    nodes += [{"id": f"ar{i}", "type": "artist"} for i in range(p["n_artists"])]
    nodes += [{"id": f"g{i}", "type": "tag",
               "weight": float(rng.integers(1, 100))}
              for i in range(p["n_tags"])]

    edges = []
    entities: dict[str, set] = {}
    for i, t in enumerate(tracks):
        artist, album = f"ar{i % p['n_artists']}", f"al{i % p['n_albums']}"
        edges.append({"src": artist, "dst": t, "type": "sings"})
        edges.append({"src": album, "dst": t, "type": "contains"})
        rel = {artist, album}
        for gi in _powerlaw_picks(rng, p["n_tags"],
                                  rng.poisson(p["tags_per_track"]), a=0.9):
            tag = f"g{int(gi)}"
            if tag not in rel:
                edges.append({"src": t, "type": "belongs to", "dst": tag})
                rel.add(tag)
        entities[t] = rel
    n_root_tags = p["n_tags"] // 4
    for i in range(n_root_tags, p["n_tags"]):
        edges.append({"src": f"g{i}", "type": "belongs to",
                      "dst": f"g{int(rng.integers(0, n_root_tags))}"})

    seen = set()

    def add_unique(src, et, dst):
        if src != dst and (src, et, dst) not in seen:
            seen.add((src, et, dst))
            edges.append({"src": src, "dst": dst, "type": et,
                          "ts": _dated(rng, seen_at)})

    for fi in _powerlaw_picks(rng, len(users), p["focal_follows"]):
        add_unique("u0", "follows", users[int(fi)])
    focal_tracks = set()
    for ti in _powerlaw_picks(rng, len(tracks), p["focal_scrobbles"]):
        t = tracks[int(ti)]
        focal_tracks.add(t)
        edges.append({"src": "u0", "dst": t, "type": "scrobbles",
                      "ts": _dated(rng, seen_at)})
    for u in users[1:]:
        for fi in _powerlaw_picks(rng, len(users), rng.poisson(p["follows"])):
            add_unique(u, "follows", users[int(fi)])
        for ti in _powerlaw_picks(rng, len(tracks),
                                  rng.poisson(p["scrobbles"])):
            edges.append({"src": u, "dst": tracks[int(ti)],
                          "type": "scrobbles", "ts": _dated(rng, seen_at)})
        for ti in _powerlaw_picks(rng, len(tracks), rng.poisson(p["loves"])):
            add_unique(u, "loves", tracks[int(ti)])

    g = build_graph(bundled_schema(p["schema"]), nodes, edges)
    anchor = set().union(*(entities[t] for t in focal_tracks))
    candidates = {t: rel for t, rel in entities.items()
                  if t not in focal_tracks}
    return g, _overlap_feed(candidates, anchor, p["n_feed"], seen_at)


def _quora_platform(p: dict, seed: int) -> tuple[InteractionGraph, list[FeedItem]]:
    rng = np.random.default_rng(seed)
    seen_at = 1000
    users = [f"u{i}" for i in range(p["n_users"])]
    questions = [f"q{i}" for i in range(p["n_questions"])]
    answers = [f"a{i}" for i in range(p["n_answers"])]
    cats = [f"c{i}" for i in range(p["n_categories"])]
    nodes = [{"id": "u0", "type": "user", "is_user": True,
              "attrs": {"followers": "55",
                        "followees": str(p["focal_follows"])}}]
    nodes += [{"id": u, "type": "user"} for u in users[1:]]
    nodes += [{"id": q, "type": "question"} for q in questions]
    nodes += [{"id": a, "type": "answer"} for a in answers]
    nodes += [{"id": c, "type": "category",
               "weight": float(rng.integers(1, 100))} for c in cats]

    edges = []
    relations: dict[str, set] = {q: set() for q in questions}
    n_roots = max(1, len(cats) // 8)
    for c in cats[n_roots:]:
        edges.append({"src": c, "type": "belongs to",
                      "dst": cats[int(rng.integers(0, n_roots))]})
    for q in questions:
        cat = cats[int(_powerlaw_picks(rng, len(cats), 1, a=1.1)[0])]
        asker = users[int(_powerlaw_picks(rng, len(users), 1)[0])]
        edges.append({"src": q, "type": "belongs to", "dst": cat})
        edges.append({"src": asker, "dst": q, "type": "asks",
                      "ts": _dated(rng, seen_at)})
        relations[q] |= {cat, asker}
    for a in answers:
        q = questions[int(_powerlaw_picks(rng, len(questions), 1)[0])]
        author = users[int(_powerlaw_picks(rng, len(users), 1)[0])]
        edges.append({"src": a, "type": "answers", "dst": q})
        edges.append({"src": author, "dst": a, "type": "answers",
                      "ts": _dated(rng, seen_at)})
        relations[q] |= {a, author}

    seen = set()

    def add_unique(src, et, dst, track_in=None):
        if src != dst and (src, et, dst) not in seen:
            seen.add((src, et, dst))
            edges.append({"src": src, "dst": dst, "type": et,
                          "ts": _dated(rng, seen_at)})
            if track_in is not None:
                track_in(src, dst)

    def spray(u, et, pool, count, track_in=None):
        for i in _powerlaw_picks(rng, len(pool), count):
            add_unique(u, et, pool[int(i)], track_in)

    def note_q_upvote(src, q):
        relations[q].add(src)

    spray("u0", "follows", users, p["focal_follows"])
    spray("u0", "follows", cats, max(2, p["focal_follows"] // 4))
    spray("u0", "upvotes", answers, p["focal_upvotes"])
    spray("u0", "upvotes", questions, max(2, p["focal_upvotes"] // 3),
          note_q_upvote)
    for u in users[1:]:
        spray(u, "follows", users, rng.poisson(p["follows_user"]))
        spray(u, "follows", cats, rng.poisson(p["follows_cat"]))
        spray(u, "upvotes", answers, rng.poisson(p["upvotes_answer"]))
        spray(u, "upvotes", questions, rng.poisson(p["upvotes_question"]),
              note_q_upvote)

    g = build_graph(bundled_schema(p["schema"]), nodes, edges)
    anchor = {e.target for e in g.out_edges("u0")
              if not e.edge_type.endswith(INVERSE_SUFFIX)}
    focal_qs = {e.target for e in g.out_edges("u0") if e.edge_type == "upvotes"
                and g.node_type(e.target) == "question"}
    candidates = {q: rel for q, rel in relations.items() if q not in focal_qs}
    return g, _overlap_feed(candidates, anchor, p["n_feed"], seen_at)


def synthetic_platform(profile: str = "demo", seed: int = 0,
                       ) -> tuple[InteractionGraph, list[FeedItem]]:
    """Deterministic synthetic platform at a named size.

    Profiles: "demo" (a minute-scale end-to-end fixture), "lastfm-scale"
    and "quora-scale" (sized like the two reference deployments, used by
    the performance checks). Same profile and seed, same graph.
    """
    if profile not in SCALE_PROFILES:
        raise ValueError(f"unknown profile {profile!r}; "
                         f"choose from {sorted(SCALE_PROFILES)}")
    p = SCALE_PROFILES[profile]
    if p["schema"] == "lastfm":
        return _lastfm_platform(p, seed)
    return _quora_platform(p, seed)
