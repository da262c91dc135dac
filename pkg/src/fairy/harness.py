"""Judgment collection and offline evaluation.

Covers the full loop around the ranker: sampling candidate path pairs
for judges to compare, storing judgments, splitting them, measuring
judge self-consistency (transitivity), and scoring the learned model
against the three reference methods with a paired significance test.
"""
from __future__ import annotations

import csv
import warnings
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .baselines import METHODS, espresso_score, pra_score, rex_global_score, walker_for
from .errors import GraphError
from .features import PathCorpus, PathFeaturizer
from .graph import read_jsonl, write_jsonl
from .paths import ExplanationPath, build_pattern_stats, parse_pair_key
from .ranking import (DEFAULT_C_GRID, PairwiseRanker, PreferencePair,
                      select_C)

ASPECTS = ("relevance", "surprisal")


# -- candidate pairs ------------------------------------------------------------

@dataclass(frozen=True)
class CandidatePair:
    """Two explanation paths of one (user, item, time) pair, to be judged.

    ``a`` always holds the lexicographically smaller path id, so the
    candidate id is stable no matter how the pair was produced.
    """

    pair_key: str
    a: ExplanationPath
    b: ExplanationPath
    kind: str = "random"

    def __post_init__(self):
        if self.a.id > self.b.id:
            a, b = self.a, self.b
            object.__setattr__(self, "a", b)
            object.__setattr__(self, "b", a)
        if self.a.id == self.b.id:
            raise ValueError("candidate pair needs two distinct paths")

    @property
    def id(self) -> str:
        return f"{self.pair_key}#{self.a.id}+{self.b.id}"


def save_candidates(candidates: Sequence[CandidatePair], path: str | Path) -> None:
    write_jsonl(path, ({"id": c.id, "pair": c.pair_key, "a": c.a.id,
                        "b": c.b.id, "kind": c.kind} for c in candidates))


def load_candidates(path: str | Path, corpus: PathCorpus) -> list[CandidatePair]:
    by_id = {key: {p.id: p for p in paths}
             for key, paths in corpus.instances.items()}
    out = []
    for rec in read_jsonl(path):
        key = str(rec["pair"])
        try:
            paths = by_id[key]
            a, b = paths[str(rec["a"])], paths[str(rec["b"])]
        except KeyError as exc:
            raise GraphError(
                f"candidate {rec.get('id')!r} references unknown {exc}") from None
        out.append(CandidatePair(pair_key=key, a=a, b=b,
                                 kind=str(rec.get("kind", "random"))))
    return out


def _unrank_pair(k: int, c: int) -> tuple[int, int]:
    """c-th unordered index pair (i < j) of range(k), lexicographic."""
    if not 0 <= c < k * (k - 1) // 2:
        raise ValueError(f"pair index {c} out of range for {k} items")
    i = 0
    remaining = k - 1
    while c >= remaining:
        c -= remaining
        i += 1
        remaining = k - 1 - i
    return i, i + 1 + c


def _sample_from_buckets(buckets: list[tuple[str, list[ExplanationPath]]],
                         n: int, seed: int, kind: str) -> list[CandidatePair]:
    """Uniform sample, without replacement, over every unordered pair
    inside every bucket. Asks for more than exist -> all of them, plus
    a warning."""
    if n <= 0:
        raise ValueError("need a positive sample size")
    sizes = [len(paths) * (len(paths) - 1) // 2 for _, paths in buckets]
    total = sum(sizes)
    if total <= n:
        if total < n:
            warnings.warn(f"only {total} candidate pairs exist; "
                          f"{n} were requested", stacklevel=3)
        return [CandidatePair(pair_key=key, a=paths[i], b=paths[j], kind=kind)
                for (key, paths), size in zip(buckets, sizes)
                for i, j in combinations(range(len(paths)), 2)]
    offsets = np.cumsum([0] + sizes)
    rng = np.random.default_rng(seed)
    chosen: set[int] = set()
    out: list[CandidatePair] = []
    while len(out) < n:
        r = int(rng.integers(total))
        if r in chosen:
            continue
        chosen.add(r)
        b = bisect_right(offsets, r) - 1
        key, paths = buckets[b]
        i, j = _unrank_pair(len(paths), r - int(offsets[b]))
        out.append(CandidatePair(pair_key=key, a=paths[i], b=paths[j], kind=kind))
    return out


def sample_random_pairs(corpus: PathCorpus, n: int,
                        seed: int = 0) -> list[CandidatePair]:
    """n candidate pairs drawn uniformly over all same-impression path
    pairs in the corpus."""
    buckets = [(key, paths) for key, paths in corpus.instances.items()
               if len(paths) >= 2]
    return _sample_from_buckets(buckets, n, seed, kind="random")


PERTURB_KINDS = ("user", "category", "item")


def sample_perturbation_pairs(corpus: PathCorpus, node_kind: str, n: int,
                              seed: int = 0, user_type: str = "user",
                              ) -> list[CandidatePair]:
    """n pairs of mined paths that differ in exactly one node.

    Both paths share their edge types and all other nodes; the
    differing position holds two nodes of the same type, selected by
    ``node_kind``: the focal "user" type, a "category" type (one that
    can nest under itself), or any other "item" type.
    """
    from .similarity import category_types

    if node_kind not in PERTURB_KINDS:
        raise ValueError(f"node_kind must be one of {PERTURB_KINDS}, "
                         f"got {node_kind!r}")
    g = corpus.graph
    cats = category_types(g.schema)

    def kind_of(node_id: str) -> str:
        t = g.node_type(node_id)
        if t == user_type:
            return "user"
        return "category" if t in cats else "item"

    buckets: dict[tuple, list[ExplanationPath]] = {}
    for key, paths in corpus.instances.items():
        for p in paths:
            for pos in range(1, len(p.nodes) - 1):
                sig = (key, p.edge_types, pos, p.nodes[:pos], p.nodes[pos + 1:],
                       g.node_type(p.nodes[pos]))
                if kind_of(p.nodes[pos]) == node_kind:
                    buckets.setdefault(sig, []).append(p)
    groups = [(sig[0], paths) for sig, paths in sorted(
        buckets.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2]))
        if len(paths) >= 2]
    return _sample_from_buckets(groups, n, seed, kind=f"perturb_{node_kind}")


# -- judgments ------------------------------------------------------------------

@dataclass(frozen=True)
class Judgment:
    """One comparative judgment on a candidate pair."""

    pair_id: str
    better: str
    worse: str
    aspect: str
    judge: str
    judged_at: int = 0

    def __post_init__(self):
        if self.better == self.worse:
            raise ValueError("a judgment must prefer one path over another")
        if self.aspect not in ASPECTS:
            raise ValueError(f"aspect must be one of {ASPECTS}, "
                             f"got {self.aspect!r}")

    def to_dict(self) -> dict:
        return {"pair_id": self.pair_id, "better": self.better,
                "worse": self.worse, "aspect": self.aspect,
                "judge": self.judge, "judged_at": self.judged_at}


def save_judgments(judgments: Sequence[Judgment], path: str | Path) -> None:
    write_jsonl(path, (j.to_dict() for j in judgments))


def load_judgments(path: str | Path) -> list[Judgment]:
    out = []
    for rec in read_jsonl(path):
        out.append(Judgment(pair_id=str(rec["pair_id"]),
                            better=str(rec["better"]), worse=str(rec["worse"]),
                            aspect=str(rec["aspect"]), judge=str(rec["judge"]),
                            judged_at=int(rec.get("judged_at", 0))))
    return out


def auto_judge(candidates: Sequence[CandidatePair],
               utility: Callable[[ExplanationPath], float],
               aspect: str = "relevance", judge: str = "scripted",
               judged_at: int = 0) -> list[Judgment]:
    """Judge every candidate with a scoring rule; equal scores abstain."""
    out = []
    for c in candidates:
        ua, ub = utility(c.a), utility(c.b)
        if ua == ub:
            continue
        better, worse = (c.a, c.b) if ua > ub else (c.b, c.a)
        out.append(Judgment(pair_id=c.id, better=better.id, worse=worse.id,
                            aspect=aspect, judge=judge, judged_at=judged_at))
    return out


@dataclass(frozen=True)
class JudgedPair:
    """A judgment resolved back to its concrete paths."""

    pair_key: str
    better: ExplanationPath
    worse: ExplanationPath
    judge: str
    aspect: str


def resolve_judgments(corpus: PathCorpus,
                      judgments: Iterable[Judgment]) -> list[JudgedPair]:
    by_id = {key: {p.id: p for p in paths}
             for key, paths in corpus.instances.items()}
    out = []
    for j in judgments:
        key = j.pair_id.split("#", 1)[0]
        paths = by_id.get(key)
        if paths is None:
            raise GraphError(f"judgment {j.pair_id!r} references an unmined pair")
        try:
            better, worse = paths[j.better], paths[j.worse]
        except KeyError as exc:
            raise GraphError(
                f"judgment {j.pair_id!r} references unknown path {exc}") from None
        out.append(JudgedPair(pair_key=key, better=better, worse=worse,
                              judge=j.judge, aspect=j.aspect))
    return out


# -- splitting and statistics ------------------------------------------------------

def split(items: Sequence, seed: int = 0) -> tuple[list, list, list]:
    """Shuffled (train, dev, test): a tenth each for dev and test,
    the remainder for training."""
    n = len(items)
    if n < 10:
        raise ValueError(f"need at least 10 items to split, have {n}")
    order = np.random.default_rng(seed).permutation(n)
    tenth = n // 10
    dev = [items[i] for i in order[:tenth]]
    test = [items[i] for i in order[tenth:2 * tenth]]
    train = [items[i] for i in order[2 * tenth:]]
    return train, dev, test


def transitivity_score(preferences: Iterable[tuple[str, str]]) -> float:
    """Share of fully judged path triplets whose judgments admit a
    strict total order. A triplet counts once all three of its pairs
    are judged; both a preference cycle and a directly contradicted
    pair break consistency. No fully judged triplet -> vacuously 1.
    """
    beats: dict[tuple[str, str], bool] = {}
    nodes: set[str] = set()
    for better, worse in preferences:
        beats[(better, worse)] = True
        nodes.update((better, worse))

    def judged(x: str, y: str) -> bool:
        return (x, y) in beats or (y, x) in beats

    def contradicted(x: str, y: str) -> bool:
        return (x, y) in beats and (y, x) in beats

    total = consistent = 0
    for a, b, c in combinations(sorted(nodes), 3):
        if not (judged(a, b) and judged(b, c) and judged(a, c)):
            continue
        total += 1
        if contradicted(a, b) or contradicted(b, c) or contradicted(a, c):
            continue
        wins = {n: 0 for n in (a, b, c)}
        for x, y in ((a, b), (b, c), (a, c)):
            if (x, y) in beats:
                wins[x] += 1
            else:
                wins[y] += 1
        if sorted(wins.values()) == [0, 1, 2]:
            consistent += 1
    return consistent / total if total else 1.0


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-tailed paired t-test. Zero-variance differences short-circuit:
    identical samples give p=1, a constant nonzero gap gives p=0."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need two equal-length samples of at least 2")
    d = x - y
    if np.all(d == d[0]):
        if d[0] == 0.0:
            return 0.0, 1.0
        return float(np.inf if d[0] > 0 else -np.inf), 0.0
    t, p = scipy_stats.ttest_rel(x, y)
    return float(t), float(p)


# -- experiments ---------------------------------------------------------------

@dataclass
class ExperimentResult:
    aspect: str
    accuracies: dict[str, float]
    best_baseline: str
    p_value: float
    selected_C: float
    dev_accuracy_by_C: dict[float, float]
    n_train: int
    n_dev: int
    n_test: int
    per_judge: dict[str, float]
    longer_better_fraction: float
    model: PairwiseRanker = field(repr=False)

    @property
    def significant(self) -> bool:
        fairy = self.accuracies["fairy"]
        return (self.p_value <= 0.05
                and fairy > self.accuracies[self.best_baseline])

    def to_dict(self) -> dict:
        return {
            "aspect": self.aspect,
            "accuracies": dict(self.accuracies),
            "best_baseline": self.best_baseline,
            "p_value": self.p_value,
            "significant": self.significant,
            "selected_C": self.selected_C,
            "dev_accuracy_by_C": {str(k): v
                                  for k, v in self.dev_accuracy_by_C.items()},
            "n_train": self.n_train, "n_dev": self.n_dev, "n_test": self.n_test,
            "per_judge": dict(self.per_judge),
            "longer_better_fraction": self.longer_better_fraction,
        }


def _baseline_correct(g, judged: JudgedPair, method: str, stats,
                      seen_at: int) -> bool:
    if method == "pra":
        sb = pra_score(g, judged.better, seen_at)
        sw = pra_score(g, judged.worse, seen_at)
    elif method == "rex-global":
        sb = rex_global_score(judged.better, stats, g)
        sw = rex_global_score(judged.worse, stats, g)
    else:
        walker = walker_for(g, seen_at)
        sb = espresso_score(g, judged.better, seen_at, walker=walker)
        sw = espresso_score(g, judged.worse, seen_at, walker=walker)
    if sb != sw:
        return sb > sw
    return judged.better.id <= judged.worse.id


def _judged_preferences(judged: Sequence[JudgedPair],
                        featurizer: PathFeaturizer) -> list[PreferencePair]:
    """Feature vectors for judged pairs, cached per (impression, path)."""
    vec_cache: dict[tuple[str, str], np.ndarray] = {}

    def vector(key: str, p: ExplanationPath) -> np.ndarray:
        got = vec_cache.get((key, p.id))
        if got is None:
            user, item, seen_at = parse_pair_key(key)
            got = vec_cache[(key, p.id)] = featurizer.vector(user, item,
                                                             seen_at, p)
        return got

    return [PreferencePair(better_id=jp.better.id, worse_id=jp.worse.id,
                           x_better=vector(jp.pair_key, jp.better),
                           x_worse=vector(jp.pair_key, jp.worse),
                           judge=jp.judge, aspect=jp.aspect)
            for jp in judged]


class TrainOutcome(NamedTuple):
    model: PairwiseRanker
    selected_C: float
    dev_accuracy_by_C: dict[float, float]
    n_train: int
    n_dev: int
    n_held_out: int


def train_for_aspect(corpus: PathCorpus, judgments: Sequence[Judgment],
                     aspect: str, featurizer: PathFeaturizer | None = None,
                     seed: int = 0, c_grid: Sequence[float] = DEFAULT_C_GRID,
                     max_iter: int = 2000) -> TrainOutcome:
    """Fit a deployable ranker for one aspect: resolve that aspect's
    judgments, split off a dev set, and pick C by dev accuracy."""
    if aspect not in ASPECTS:
        raise ValueError(f"aspect must be one of {ASPECTS}, got {aspect!r}")
    relevant = [j for j in judgments if j.aspect == aspect]
    if len(relevant) < 10:
        raise ValueError(f"need at least 10 {aspect} judgments to train, "
                         f"have {len(relevant)}")
    judged = resolve_judgments(corpus, relevant)
    if featurizer is None:
        featurizer = PathFeaturizer()
    featurizer.fit(corpus)
    prefs = _judged_preferences(judged, featurizer)
    train, dev, held_out = split(prefs, seed=seed)
    model, best_c, table = select_C(
        train, dev, grid=c_grid, max_iter=max_iter, random_state=seed,
        feature_names=featurizer.feature_names_)
    return TrainOutcome(model, best_c, table,
                        len(train), len(dev), len(held_out))


def run_experiment(corpus: PathCorpus, judgments: Sequence[Judgment],
                   aspect: str, masked_groups: tuple = (),
                   featurizer: PathFeaturizer | None = None,
                   seed: int = 0, c_grid: Sequence[float] = DEFAULT_C_GRID,
                   max_iter: int = 2000) -> ExperimentResult:
    """Train and evaluate the ranker on one aspect's judgments.

    Fits the featurizer on the corpus, splits the resolved judgments
    80/10/10, picks C on dev, then reports test pairwise accuracy for
    the learned model and all reference methods, with a paired t-test
    against the strongest reference.
    """
    if aspect not in ASPECTS:
        raise ValueError(f"aspect must be one of {ASPECTS}, got {aspect!r}")
    relevant = [j for j in judgments if j.aspect == aspect]
    judged = resolve_judgments(corpus, relevant)
    if len(judged) < 10:
        raise ValueError(f"need at least 10 {aspect} judgments, "
                         f"have {len(judged)}")
    if featurizer is None:
        featurizer = PathFeaturizer(masked_groups=tuple(masked_groups))
    featurizer.fit(corpus)
    if not featurizer.feature_names_:
        raise ValueError("every feature group is masked; nothing to learn from")

    g = corpus.graph
    prefs = _judged_preferences(judged, featurizer)
    paired = list(zip(judged, prefs))
    train, dev, test = split(paired, seed=seed)
    model, best_c, dev_table = select_C(
        [p for _, p in train], [p for _, p in dev], grid=c_grid,
        max_iter=max_iter, random_state=seed,
        feature_names=featurizer.feature_names_)

    fairy_hits = [
        1.0 if model.predict_pair(p.x_better, p.x_worse,
                                  p.better_id, p.worse_id) == "a" else 0.0
        for _, p in test]
    stats = build_pattern_stats(corpus.instances, g)
    baseline_hits: dict[str, list[float]] = {}
    for method in METHODS:
        hits = []
        for jp, _ in test:
            _u, _i, seen_at = parse_pair_key(jp.pair_key)
            hits.append(1.0 if _baseline_correct(g, jp, method, stats, seen_at)
                        else 0.0)
        baseline_hits[method] = hits

    accuracies = {m: float(np.mean(h)) for m, h in baseline_hits.items()}
    accuracies["fairy"] = float(np.mean(fairy_hits))
    best_baseline = max(METHODS, key=lambda m: accuracies[m])
    _t, p_value = paired_t_test(fairy_hits, baseline_hits[best_baseline])

    by_judge: dict[str, list[float]] = {}
    for (jp, _), hit in zip(test, fairy_hits):
        by_judge.setdefault(jp.judge, []).append(hit)
    per_judge = dict(sorted(
        ((j, float(np.mean(h))) for j, h in by_judge.items()),
        key=lambda kv: (-kv[1], kv[0])))

    longer = [1.0 if jp.better.length > jp.worse.length else 0.0
              for jp in judged]
    return ExperimentResult(
        aspect=aspect, accuracies=accuracies, best_baseline=best_baseline,
        p_value=p_value, selected_C=best_c, dev_accuracy_by_C=dev_table,
        n_train=len(train), n_dev=len(dev), n_test=len(test),
        per_judge=per_judge, longer_better_fraction=float(np.mean(longer)),
        model=model)


# -- reporting ------------------------------------------------------------------

def format_results_table(results: Sequence[ExperimentResult]) -> str:
    """Fixed-width accuracy grid, methods down, aspects across. The
    learned model's cell gets a star when it significantly beats the
    strongest reference method."""
    if not results:
        raise ValueError("no results to format")
    aspects = [r.aspect for r in results]
    rows = list(METHODS) + ["fairy"]
    width = max(len(m) for m in rows) + 2
    head = "method".ljust(width) + "".join(a.rjust(12) for a in aspects)
    lines = [head]
    for m in rows:
        cells = []
        for r in results:
            mark = "*" if m == "fairy" and r.significant else ""
            cells.append(f"{r.accuracies[m]:.3f}{mark}".rjust(12))
        lines.append(m.ljust(width) + "".join(cells))
    lines.append("(* p <= 0.05, paired t-test against the strongest "
                 "reference method)")
    return "\n".join(lines)


def save_results_csv(results: Sequence[ExperimentResult],
                     path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["aspect", "method", "accuracy",
                         "p_value_vs_best_baseline", "significant"])
        for r in results:
            for m in list(METHODS) + ["fairy"]:
                p = f"{r.p_value:.6g}" if m == "fairy" else ""
                sig = str(r.significant).lower() if m == "fairy" else ""
                writer.writerow([r.aspect, m, f"{r.accuracies[m]:.6f}", p, sig])
