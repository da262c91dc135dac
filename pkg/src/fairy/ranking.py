"""Pairwise learning-to-rank over explanation-path features.

Judgments arrive as preferences ("this path beats that one for this
aspect"), so the model is a linear scorer trained with a pairwise
hinge loss:

    F(w) = 0.5 * ||w||^2 + C * sum_i max(0, 1 - w . (xb_i - xw_i))

on z-scored features, with no intercept (it cancels in the
difference). Optimized by a seeded stochastic subgradient with
Pegasos step sizes (lambda = 1/(C m), eta_t = 1/(lambda t)); the
model keeps the best iterate seen, so the recorded objective curve
never increases.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from hashlib import sha256
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass(frozen=True)
class PreferencePair:
    """One judgment: the path with id ``better_id`` beat ``worse_id``."""

    better_id: str
    worse_id: str
    x_better: np.ndarray
    x_worse: np.ndarray
    judge: str = ""
    aspect: str = ""

    def __post_init__(self):
        xb = np.asarray(self.x_better, dtype=float)
        xw = np.asarray(self.x_worse, dtype=float)
        if xb.shape != xw.shape or xb.ndim != 1:
            raise ValueError("preference pair vectors must be equal-length 1-d")
        object.__setattr__(self, "x_better", xb)
        object.__setattr__(self, "x_worse", xw)


def training_digest(pairs: Sequence[PreferencePair]) -> str:
    """Order-independent fingerprint of the judged pairs."""
    keys = sorted(f"{p.better_id}>{p.worse_id}" for p in pairs)
    return sha256("\n".join(keys).encode("utf-8")).hexdigest()


class PairwiseRanker(BaseEstimator):
    """Linear path scorer trained on preference pairs.

    Score ties resolve to the lexicographically smaller path id, so
    predictions and rankings are fully deterministic.
    """

    def __init__(self, C: float = 1.0, max_iter: int = 2000,
                 random_state: int = 0):
        self.C = C
        self.max_iter = max_iter
        self.random_state = random_state

    # -- training -------------------------------------------------------------

    def fit(self, pairs: Sequence[PreferencePair],
            feature_names: Sequence[str] | None = None) -> "PairwiseRanker":
        if not pairs:
            raise ValueError("cannot fit on zero preference pairs")
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        xb = np.stack([p.x_better for p in pairs])
        xw = np.stack([p.x_worse for p in pairs])
        stacked = np.vstack([xb, xw])
        mean = stacked.mean(axis=0)
        scale = stacked.std(axis=0)
        scale[scale == 0.0] = 1.0

        D = (xb - xw) / scale  # the mean cancels in the difference
        m, dim = D.shape
        if feature_names is not None and len(feature_names) != dim:
            raise ValueError(f"{len(feature_names)} feature names for "
                             f"{dim}-dimensional vectors")
        lam = 1.0 / (self.C * m)
        radius = 1.0 / np.sqrt(lam)
        rng = np.random.default_rng(self.random_state)

        def objective(w: np.ndarray) -> float:
            hinge = np.maximum(0.0, 1.0 - D @ w).sum()
            return 0.5 * float(w @ w) + self.C * float(hinge)

        w = np.zeros(dim)
        best_w, best_f = w.copy(), objective(w)
        history = [best_f]
        for t in range(1, self.max_iter + 1):
            i = int(rng.integers(m))
            violated = float(D[i] @ w) < 1.0
            w *= 1.0 - 1.0 / t
            if violated:
                w += D[i] / (lam * t)
            norm = float(np.linalg.norm(w))
            if norm > radius:
                w *= radius / norm
            f = objective(w)
            if f < best_f:
                best_f = f
                best_w = w.copy()
            history.append(best_f)

        self.coef_ = best_w
        self.mean_ = mean
        self.scale_ = scale
        self.objective_ = best_f
        self.objective_history_ = history
        self.n_features_in_ = dim
        self.n_pairs_ = m
        self.feature_names_ = list(feature_names) if feature_names else None
        self.training_digest_ = training_digest(pairs)
        return self

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("this ranker has not been fitted")

    # -- scoring --------------------------------------------------------------

    def decision_function(self, X: np.ndarray) -> np.ndarray | float:
        """Relevance score(s) of feature vector(s); higher ranks first."""
        self._check_fitted()
        X = np.asarray(X, dtype=float)
        one = X.ndim == 1
        scores = ((np.atleast_2d(X) - self.mean_) / self.scale_) @ self.coef_
        return float(scores[0]) if one else scores

    def contributions(self, x: np.ndarray) -> np.ndarray:
        """Per-feature share of one vector's score (sums to the score)."""
        self._check_fitted()
        x = np.asarray(x, dtype=float)
        return ((x - self.mean_) / self.scale_) * self.coef_

    def predict_pair(self, xa: np.ndarray, xb: np.ndarray,
                     a_id: str, b_id: str) -> str:
        """Which of two paths ranks higher: "a" or "b"."""
        sa = self.decision_function(xa)
        sb = self.decision_function(xb)
        if sa != sb:
            return "a" if sa > sb else "b"
        return "a" if a_id <= b_id else "b"

    def rank(self, X: np.ndarray, ids: Sequence[str]) -> list[str]:
        """Path ids ordered best-first (score desc, id asc on ties)."""
        scores = self.decision_function(np.atleast_2d(np.asarray(X, dtype=float)))
        if len(ids) != len(scores):
            raise ValueError("one id per feature row required")
        order = sorted(zip(ids, scores), key=lambda t: (-t[1], t[0]))
        return [pid for pid, _ in order]

    def score(self, pairs: Sequence[PreferencePair]) -> float:
        """Pairwise accuracy: fraction of pairs ranked the judged way."""
        if not pairs:
            raise ValueError("cannot score zero pairs")
        hits = sum(
            1 for p in pairs
            if self.predict_pair(p.x_better, p.x_worse,
                                 p.better_id, p.worse_id) == "a")
        return hits / len(pairs)

    # -- serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "kind": "pairwise-ranker",
            "layout": self.feature_names_,
            "weights": self.coef_.tolist(),
            "scaler": {"mean": self.mean_.tolist(),
                       "scale": self.scale_.tolist()},
            "hyper": {"C": self.C, "max_iter": self.max_iter,
                      "random_state": self.random_state},
            "objective": self.objective_,
            "n_pairs": self.n_pairs_,
            "training_digest": self.training_digest_,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PairwiseRanker":
        if data.get("kind") != "pairwise-ranker":
            raise ValueError(f"not a ranker artifact: kind={data.get('kind')!r}")
        hyper = data["hyper"]
        model = cls(C=float(hyper["C"]), max_iter=int(hyper["max_iter"]),
                    random_state=int(hyper["random_state"]))
        model.coef_ = np.asarray(data["weights"], dtype=float)
        model.mean_ = np.asarray(data["scaler"]["mean"], dtype=float)
        model.scale_ = np.asarray(data["scaler"]["scale"], dtype=float)
        model.objective_ = float(data["objective"])
        model.objective_history_ = []
        model.n_features_in_ = model.coef_.shape[0]
        model.n_pairs_ = int(data["n_pairs"])
        model.feature_names_ = (list(data["layout"])
                                if data.get("layout") else None)
        model.training_digest_ = str(data["training_digest"])
        return model


def save_model(model: PairwiseRanker, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_model(path: str | Path) -> PairwiseRanker:
    with open(path, encoding="utf-8") as fh:
        return PairwiseRanker.from_dict(json.load(fh))


def select_C(train: Sequence[PreferencePair], dev: Sequence[PreferencePair],
             grid: Sequence[float] = DEFAULT_C_GRID, max_iter: int = 2000,
             random_state: int = 0,
             feature_names: Sequence[str] | None = None,
             ) -> tuple[PairwiseRanker, float, dict[float, float]]:
    """Fit one ranker per C, keep the one with the best dev accuracy.

    Ties go to the smallest C (the grid is scanned in ascending order).
    """
    if not dev:
        raise ValueError("C selection needs a non-empty dev split")
    best: PairwiseRanker | None = None
    best_c = 0.0
    best_acc = -1.0
    table: dict[float, float] = {}
    for c in sorted(grid):
        model = PairwiseRanker(C=c, max_iter=max_iter,
                               random_state=random_state)
        model.fit(train, feature_names=feature_names)
        acc = model.score(dev)
        table[c] = acc
        if acc > best_acc:
            best, best_c, best_acc = model, c, acc
    assert best is not None
    return best, best_c, table
