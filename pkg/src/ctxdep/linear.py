"""Linear max-margin models trained by stochastic subgradient descent.

Two primal objectives are supported::

    classification:  1/2 |w|^2 + C * sum max(0, 1 - y (w.x + b))
    regression:      1/2 |w|^2 + C * sum max(0, |y - (w.x + b)| - epsilon)

Both are optimized with the Pegasos step schedule ``1 / (lambda * t)``
where ``lambda = 1 / (C * N)``.  The bias is handled as an extra weight on
a constant feature and is therefore regularized as well; an unregularized
bias under this schedule takes steps of size ``C * N`` and never settles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, ConfigError, InputError

CLASSIFICATION = "classification"
REGRESSION = "regression"
C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
MODEL_VERSION = 1


@dataclass(frozen=True)
class FeatureVector:
    ids: np.ndarray
    values: np.ndarray

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "FeatureVector":
        items = sorted(pairs)
        ids = np.array([i for i, _ in items], dtype=np.int64)
        if len(ids) > 1 and np.any(np.diff(ids) == 0):
            raise InputError("duplicate feature ids")
        return cls(ids, np.array([v for _, v in items], dtype=np.float64))

    @classmethod
    def dense(cls, values: Sequence[float]) -> "FeatureVector":
        v = np.asarray(values, dtype=np.float64)
        return cls(np.arange(len(v), dtype=np.int64), v)

    def __len__(self) -> int:
        return len(self.ids)

    def scaled(self, alpha: float) -> "FeatureVector":
        return FeatureVector(self.ids, self.values * alpha)

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.ids, self.values)}


class FeatureIndex:
    """Frozen map from n-gram / tag feature names to dense ids."""

    def __init__(self, names: Iterable[str] = ()):
        self.names = list(names)
        self.ids = {n: i for i, n in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    @classmethod
    def build(cls, messages: Iterable[Sequence[str]], tags: Iterable[Sequence[str] | None] = ()) -> "FeatureIndex":
        names = set()
        for tokens in messages:
            names.update(_ngram_names(tokens))
        for tag_seq in tags:
            if tag_seq:
                names.update(f"t:{t}" for t in tag_seq)
        return cls(sorted(names))


def _ngram_names(tokens: Sequence[str]) -> list[str]:
    names = [f"u:{t}" for t in tokens]
    names += [f"b:{a} {b}" for a, b in zip(tokens, tokens[1:])]
    return names


def extract_ngram_features(
    tokens: Sequence[str],
    index: FeatureIndex,
    tags: Sequence[str] | None = None,
    source_length: int | None = None,
) -> FeatureVector:
    """Unigram and bigram counts, plus relative POS-tag frequencies.

    ``tags`` must align with the message's tokens before any filtering;
    pass ``source_length`` when that differs from ``len(tokens)``.
    N-grams missing from the frozen ``index`` are ignored.
    """
    counts: dict[int, float] = {}
    for name in _ngram_names(tokens):
        fid = index.ids.get(name)
        if fid is not None:
            counts[fid] = counts.get(fid, 0.0) + 1.0
    if tags is not None:
        expected = len(tokens) if source_length is None else source_length
        if len(tags) != expected:
            raise AlignmentError(f"{len(tags)} tags for {expected} tokens")
        for t in tags:
            fid = index.ids.get(f"t:{t}")
            if fid is not None:
                counts[fid] = counts.get(fid, 0.0) + 1.0 / len(tags)
    return FeatureVector.from_pairs(counts.items())


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    mode: str
    C: float
    epsilon: float = 0.0
    objective_history: list[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def to_json(self, feature_index: FeatureIndex | None = None) -> dict:
        return {
            "version": MODEL_VERSION,
            "mode": self.mode,
            "C": self.C,
            "epsilon": self.epsilon,
            "bias": self.bias,
            "weights": [float(w) for w in self.weights],
            "feature_index": None if feature_index is None else feature_index.names,
            "objective_history": self.objective_history,
        }

    @classmethod
    def from_json(cls, obj: dict) -> tuple["LinearModel", FeatureIndex | None]:
        if obj.get("version") != MODEL_VERSION:
            raise InputError(f"unsupported linear model version {obj.get('version')}")
        model = cls(
            np.asarray(obj["weights"], dtype=np.float64),
            float(obj["bias"]),
            obj["mode"],
            float(obj["C"]),
            float(obj["epsilon"]),
            list(obj.get("objective_history", [])),
        )
        names = obj.get("feature_index")
        return model, None if names is None else FeatureIndex(names)


def decision_value(model: LinearModel, x: FeatureVector) -> float:
    if len(x) == 0:
        return float(model.bias)
    return float(model.weights[x.ids] @ x.values + model.bias)


def predict_label(model: LinearModel, x: FeatureVector) -> int:
    return 1 if decision_value(model, x) > 0 else -1


def _loss(mode: str, y: float, f: float, epsilon: float) -> float:
    if mode == CLASSIFICATION:
        return max(0.0, 1.0 - y * f)
    return max(0.0, abs(y - f) - epsilon)


def objective(model: LinearModel, X: Sequence[FeatureVector], y: Sequence[float]) -> float:
    """Primal objective including the regularized bias term."""
    reg = 0.5 * (float(model.weights @ model.weights) + model.bias**2)
    slack = sum(
        _loss(model.mode, float(t), decision_value(model, x), model.epsilon)
        for x, t in zip(X, y)
    )
    return reg + model.C * slack


def train_linear(
    X: Sequence[FeatureVector],
    y: Sequence[float],
    mode: str = CLASSIFICATION,
    C: float = 1.0,
    n_features: int | None = None,
    epochs: int = 100,
    seed: int = 0,
    epsilon: float = 0.1,
) -> LinearModel:
    """Fit a linear SVM (or SVR) with seeded Pegasos subgradient steps.

    The objective is evaluated after every epoch and the epoch-end iterate
    with the lowest objective is returned, so the reported objective never
    exceeds the one after the first epoch.
    """
    if mode not in (CLASSIFICATION, REGRESSION):
        raise ConfigError("mode", f"unknown mode {mode!r}")
    if C <= 0:
        raise ConfigError("C", "must be > 0")
    if epsilon < 0:
        raise ConfigError("epsilon", "must be >= 0")
    if len(X) != len(y):
        raise InputError("features and targets differ in length")
    if len(X) < 2:
        raise InputError("need at least 2 training examples")
    if n_features is None:
        n_features = 1 + max((int(x.ids.max()) for x in X if len(x)), default=-1)
    if n_features <= 0:
        raise ConfigError("n_features", "empty feature space")
    targets = np.asarray(y, dtype=np.float64)
    if mode == CLASSIFICATION and not np.all(np.isin(targets, (-1.0, 1.0))):
        raise InputError("classification targets must be -1 or +1")

    n = len(X)
    lam = 1.0 / (C * n)
    rng = np.random.default_rng(seed)
    # w = scale * v lets the shrink step cost O(1) on sparse inputs
    v = np.zeros(n_features)
    scale = 1.0
    bias = 0.0
    t = 0
    best = None
    history = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            x, target = X[i], targets[i]
            f = scale * float(v[x.ids] @ x.values) + bias
            shrink = 1.0 - eta * lam
            if shrink <= 0.0:
                v[:] = 0.0
                scale = 1.0
            else:
                scale *= shrink
            bias *= max(shrink, 0.0)
            if mode == CLASSIFICATION:
                step = eta * target if target * f < 1.0 else 0.0
            else:
                r = target - f
                step = eta * np.sign(r) if abs(r) > epsilon else 0.0
            if step:
                v[x.ids] += (step / scale) * x.values
                bias += step
            if scale < 1e-9:
                v *= scale
                scale = 1.0
        model = LinearModel(v * scale, bias, mode, C, epsilon)
        obj = objective(model, X, targets)
        history.append(obj)
        if best is None or obj < best[0]:
            best = (obj, model)
    if best is None:
        model = LinearModel(np.zeros(n_features), 0.0, mode, C, epsilon)
        history.append(objective(model, X, targets))
        best = (history[0], model)
    model = best[1]
    model.objective_history = history
    return model


@dataclass
class CvResult:
    best_C: float
    fold_accuracies: list[float]
    mean_accuracy: float
    grid: dict[float, float]
    folds: list[list[int]]

    def to_json(self) -> dict:
        return {
            "best_C": self.best_C,
            "fold_accuracies": self.fold_accuracies,
            "mean_accuracy": self.mean_accuracy,
            "grid": [[c, acc] for c, acc in self.grid.items()],
        }


def kfold_indices(n: int, k: int, seed: int) -> list[list[int]]:
    if k < 2:
        raise ConfigError("k", "need at least 2 folds")
    if k > n:
        raise ConfigError("k", f"{k} folds for {n} examples")
    perm = np.random.default_rng(seed).permutation(n)
    return [sorted(int(i) for i in part) for part in np.array_split(perm, k)]


def _accuracy(model: LinearModel, X, y) -> float:
    hits = sum(predict_label(model, x) == t for x, t in zip(X, y))
    return hits / len(y)


def kfold_cv(
    X: Sequence[FeatureVector],
    y: Sequence[int],
    k: int = 5,
    C_grid: Sequence[float] = C_GRID,
    seed: int = 0,
    n_features: int | None = None,
    epochs: int = 100,
) -> CvResult:
    """Pick C by k-fold cross-validated accuracy; ties go to the smaller C."""
    folds = kfold_indices(len(X), k, seed)
    grid: dict[float, float] = {}
    per_fold: dict[float, list[float]] = {}
    for C in sorted(C_grid):
        accs = []
        for held in folds:
            held_set = set(held)
            train = [i for i in range(len(X)) if i not in held_set]
            model = train_linear(
                [X[i] for i in train], [y[i] for i in train], CLASSIFICATION, C,
                n_features=n_features, epochs=epochs, seed=seed,
            )
            accs.append(_accuracy(model, [X[i] for i in held], [y[i] for i in held]))
        per_fold[C] = accs
        grid[C] = sum(accs) / len(accs)
    best_C = max(grid, key=lambda c: (grid[c], -c))
    return CvResult(best_C, per_fold[best_C], grid[best_C], grid, folds)
