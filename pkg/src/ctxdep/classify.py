"""Score thresholding plus the message-length and minimal-DF baselines."""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError

SENTINEL_MARGIN = 1.0


@dataclass(frozen=True)
class Threshold:
    T: float
    tuned_accuracy: float
    source: str = ""

    def to_json(self) -> dict:
        return {"T": self.T, "tuned_accuracy": self.tuned_accuracy, "source": self.source}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Threshold":
        return cls(float(obj["T"]), float(obj["tuned_accuracy"]), obj.get("source", ""))


def predict(score: float, threshold: Threshold | float) -> int:
    T = threshold.T if isinstance(threshold, Threshold) else threshold
    return 1 if score > T else -1


def predict_many(scores: Sequence[float], threshold: Threshold | float) -> list[int]:
    return [predict(s, threshold) for s in scores]


def threshold_candidates(scores: Sequence[float]) -> np.ndarray:
    """Midpoints of consecutive distinct scores plus one sentinel on each side."""
    u = np.unique(np.asarray(scores, dtype=np.float64))
    mids = (u[:-1] + u[1:]) / 2.0
    return np.concatenate([[u[0] - SENTINEL_MARGIN], mids, [u[-1] + SENTINEL_MARGIN]])


def tune_threshold(
    scores: Sequence[float], labels: Sequence[int], source: str = ""
) -> Threshold:
    """Threshold maximizing accuracy of ``score > T``; ties pick the smallest."""
    if len(scores) != len(labels):
        raise InputError("scores and labels differ in length")
    if not len(scores):
        raise InputError("cannot tune a threshold on no data")
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if np.all(y == y[0]):
        warnings.warn("threshold tuned on single-class labels", RuntimeWarning, stacklevel=2)

    cands = threshold_candidates(s)
    # for candidate T: correct = #{pos with s > T} + #{neg with s <= T}
    order = np.sort(s[y > 0])
    neg = np.sort(s[y <= 0])
    pos_above = len(order) - np.searchsorted(order, cands, side="right")
    neg_below = np.searchsorted(neg, cands, side="right")
    correct = pos_above + neg_below
    best = int(np.argmax(correct))
    return Threshold(float(cands[best]), int(correct[best]) / len(s), source)


def baseline_length(tokens: Sequence[str], T_len: Threshold | float) -> int:
    """Short messages are predicted context dependent."""
    T = T_len.T if isinstance(T_len, Threshold) else T_len
    return 1 if len(tokens) < T else -1


def length_score(tokens: Sequence[str]) -> float:
    """Score for tuning the length rule: ``-len > T'`` iff ``len < -T'``."""
    return -float(len(tokens))


def tune_length_threshold(
    messages: Sequence[Sequence[str]], labels: Sequence[int], source: str = ""
) -> Threshold:
    t = tune_threshold([length_score(m) for m in messages], labels, source)
    return Threshold(-t.T, t.tuned_accuracy, t.source)


class DfTable(dict):
    """Token -> number of distinct messages containing it."""

    @classmethod
    def build(cls, messages: Iterable[Sequence[str]]) -> "DfTable":
        df: Counter[str] = Counter()
        for tokens in messages:
            df.update(set(tokens))
        return cls(sorted(df.items()))


def minimal_df(tokens: Sequence[str], df: Mapping[str, int]) -> int:
    if not tokens:
        return 0
    return min(df.get(t, 0) for t in tokens)


def baseline_mdf(tokens: Sequence[str], df: Mapping[str, int], T_df: Threshold | float) -> int:
    """Messages made only of frequent words are predicted context dependent."""
    T = T_df.T if isinstance(T_df, Threshold) else T_df
    return 1 if minimal_df(tokens, df) > T else -1
