"""Weakly labeled training set: each message paired with its combiner score."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import ResponseGroup, TokenSeq, Vocabulary
from .errors import DegenerateDistribution, DependencyError, InputError
from .linear import CLASSIFICATION, FeatureVector, LinearModel, decision_value
from .signals import (
    POST_STOPWORD,
    NormalizationStats,
    SignalVector,
    raw_signals,
    signal_vector,
)


@dataclass(frozen=True)
class WeakLabeledExample:
    message: TokenSeq
    y: float
    signals: SignalVector

    def to_json(self) -> dict:
        return {
            "message": self.message.text,
            "ids": list(self.message.ids or ()),
            "y": self.y,
            "signals": {
                "entropy_norm": self.signals.entropy_norm,
                "m_p": self.signals.m_p,
                "avg_len_norm": self.signals.avg_len_norm,
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WeakLabeledExample":
        s = obj["signals"]
        return cls(
            TokenSeq(tuple(obj["message"].split()), tuple(obj["ids"])),
            float(obj["y"]),
            SignalVector(s["entropy_norm"], s["m_p"], s["avg_len_norm"], math.nan, math.nan),
        )


@dataclass(frozen=True)
class LabeledMessage:
    message: TokenSeq
    label: int
    raw: str = ""
    tags: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise InputError(f"label must be -1 or +1, got {self.label}")


def signal_features(v: SignalVector) -> FeatureVector:
    return FeatureVector.dense(v.features())


def build_weak_dataset(
    groups: Sequence[ResponseGroup],
    stats: NormalizationStats | None,
    combiner: LinearModel,
    vocab: Vocabulary | None = None,
    stopwords: Iterable[str] = (),
    counting: str = POST_STOPWORD,
) -> tuple[list[WeakLabeledExample], dict]:
    """Score every eligible group with the signal combiner.

    Returns the examples sorted by message text and a manifest with
    eligibility counts and the range of the weak labels.
    """
    if stats is None:
        raise DependencyError("signals", "normalization statistics")
    if combiner.mode != CLASSIFICATION:
        raise InputError("the signal combiner must be a classification model")
    stop = frozenset(stopwords)
    examples = []
    flagged = degenerate = 0
    for g in groups:
        if g.flagged:
            flagged += 1
            continue
        try:
            raw = raw_signals(g, stop, counting)
        except DegenerateDistribution:
            degenerate += 1
            continue
        vec = signal_vector(raw, stats)
        y = decision_value(combiner, signal_features(vec))
        msg = vocab.encode(g.message) if vocab is not None else g.message
        examples.append(WeakLabeledExample(msg, y, vec))
    examples.sort(key=lambda e: e.message.text)
    ys = [e.y for e in examples]
    manifest = {
        "groups": len(groups),
        "eligible": len(examples),
        "flagged": flagged,
        "degenerate": degenerate,
        "y_min": min(ys) if ys else None,
        "y_max": max(ys) if ys else None,
        "y_mean": math.fsum(ys) / len(ys) if ys else None,
        "y_positive": sum(y > 0 for y in ys),
    }
    return examples, manifest


__all__ = [
    "LabeledMessage",
    "WeakLabeledExample",
    "build_weak_dataset",
    "signal_features",
]
