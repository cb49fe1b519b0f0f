"""Response-diversity characteristics of a message and their normalization.

Three characteristics are estimated per message from the pooled word
distribution of its responses: entropy (base 2), one minus the maximum
word probability, and the average response length.  Entropy and length
are min-max normalized against the corpus; the mass complement already
lies in [0, 1].
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import ResponseGroup
from .errors import DegenerateDistribution, InputError

RAW_TOKENS = "raw_tokens"
POST_STOPWORD = "post_stopword"
COUNTING_MODES = (RAW_TOKENS, POST_STOPWORD)


@dataclass(frozen=True)
class WordDistribution:
    tokens: tuple[str, ...]
    probs: np.ndarray

    @property
    def support_size(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class NormalizationStats:
    min_entropy: float
    max_entropy: float
    min_avg_len: float
    max_avg_len: float

    def to_json(self) -> dict:
        return dict(vars(self))

    @classmethod
    def from_json(cls, obj: dict) -> "NormalizationStats":
        return cls(**{k: float(obj[k]) for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class SignalVector:
    entropy_norm: float
    m_p: float
    avg_len_norm: float
    raw_entropy: float
    raw_avg_len: float

    def features(self) -> tuple[float, float, float]:
        return (self.entropy_norm, self.m_p, self.avg_len_norm)


def word_distribution(
    group: ResponseGroup | Sequence, stopwords: Iterable[str] = ()
) -> WordDistribution:
    """Pooled unigram distribution over all responses of a message.

    Accepts a group or a bare list of responses (token sequences).
    """
    responses = group.responses if isinstance(group, ResponseGroup) else group
    stop = frozenset(stopwords)
    counts: Counter[str] = Counter()
    for r in responses:
        tokens = getattr(r, "tokens", r)
        counts.update(t for t in tokens if t not in stop)
    if not counts:
        raise DegenerateDistribution("no non-stopword response tokens")
    tokens = tuple(sorted(counts))
    c = np.array([counts[t] for t in tokens], dtype=np.float64)
    return WordDistribution(tokens, c / c.sum())


def entropy(dist: WordDistribution) -> float:
    p = dist.probs
    h = float(-np.sum(p * np.log2(p)))
    # rounding can push a uniform distribution a few ulp past the bound
    return min(max(h, 0.0), math.log2(dist.support_size))


def max_mass_complement(dist: WordDistribution) -> float:
    return float(1.0 - dist.probs.max())


def average_response_length(
    group: ResponseGroup | Sequence,
    counting: str = POST_STOPWORD,
    stopwords: Iterable[str] = (),
) -> float:
    responses = group.responses if isinstance(group, ResponseGroup) else group
    if not responses:
        raise InputError("average length of an empty group")
    if counting == RAW_TOKENS:
        lengths = [len(getattr(r, "tokens", r)) for r in responses]
    elif counting == POST_STOPWORD:
        stop = frozenset(stopwords)
        lengths = [
            sum(t not in stop for t in getattr(r, "tokens", r)) for r in responses
        ]
    else:
        raise InputError(f"unknown counting mode {counting!r}")
    return math.fsum(lengths) / len(lengths)


def normalize(values: Sequence[float]) -> tuple[np.ndarray, tuple[float, float]]:
    """Min-max scale to [0, 1]; a constant input maps to all zeros."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise InputError("cannot normalize an empty list")
    lo, hi = float(v.min()), float(v.max())
    return apply_minmax(v, lo, hi), (lo, hi)


def apply_minmax(values, lo: float, hi: float) -> np.ndarray:
    """Scale with fixed bounds, clamping values outside the fitted range."""
    v = np.asarray(values, dtype=np.float64)
    if hi <= lo:
        return np.zeros_like(v)
    return np.clip((v - lo) / (hi - lo), 0.0, 1.0)


@dataclass(frozen=True)
class RawSignals:
    entropy: float
    m_p: float
    avg_len: float


def raw_signals(
    group: ResponseGroup, stopwords: Iterable[str] = (), counting: str = POST_STOPWORD
) -> RawSignals:
    dist = word_distribution(group, stopwords)
    return RawSignals(
        entropy(dist),
        max_mass_complement(dist),
        average_response_length(group, counting, stopwords),
    )


def signal_vector(raw: RawSignals, stats: NormalizationStats) -> SignalVector:
    return SignalVector(
        float(apply_minmax(raw.entropy, stats.min_entropy, stats.max_entropy)),
        raw.m_p,
        float(apply_minmax(raw.avg_len, stats.min_avg_len, stats.max_avg_len)),
        raw.entropy,
        raw.avg_len,
    )


@dataclass
class SignalTable:
    """Signals of every eligible group, keyed by position in the group list."""

    ids: list[int]
    vectors: list[SignalVector]
    stats: NormalizationStats
    flagged: list[int]
    degenerate: list[int]


def compute_signals(
    groups: Sequence[ResponseGroup],
    stopwords: Iterable[str] = (),
    counting: str = POST_STOPWORD,
) -> SignalTable:
    stop = frozenset(stopwords)
    ids, raws, flagged, degenerate = [], [], [], []
    for i, g in enumerate(groups):
        if g.flagged:
            flagged.append(i)
            continue
        try:
            raws.append(raw_signals(g, stop, counting))
        except DegenerateDistribution:
            degenerate.append(i)
            continue
        ids.append(i)

    if raws:
        _, (e_lo, e_hi) = normalize([r.entropy for r in raws])
        _, (l_lo, l_hi) = normalize([r.avg_len for r in raws])
    else:
        e_lo = e_hi = l_lo = l_hi = 0.0
    stats = NormalizationStats(e_lo, e_hi, l_lo, l_hi)
    vectors = [signal_vector(r, stats) for r in raws]
    return SignalTable(ids, vectors, stats, flagged, degenerate)


@dataclass(frozen=True)
class HistogramBin:
    bin_start: float
    pct_positive: float
    pct_negative: float
    count: int


def histogram(
    values: Sequence[float], labels: Sequence[int], bin_width: float = 0.05
) -> list[HistogramBin]:
    """Per-bin label proportions over [0, 1] in bins of ``bin_width``.

    Bins are half-open ``[k*w, (k+1)*w)`` except the last, which includes
    1.0.  Proportions are fractions in [0, 1].
    """
    if len(values) != len(labels):
        raise InputError("values and labels differ in length")
    n_bins = round(1.0 / bin_width)
    if n_bins < 1 or abs(n_bins * bin_width - 1.0) > 1e-9:
        raise InputError(f"bin width {bin_width} does not divide 1")
    pos = np.zeros(n_bins, dtype=np.int64)
    neg = np.zeros(n_bins, dtype=np.int64)
    for v, y in zip(values, labels):
        if not 0.0 <= v <= 1.0:
            raise InputError(f"value {v} outside [0, 1]")
        # tolerance keeps e.g. 0.15 out of the 0.10 bin
        k = min(int(math.floor(v * n_bins + 1e-9)), n_bins - 1)
        if y > 0:
            pos[k] += 1
        else:
            neg[k] += 1
    out = []
    for k in range(n_bins):
        total = int(pos[k] + neg[k])
        out.append(
            HistogramBin(
                round(k / n_bins, 10),
                float(pos[k]) / total if total else 0.0,
                float(neg[k]) / total if total else 0.0,
                total,
            )
        )
    return out
