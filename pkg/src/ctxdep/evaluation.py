"""Accuracy, exact sign test and comparison reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import InputError


def _check(preds: Sequence[int], labels: Sequence[int]) -> None:
    if len(preds) != len(labels):
        raise InputError(f"{len(preds)} predictions for {len(labels)} labels")
    if not labels:
        raise InputError("empty evaluation set")


def accuracy(preds: Sequence[int], labels: Sequence[int]) -> float:
    _check(preds, labels)
    return sum(p == y for p, y in zip(preds, labels)) / len(labels)


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total


def confusion(preds: Sequence[int], labels: Sequence[int]) -> Confusion:
    _check(preds, labels)
    tp = sum(p > 0 and y > 0 for p, y in zip(preds, labels))
    fp = sum(p > 0 and y <= 0 for p, y in zip(preds, labels))
    tn = sum(p <= 0 and y <= 0 for p, y in zip(preds, labels))
    return Confusion(tp, fp, tn, len(labels) - tp - fp - tn)


@dataclass(frozen=True)
class SignTest:
    p_value: float
    n: int
    k: int
    no_evidence: bool = False


def binomial_two_sided(n: int, k: int) -> float:
    """``2 * min(P(X <= k), P(X >= k))`` for X ~ Binomial(n, 1/2), capped at 1.

    Computed in exact rational arithmetic before the final conversion.
    """
    if not 0 <= k <= n:
        raise InputError(f"k={k} outside [0, {n}]")
    lower = sum(math.comb(n, i) for i in range(0, k + 1))
    upper = sum(math.comb(n, i) for i in range(k, n + 1))
    p = Fraction(2 * min(lower, upper), 2**n)
    return float(min(p, Fraction(1)))


def sign_test(preds_a: Sequence[int], preds_b: Sequence[int], labels: Sequence[int]) -> SignTest:
    """Exact two-sided sign test over items where exactly one system is right."""
    _check(preds_a, labels)
    _check(preds_b, labels)
    wins_a = wins_b = 0
    for a, b, y in zip(preds_a, preds_b, labels):
        ok_a, ok_b = a == y, b == y
        if ok_a and not ok_b:
            wins_a += 1
        elif ok_b and not ok_a:
            wins_b += 1
    n = wins_a + wins_b
    if n == 0:
        return SignTest(1.0, 0, 0, no_evidence=True)
    return SignTest(binomial_two_sided(n, wins_a), n, wins_a)


@dataclass
class EvalReport:
    dataset: str
    size: int
    systems: list[str]
    accuracy: dict[str, float]
    confusion: dict[str, Confusion]
    best: str
    sign_tests: dict[str, SignTest] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset,
            "size": self.size,
            "best": self.best,
            "systems": [
                {
                    "name": name,
                    "accuracy": self.accuracy[name],
                    **vars(self.confusion[name]),
                    **(
                        {
                            "vs_best": {
                                "p_value": self.sign_tests[name].p_value,
                                "discordant": self.sign_tests[name].n,
                                "wins": self.sign_tests[name].k,
                                "no_evidence": self.sign_tests[name].no_evidence,
                            }
                        }
                        if name in self.sign_tests
                        else {}
                    ),
                }
                for name in self.systems
            ],
        }

    def to_text(self) -> str:
        width = max(len(s) for s in self.systems + ["system"])
        lines = [
            f"dataset: {self.dataset} (n={self.size})",
            f"{'system':<{width}}  accuracy    tp    fp    tn    fn  p(vs {self.best})",
        ]
        for name in self.systems:
            c = self.confusion[name]
            st = self.sign_tests.get(name)
            if st is None:
                p = "-"
            elif st.no_evidence:
                p = "n/a (no discordant pairs)"
            else:
                p = f"{st.p_value:.4g}"
            lines.append(
                f"{name:<{width}}  {self.accuracy[name] * 100:7.2f}%"
                f" {c.tp:5d} {c.fp:5d} {c.tn:5d} {c.fn:5d}  {p}"
            )
        return "\n".join(lines) + "\n"


def build_report(
    systems: Mapping[str, Sequence[int]], labels: Sequence[int], dataset: str = ""
) -> EvalReport:
    """Accuracy and confusion per system; every other system is sign-tested
    against the most accurate one (first listed wins ties)."""
    if not systems:
        raise InputError("no systems to report")
    names = list(systems)
    acc = {n: accuracy(systems[n], labels) for n in names}
    conf = {n: confusion(systems[n], labels) for n in names}
    best = max(names, key=lambda n: (acc[n], -names.index(n)))
    tests = {
        n: sign_test(systems[best], systems[n], labels) for n in names if n != best
    }
    return EvalReport(dataset, len(labels), names, acc, conf, best, tests)
