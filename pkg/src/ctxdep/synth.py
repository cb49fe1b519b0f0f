"""Seeded synthetic conversation corpus with known message labels.

Context-dependent messages draw their responses near-uniformly from a
large vocabulary, so the pooled response distribution is flat and the
responses are long.  Context-independent messages are answered with a
handful of short canned phrases, one of which dominates.

Message text carries the label through cue words: every message holds one
cue word, from its own class pool except for a ``cue_noise`` fraction,
padded with filler words.  Dependent messages are a little shorter and
favour the most common fillers, which gives the length and minimal-DF
baselines some (but not full) signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Triple
from .errors import ConfigError

MAX_ATTEMPTS = 10_000


@dataclass
class SyntheticSpec:
    n_messages: int = 2000
    dependent_fraction: float = 0.3
    min_responses: int = 10
    max_responses: int = 30
    n_validation: int = 200
    n_test: int = 500
    diverse_vocab: int = 3000
    concentrated_vocab: int = 150
    n_cues: int = 25
    n_fillers: int = 400
    common_fillers: int = 40
    common_bias: float = 0.5
    cue_noise: float = 0.05
    seed: int = 0

    def validate(self, prefix: str = "synth") -> None:
        if not 0.0 <= self.dependent_fraction <= 1.0:
            raise ConfigError(f"{prefix}.dependent_fraction", "must be in [0, 1]")
        if self.n_messages < 1:
            raise ConfigError(f"{prefix}.n_messages", "must be >= 1")
        if not 1 <= self.min_responses <= self.max_responses:
            raise ConfigError(f"{prefix}.min_responses", "need 1 <= min_responses <= max_responses")
        if self.n_validation > self.n_messages:
            raise ConfigError(f"{prefix}.n_validation", "cannot exceed n_messages")
        for name in ("n_test", "n_validation"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{prefix}.{name}", "must be >= 0")
        for name in ("diverse_vocab", "concentrated_vocab", "n_cues", "n_fillers"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{prefix}.{name}", "must be >= 2")
        for name in ("common_bias", "cue_noise"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{prefix}.{name}", "must be in [0, 1]")
        if not 1 <= self.common_fillers <= self.n_fillers:
            raise ConfigError(f"{prefix}.common_fillers", "must be in [1, n_fillers]")


@dataclass
class SyntheticCorpus:
    triples: list[Triple]
    labels: dict[str, int]
    validation: list[tuple[str, int]]
    test: list[tuple[str, int]]
    spec: SyntheticSpec = field(default_factory=SyntheticSpec)


class _MessageFactory:
    def __init__(self, spec: SyntheticSpec, rng: np.random.Generator):
        self.rng = rng
        self.spec = spec
        self.dep_cues = [f"dq{i:02d}" for i in range(spec.n_cues)]
        self.ind_cues = [f"iq{i:02d}" for i in range(spec.n_cues)]
        self.fillers = [f"m{i:03d}" for i in range(spec.n_fillers)]
        self.seen: set[str] = set()

    def make(self, dependent: bool) -> str:
        rng = self.rng
        spec = self.spec
        for _ in range(MAX_ATTEMPTS):
            length = int(rng.integers(1, 5)) if dependent else int(rng.integers(2, 7))
            # a few messages carry the other class's cue
            cue_dependent = dependent != bool(rng.random() < spec.cue_noise)
            cues = self.dep_cues if cue_dependent else self.ind_cues
            cue = cues[int(rng.integers(len(cues)))]
            words = []
            for _ in range(length - 1):
                common = dependent and rng.random() < spec.common_bias
                pool = self.fillers[: spec.common_fillers] if common else self.fillers
                words.append(pool[int(rng.integers(len(pool)))])
            words.insert(int(rng.integers(length)), cue)
            text = " ".join(words)
            if text not in self.seen:
                self.seen.add(text)
                return text
        raise ConfigError("synth.n_fillers", "too few distinct messages for the requested sizes")


def _responses(spec: SyntheticSpec, rng: np.random.Generator, dependent: bool) -> list[str]:
    n = int(rng.integers(spec.min_responses, spec.max_responses + 1))
    if dependent:
        out = []
        for _ in range(n):
            length = int(rng.integers(4, 11))
            out.append(" ".join(f"r{int(w):04d}" for w in rng.integers(spec.diverse_vocab, size=length)))
        return out
    phrases = []
    for _ in range(3):
        length = int(rng.integers(1, 3))
        phrases.append(" ".join(f"k{int(w):03d}" for w in rng.integers(spec.concentrated_vocab, size=length)))
    weights = np.array([0.7, 0.2, 0.1])
    out = []
    for _ in range(n):
        if rng.random() < 0.1:
            # occasional off-script reply
            length = int(rng.integers(2, 6))
            out.append(" ".join(f"r{int(w):04d}" for w in rng.integers(spec.diverse_vocab, size=length)))
        else:
            out.append(phrases[int(rng.choice(3, p=weights))])
    return out


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticCorpus:
    """Corpus triples for ``n_messages`` messages plus labeled splits.

    ``validation`` is a labeled sample of corpus messages; ``test`` holds
    fresh messages absent from the corpus.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    factory = _MessageFactory(spec, rng)

    def draw_label() -> bool:
        return bool(rng.random() < spec.dependent_fraction)

    triples: list[Triple] = []
    labels: dict[str, int] = {}
    contexts = [f"c{i:03d}" for i in range(200)]
    for _ in range(spec.n_messages):
        dependent = draw_label()
        msg = factory.make(dependent)
        labels[msg] = 1 if dependent else -1
        for resp in _responses(spec, rng, dependent):
            context = " ".join(contexts[int(c)] for c in rng.integers(len(contexts), size=3))
            triples.append(Triple(context, msg, resp))

    order = rng.permutation(len(triples))
    triples = [triples[i] for i in order]

    corpus_msgs = sorted(labels)
    picked = rng.choice(len(corpus_msgs), size=spec.n_validation, replace=False)
    validation = [(corpus_msgs[i], labels[corpus_msgs[i]]) for i in sorted(picked)]

    test = []
    for _ in range(spec.n_test):
        dependent = draw_label()
        test.append((factory.make(dependent), 1 if dependent else -1))
    return SyntheticCorpus(triples, labels, validation, test, spec)
