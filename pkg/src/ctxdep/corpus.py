"""Conversation triples, tokenization, response grouping and vocabulary."""

from __future__ import annotations

import hashlib
import io
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from .errors import FormatError

UNK = "<unk>"
PAD = "<pad>"
UNK_ID = 0
PAD_ID = 1

MALFORMED_LIMIT = 0.5


@dataclass(frozen=True)
class Triple:
    context: str
    message: str
    response: str


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]
    ids: tuple[int, ...] | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class ResponseGroup:
    message: TokenSeq
    message_raw: str
    responses: list[TokenSeq]
    flagged: bool = False

    @property
    def frequency(self) -> int:
        return len(self.responses)


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    stopwords: frozenset[str] = frozenset()

    def tokenize(self, text: str) -> TokenSeq:
        return tokenize(text, self.lowercase, self.stopwords)


@dataclass
class ParseStats:
    records: int = 0
    malformed: int = 0


@dataclass
class GroupStats:
    triples: int = 0
    dropped_empty_message: int = 0
    dropped_empty_response: int = 0
    groups: int = 0
    flagged: int = 0


def _parse_jsonl(line: str) -> Triple | None:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict):
        return None
    context = obj.get("context", "")
    message = obj.get("message")
    response = obj.get("response")
    if context is None:
        context = ""
    if not all(isinstance(v, str) for v in (context, message, response)):
        return None
    return Triple(context, message, response)


def _parse_tsv(line: str) -> Triple | None:
    fields = line.split("\t")
    if len(fields) != 3:
        return None
    return Triple(*fields)


def parse_triples(stream: IO[bytes], format: str = "jsonl") -> tuple[list[Triple], ParseStats]:
    """Read (context, message, response) records from a UTF-8 byte stream.

    Blank lines are ignored. Malformed records are skipped and counted; if
    more than half of the records are malformed a :class:`FormatError` is
    raised since the declared format is most likely wrong.
    """
    if format == "jsonl":
        parse = _parse_jsonl
    elif format == "tsv":
        parse = _parse_tsv
    else:
        raise FormatError(f"unknown corpus format {format!r}")

    if isinstance(stream, io.TextIOBase):
        raise TypeError("parse_triples expects a binary stream")

    stats = ParseStats()
    triples = []
    for raw in stream:
        try:
            line = raw.decode("utf-8").rstrip("\r\n")
        except UnicodeDecodeError:
            stats.records += 1
            stats.malformed += 1
            continue
        if not line.strip():
            continue
        stats.records += 1
        triple = parse(line)
        if triple is None:
            stats.malformed += 1
        else:
            triples.append(triple)
    if stats.records and stats.malformed / stats.records > MALFORMED_LIMIT:
        raise FormatError(
            f"{stats.malformed} of {stats.records} records malformed as {format}; "
            "wrong --format?"
        )
    return triples, stats


def _is_punctuation(token: str) -> bool:
    return all(unicodedata.category(ch).startswith("P") for ch in token)


def tokenize(
    text: str, lowercase: bool = True, stopwords: Iterable[str] | None = None
) -> TokenSeq:
    tokens = text.split()
    if lowercase:
        tokens = [t.casefold() for t in tokens]
    tokens = [t for t in tokens if not _is_punctuation(t)]
    if stopwords:
        stop = {s.casefold() for s in stopwords} if lowercase else set(stopwords)
        tokens = [t for t in tokens if t not in stop]
    return TokenSeq(tuple(tokens))


def load_stopwords(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def group_by_message(
    triples: Iterable[Triple],
    tokenizer: TokenizerConfig = TokenizerConfig(),
    min_responses: int = 2,
    stats: GroupStats | None = None,
) -> list[ResponseGroup]:
    """Aggregate the responses of each distinct tokenized message.

    Messages are identified by their tokenization. Responses are kept
    without stopword removal so both length conventions stay available.
    Groups with fewer than ``min_responses`` responses are flagged, not
    dropped. Output is sorted by message text.
    """
    if stats is None:
        stats = GroupStats()
    response_tok = TokenizerConfig(tokenizer.lowercase)
    groups: dict[tuple[str, ...], ResponseGroup] = {}
    for triple in triples:
        stats.triples += 1
        msg = tokenizer.tokenize(triple.message)
        if not msg.tokens:
            stats.dropped_empty_message += 1
            continue
        resp = response_tok.tokenize(triple.response)
        if not resp.tokens:
            stats.dropped_empty_response += 1
            continue
        group = groups.get(msg.tokens)
        if group is None:
            group = groups[msg.tokens] = ResponseGroup(msg, triple.message, [])
        group.responses.append(resp)

    out = sorted(groups.values(), key=lambda g: g.message.text)
    for g in out:
        g.flagged = g.frequency < min_responses
    stats.groups = len(out)
    stats.flagged = sum(g.flagged for g in out)
    return out


def flatten_groups(groups: Iterable[ResponseGroup]) -> list[Triple]:
    return [
        Triple("", g.message_raw, r.text) for g in groups for r in g.responses
    ]


@dataclass
class Vocabulary:
    id_to_token: list[str]
    counts: dict[str, int] = field(default_factory=dict)
    token_to_id: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def encode(self, seq: TokenSeq | Sequence[str]) -> TokenSeq:
        tokens = seq.tokens if isinstance(seq, TokenSeq) else tuple(seq)
        return TokenSeq(tokens, tuple(self.lookup(t) for t in tokens))

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.id_to_token).encode("utf-8")).hexdigest()

    def to_json(self) -> dict:
        return {
            "tokens": self.id_to_token,
            "counts": [self.counts.get(t, 0) for t in self.id_to_token],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        tokens = obj["tokens"]
        return cls(tokens, dict(zip(tokens, obj["counts"])))


def build_vocabulary(groups: Iterable[ResponseGroup], min_count: int = 1) -> Vocabulary:
    """Assign dense ids by descending corpus frequency, ties lexicographic.

    Message tokens are counted once per triple (i.e. weighted by the
    group frequency) and response tokens once per occurrence.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for g in groups:
        for tok in g.message.tokens:
            counts[tok] += g.frequency
        for r in g.responses:
            counts.update(r.tokens)
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count and t not in (UNK, PAD)),
        key=lambda t: (-counts[t], t),
    )
    return Vocabulary([UNK, PAD, *kept], dict(counts))


def group_to_json(g: ResponseGroup, message_id: int) -> dict:
    return {
        "id": message_id,
        "message": g.message.text,
        "message_raw": g.message_raw,
        "frequency": g.frequency,
        "flagged": g.flagged,
        "responses": [r.text for r in g.responses],
    }


def group_from_json(obj: dict) -> ResponseGroup:
    return ResponseGroup(
        TokenSeq(tuple(obj["message"].split())),
        obj["message_raw"],
        [TokenSeq(tuple(r.split())) for r in obj["responses"]],
        obj.get("flagged", False),
    )
