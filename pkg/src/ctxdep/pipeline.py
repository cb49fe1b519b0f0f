"""File-based pipeline stages.

Every stage reads its inputs from the workspace, writes its outputs into
its own subdirectory and records a ``manifest.json`` with the hashes of
everything it read and wrote.  Stages never share in-memory state.
"""

from __future__ import annotations

import csv
import fcntl
import hashlib
import json
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from . import classify, corpus, evaluation, linear, lstm, signals, synth
from .config import PipelineConfig
from .errors import DependencyError, FormatError, InputError
from .weaklabel import LabeledMessage, WeakLabeledExample, build_weak_dataset, signal_features

log = logging.getLogger(__name__)

STAGES = (
    "synth",
    "ingest",
    "signals",
    "train-combiner",
    "weaklabel",
    "train-lstm",
    "tune-threshold",
    "predict",
    "evaluate",
    "histogram",
)
SYSTEMS = (
    "Length",
    "MDF",
    "SVM(Length+MDF)",
    "SVM(classification)",
    "SVM(regression)",
    "LSTM",
)
HISTOGRAM_WIDTHS = {"entropy_norm": 0.05, "m_p": 0.05, "avg_len_norm": 0.1}


# -- file helpers -------------------------------------------------------------


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def read_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_jsonl(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def read_jsonl(path: Path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_table(path: Path, header, rows, delimiter: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_table(path: Path, delimiter: str) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh, delimiter=delimiter))


def load_labeled(path: Path, tokenizer: corpus.TokenizerConfig) -> list[tuple[str, LabeledMessage]]:
    """Labeled messages as ``(message_id, LabeledMessage)``.

    Records are JSONL ``{"message", "label"}`` with optional ``"id"`` and
    ``"tags"``; tags align with the whitespace tokens of the raw message.
    """
    out = []
    for k, obj in enumerate(read_jsonl(path)):
        try:
            text = obj["message"]
            label = int(obj["label"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{k + 1}: bad labeled record") from exc
        tags = obj.get("tags")
        if tags is not None and len(tags) != len(text.split()):
            raise FormatError(f"{path}:{k + 1}: {len(tags)} tags for {len(text.split())} tokens")
        msg = LabeledMessage(
            tokenizer.tokenize(text), label, text, None if tags is None else tuple(tags)
        )
        out.append((str(obj.get("id", k)), msg))
    return out


# -- workspace ----------------------------------------------------------------


@dataclass
class Workspace:
    root: Path

    def path(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    def need(self, stage: str, *parts: str) -> Path:
        p = self.path(*parts)
        if not p.exists():
            raise DependencyError(stage, str(p))
        return p

    @contextmanager
    def lock(self):
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.root / ".lock", "w") as fh:
            try:
                fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
            except BlockingIOError as exc:
                raise InputError(f"workspace {self.root} is in use by another run") from exc
            try:
                yield
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)


class StageContext:
    """Tracks the files a stage reads and writes for its manifest."""

    def __init__(self, name: str, ws: Workspace, cfg: PipelineConfig):
        self.name = name
        self.ws = ws
        self.cfg = cfg
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.extra: dict = {}

    def need(self, stage: str, *parts: str) -> Path:
        p = self.ws.need(stage, *parts)
        self.inputs.append(p)
        return p

    def external(self, path: str | None, what: str) -> Path:
        """A user-supplied input, defaulting to the synth stage output."""
        if path is None:
            return self.need("synth", "synth", f"{what}.jsonl")
        p = Path(path)
        if not p.exists():
            raise InputError(f"{what} file not found: {p}")
        self.inputs.append(p)
        return p

    def out(self, *parts: str) -> Path:
        p = self.ws.path(self.name, *parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(p)
        return p

    def _rel(self, p: Path) -> str:
        try:
            return str(p.resolve().relative_to(self.ws.root.resolve()))
        except ValueError:
            return str(p)

    def write_manifest(self) -> Path:
        manifest = {
            "stage": self.name,
            "inputs": {self._rel(p): sha256_file(p) for p in self.inputs},
            "outputs": {self._rel(p): sha256_file(p) for p in self.outputs},
            "config": self.cfg.to_json(),
            "seed": self.cfg.seed,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            **self.extra,
        }
        path = self.ws.path(self.name, "manifest.json")
        write_json(path, manifest)
        return path


def _tokenizer(cfg: PipelineConfig) -> corpus.TokenizerConfig:
    stop = corpus.load_stopwords(cfg.stopwords) if cfg.stopwords else frozenset()
    return corpus.TokenizerConfig(cfg.lowercase, stop)


def _load_groups(ctx: StageContext) -> list[corpus.ResponseGroup]:
    rows = read_jsonl(ctx.need("ingest", "ingest", "groups.jsonl"))
    return [corpus.group_from_json(r) for r in rows]


def _load_vocab(ctx: StageContext) -> corpus.Vocabulary:
    return corpus.Vocabulary.from_json(read_json(ctx.need("ingest", "ingest", "vocab.json")))


def _load_signals(ctx: StageContext) -> tuple[dict[int, signals.SignalVector], signals.NormalizationStats]:
    rows = read_table(ctx.need("signals", "signals", "signals.tsv"), "\t")
    stats = signals.NormalizationStats.from_json(
        read_json(ctx.need("signals", "signals", "stats.json"))["normalization"]
    )
    table = {
        int(r["message_id"]): signals.SignalVector(
            float(r["entropy_norm"]),
            float(r["m_p"]),
            float(r["avg_len_norm"]),
            float(r["raw_entropy"]),
            float(r["raw_avg_len"]),
        )
        for r in rows
    }
    return table, stats


def _load_weak(ctx: StageContext) -> list[WeakLabeledExample]:
    return [WeakLabeledExample.from_json(r) for r in read_jsonl(ctx.need("weaklabel", "weaklabel", "weak.jsonl"))]


def _lstm_ids(vocab: corpus.Vocabulary, msg: corpus.TokenSeq) -> list[int]:
    # an all-stopword message still needs one step to be scored
    return list(vocab.encode(msg).ids) or [corpus.UNK_ID]


# -- stages -------------------------------------------------------------------


def stage_synth(ctx: StageContext) -> None:
    data = synth.generate_synthetic(ctx.cfg.synth)
    write_jsonl(
        ctx.out("corpus.jsonl"),
        ({"context": t.context, "message": t.message, "response": t.response} for t in data.triples),
    )
    write_jsonl(ctx.out("truth.jsonl"), ({"message": m, "label": y} for m, y in sorted(data.labels.items())))
    write_jsonl(ctx.out("validation.jsonl"), ({"id": f"v{k}", "message": m, "label": y} for k, (m, y) in enumerate(data.validation)))
    write_jsonl(ctx.out("test.jsonl"), ({"id": f"t{k}", "message": m, "label": y} for k, (m, y) in enumerate(data.test)))
    ctx.extra["counts"] = {
        "triples": len(data.triples),
        "messages": len(data.labels),
        "dependent": sum(y > 0 for y in data.labels.values()),
        "validation": len(data.validation),
        "test": len(data.test),
    }


def stage_ingest(ctx: StageContext) -> None:
    cfg = ctx.cfg
    src = ctx.external(cfg.corpus, "corpus")
    with open(src, "rb") as fh:
        triples, pstats = corpus.parse_triples(fh, cfg.format)
    gstats = corpus.GroupStats()
    groups = corpus.group_by_message(triples, _tokenizer(cfg), cfg.min_responses, gstats)
    vocab = corpus.build_vocabulary(groups, cfg.min_count)
    write_jsonl(ctx.out("groups.jsonl"), (corpus.group_to_json(g, i) for i, g in enumerate(groups)))
    write_json(ctx.out("vocab.json"), vocab.to_json())
    write_json(
        ctx.out("stats.json"),
        {"parse": vars(pstats), "grouping": vars(gstats), "vocab_size": len(vocab), "vocab_hash": vocab.digest()},
    )


def stage_signals(ctx: StageContext) -> None:
    cfg = ctx.cfg
    groups = _load_groups(ctx)
    table = signals.compute_signals(groups, _tokenizer(cfg).stopwords, cfg.counting)
    write_table(
        ctx.out("signals.tsv"),
        ["message_id", "raw_entropy", "entropy_norm", "m_p", "raw_avg_len", "avg_len_norm"],
        (
            [i, repr(v.raw_entropy), repr(v.entropy_norm), repr(v.m_p), repr(v.raw_avg_len), repr(v.avg_len_norm)]
            for i, v in zip(table.ids, table.vectors)
        ),
        "\t",
    )
    write_json(
        ctx.out("stats.json"),
        {
            "normalization": table.stats.to_json(),
            "eligible": len(table.ids),
            "flagged": len(table.flagged),
            "degenerate": len(table.degenerate),
            "counting": cfg.counting,
        },
    )


def _validation_signals(ctx: StageContext):
    """Signal features of validation messages that have corpus responses."""
    cfg = ctx.cfg
    tok = _tokenizer(cfg)
    labeled = load_labeled(ctx.external(cfg.validation, "validation"), tok)
    groups = _load_groups(ctx)
    table, _ = _load_signals(ctx)
    by_text = {g.message.text: i for i, g in enumerate(groups)}
    X, y, missing = [], [], 0
    for _, m in labeled:
        gid = by_text.get(m.message.text)
        if gid is None or gid not in table:
            missing += 1
            continue
        X.append(table[gid])
        y.append(m.label)
    return X, y, missing


def cv_threshold_accuracy(scores, labels, folds) -> float:
    """Mean held-out accuracy of a threshold tuned on the remaining folds."""
    accs = []
    for held in folds:
        held_set = set(held)
        train = [i for i in range(len(scores)) if i not in held_set]
        T = classify.tune_threshold([scores[i] for i in train], [labels[i] for i in train])
        preds = classify.predict_many([scores[i] for i in held], T)
        accs.append(evaluation.accuracy(preds, [labels[i] for i in held]))
    return math.fsum(accs) / len(accs)


def stage_train_combiner(ctx: StageContext) -> None:
    cfg = ctx.cfg
    vecs, y, missing = _validation_signals(ctx)
    if len(vecs) < cfg.cv_folds:
        raise InputError(f"only {len(vecs)} validation messages have signals; need >= {cfg.cv_folds}")
    X = [signal_features(v) for v in vecs]
    cv = linear.kfold_cv(X, y, cfg.cv_folds, cfg.c_grid, cfg.seed, n_features=3, epochs=cfg.linear_epochs)
    model = linear.train_linear(X, y, linear.CLASSIFICATION, cv.best_C, 3, cfg.linear_epochs, cfg.seed)
    write_json(ctx.out("model.json"), model.to_json())
    per_signal = {
        name: cv_threshold_accuracy([getattr(v, name) for v in vecs], y, cv.folds)
        for name in ("entropy_norm", "m_p", "avg_len_norm")
    }
    write_json(
        ctx.out("cv.json"),
        {
            **cv.to_json(),
            "labeled_used": len(vecs),
            "labeled_without_signals": missing,
            "cv_accuracy": {**per_signal, "combiner": cv.mean_accuracy},
        },
    )


def stage_weaklabel(ctx: StageContext) -> None:
    cfg = ctx.cfg
    groups = _load_groups(ctx)
    vocab = _load_vocab(ctx)
    _, stats = _load_signals(ctx)
    combiner, _ = linear.LinearModel.from_json(read_json(ctx.need("train-combiner", "train-combiner", "model.json")))
    data, manifest = build_weak_dataset(groups, stats, combiner, vocab, _tokenizer(cfg).stopwords, cfg.counting)
    write_jsonl(ctx.out("weak.jsonl"), (e.to_json() for e in data))
    write_json(ctx.out("dataset.json"), manifest)


def stage_train_lstm(ctx: StageContext) -> None:
    cfg = ctx.cfg
    vocab = _load_vocab(ctx)
    weak = _load_weak(ctx)
    if not weak:
        raise InputError("weak-label dataset is empty")
    data = [(list(e.message.ids), e.y) for e in weak]
    result = lstm.train(data, len(vocab), cfg.train, on_epoch=lambda e, l: log.info("epoch %d loss %.6f", e, l))
    lstm.save_params(ctx.out("model.json"), result.params, vocab.digest(), cfg.train)
    # wall_seconds is timing metadata and differs between runs
    log_path = ctx.ws.path(ctx.name, "train_log.csv")
    write_table(
        log_path,
        ["epoch", "mean_loss", "wall_seconds"],
        ([k + 1, repr(l), f"{s:.3f}"] for k, (l, s) in enumerate(zip(result.epoch_loss, result.epoch_seconds))),
        ",",
    )
    ctx.extra["train_log"] = str(log_path.name)


@dataclass
class Systems:
    """Everything needed to score a tokenized message with each system."""

    vocab: corpus.Vocabulary
    params: lstm.LstmParams
    df: classify.DfTable
    thresholds: dict[str, classify.Threshold]
    lenmdf: linear.LinearModel
    lenmdf_bounds: list[list[float]]
    svm_cls: linear.LinearModel
    cls_index: linear.FeatureIndex
    svm_reg: linear.LinearModel
    reg_index: linear.FeatureIndex

    def lenmdf_features(self, msg: corpus.TokenSeq) -> linear.FeatureVector:
        raw = [len(msg), classify.minimal_df(msg.tokens, self.df)]
        return linear.FeatureVector.dense(
            [float(signals.apply_minmax(v, lo, hi)) for v, (lo, hi) in zip(raw, self.lenmdf_bounds)]
        )

    def scores(self, messages: list[LabeledMessage]) -> dict[str, list[float]]:
        toks = [m.message for m in messages]
        return {
            "Length": [classify.length_score(m.tokens) for m in toks],
            "MDF": [float(classify.minimal_df(m.tokens, self.df)) for m in toks],
            "SVM(Length+MDF)": [linear.decision_value(self.lenmdf, self.lenmdf_features(m)) for m in toks],
            "SVM(classification)": [
                linear.decision_value(self.svm_cls, _ngram(m, self.cls_index)) for m in messages
            ],
            "SVM(regression)": [
                linear.decision_value(self.svm_reg, _ngram(m, self.reg_index, tags=False)) for m in messages
            ],
            "LSTM": [float(s) for s in lstm.score_messages(self.params, [_lstm_ids(self.vocab, m) for m in toks])],
        }

    def predictions(self, messages: list[LabeledMessage]) -> dict[str, list[int]]:
        out = {}
        for name, s in self.scores(messages).items():
            if name in self.thresholds:
                out[name] = classify.predict_many(s, self.thresholds[name])
            else:
                out[name] = [1 if v > 0 else -1 for v in s]
        return out


def _ngram(m: LabeledMessage, index: linear.FeatureIndex, tags: bool = True) -> linear.FeatureVector:
    use_tags = m.tags if tags else None
    n_src = len(m.raw.split()) if use_tags is not None else None
    return linear.extract_ngram_features(m.message.tokens, index, use_tags, n_src)


def stage_tune_threshold(ctx: StageContext) -> None:
    cfg = ctx.cfg
    tok = _tokenizer(cfg)
    vocab = _load_vocab(ctx)
    weak = _load_weak(ctx)
    params, header = lstm.load_params(ctx.need("train-lstm", "train-lstm", "model.json"))
    if header.get("vocab_hash") != vocab.digest():
        raise InputError("LSTM model was trained against a different vocabulary")
    labeled = [m for _, m in load_labeled(ctx.external(cfg.validation, "validation"), tok)]
    y = [m.label for m in labeled]
    n = len(labeled)
    if n < cfg.cv_folds:
        raise InputError(f"need at least {cfg.cv_folds} labeled validation messages")
    folds = linear.kfold_indices(n, cfg.cv_folds, cfg.seed)

    df = classify.DfTable.build(e.message.tokens for e in weak)

    # SVM(Length+MDF): two scaled features fit on the validation labels
    raw = [[float(len(m.message)), float(classify.minimal_df(m.message.tokens, df))] for m in labeled]
    bounds = [list(signals.normalize([r[j] for r in raw])[1]) for j in range(2)]
    X_lm = [
        linear.FeatureVector.dense([float(signals.apply_minmax(r[j], *bounds[j])) for j in range(2)])
        for r in raw
    ]
    cv_lm = linear.kfold_cv(X_lm, y, cfg.cv_folds, cfg.c_grid, cfg.seed, 2, cfg.linear_epochs)
    lenmdf = linear.train_linear(X_lm, y, linear.CLASSIFICATION, cv_lm.best_C, 2, cfg.linear_epochs, cfg.seed)

    # SVM(classification): n-grams (+ tag frequencies) on the validation labels
    cls_index = linear.FeatureIndex.build((m.message.tokens for m in labeled), (m.tags for m in labeled))
    X_cls = [_ngram(m, cls_index) for m in labeled]
    cv_cls = linear.kfold_cv(X_cls, y, cfg.cv_folds, cfg.c_grid, cfg.seed, len(cls_index), cfg.linear_epochs)
    svm_cls = linear.train_linear(
        X_cls, y, linear.CLASSIFICATION, cv_cls.best_C, len(cls_index), cfg.linear_epochs, cfg.seed
    )

    # SVM(regression): n-grams fit to the weak labels, C and threshold from validation
    reg_index = linear.FeatureIndex.build(e.message.tokens for e in weak)
    X_reg = [linear.extract_ngram_features(e.message.tokens, reg_index) for e in weak]
    y_reg = [e.y for e in weak]
    val_reg = [_ngram(m, reg_index, tags=False) for m in labeled]
    reg_grid = {}
    reg_models = {}
    for C in sorted(cfg.c_grid):
        model = linear.train_linear(
            X_reg, y_reg, linear.REGRESSION, C, len(reg_index), cfg.linear_epochs, cfg.seed, cfg.epsilon
        )
        reg_models[C] = model
        reg_grid[C] = cv_threshold_accuracy([linear.decision_value(model, x) for x in val_reg], y, folds)
    reg_C = max(reg_grid, key=lambda c: (reg_grid[c], -c))
    svm_reg = reg_models[reg_C]

    systems = Systems(vocab, params, df, {}, lenmdf, bounds, svm_cls, cls_index, svm_reg, reg_index)
    scores = systems.scores(labeled)
    thresholds = {
        "Length": classify.tune_length_threshold([m.message.tokens for m in labeled], y, "validation"),
        "MDF": classify.tune_threshold(scores["MDF"], y, "validation"),
        "SVM(regression)": classify.tune_threshold(scores["SVM(regression)"], y, "validation"),
        "LSTM": classify.tune_threshold(scores["LSTM"], y, "validation"),
    }

    write_json(ctx.out("svm_lenmdf.json"), {**lenmdf.to_json(), "feature_bounds": bounds})
    write_json(ctx.out("svm_classification.json"), svm_cls.to_json(cls_index))
    write_json(ctx.out("svm_regression.json"), svm_reg.to_json(reg_index))
    write_json(ctx.out("df.json"), dict(df))
    write_json(
        ctx.out("eval_config.json"),
        {
            "thresholds": {name: t.to_json() for name, t in thresholds.items()},
            "c_selection": {
                "SVM(Length+MDF)": cv_lm.to_json(),
                "SVM(classification)": cv_cls.to_json(),
                "SVM(regression)": {"best_C": reg_C, "grid": [[c, a] for c, a in reg_grid.items()]},
            },
            "validation_size": n,
        },
    )


def _load_systems(ctx: StageContext) -> Systems:
    vocab = _load_vocab(ctx)
    params, _ = lstm.load_params(ctx.need("train-lstm", "train-lstm", "model.json"))
    d = "tune-threshold"
    conf = read_json(ctx.need(d, d, "eval_config.json"))
    lm_obj = read_json(ctx.need(d, d, "svm_lenmdf.json"))
    lenmdf, _ = linear.LinearModel.from_json(lm_obj)
    svm_cls, cls_index = linear.LinearModel.from_json(read_json(ctx.need(d, d, "svm_classification.json")))
    svm_reg, reg_index = linear.LinearModel.from_json(read_json(ctx.need(d, d, "svm_regression.json")))
    df = classify.DfTable(read_json(ctx.need(d, d, "df.json")))
    thresholds = {k: classify.Threshold.from_json(v) for k, v in conf["thresholds"].items()}
    return Systems(
        vocab, params, df, thresholds, lenmdf, lm_obj["feature_bounds"], svm_cls, cls_index, svm_reg, reg_index
    )


def stage_predict(ctx: StageContext) -> None:
    cfg = ctx.cfg
    systems = _load_systems(ctx)
    labeled = load_labeled(ctx.external(cfg.test, "test"), _tokenizer(cfg))
    ids = [i for i, _ in labeled]
    messages = [m for _, m in labeled]
    preds = systems.predictions(messages)
    scores = systems.scores(messages)
    for name in SYSTEMS:
        write_table(ctx.out(f"{name}.tsv"), ["message_id", "prediction"], zip(ids, preds[name]), "\t")
    write_table(
        ctx.out("scores.tsv"),
        ["message_id", *SYSTEMS],
        ([i, *(repr(scores[n][k]) for n in SYSTEMS)] for k, i in enumerate(ids)),
        "\t",
    )


def read_predictions(path: Path) -> dict[str, int]:
    return {r["message_id"]: int(r["prediction"]) for r in read_table(path, "\t")}


def stage_evaluate(ctx: StageContext) -> None:
    cfg = ctx.cfg
    labeled = load_labeled(ctx.external(cfg.test, "test"), _tokenizer(cfg))
    ids = [i for i, _ in labeled]
    labels = [m.label for _, m in labeled]
    systems = {}
    for name in SYSTEMS:
        preds = read_predictions(ctx.need("predict", "predict", f"{name}.tsv"))
        missing = [i for i in ids if i not in preds]
        if missing:
            raise InputError(f"{name}: no prediction for message {missing[0]}")
        systems[name] = [preds[i] for i in ids]
    dataset = Path(cfg.test).name if cfg.test else "synth/test.jsonl"
    report = evaluation.build_report(systems, labels, dataset)
    write_json(ctx.out("report.json"), report.to_json())
    with open(ctx.out("report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_text())


def stage_histogram(ctx: StageContext) -> None:
    cfg = ctx.cfg
    vecs, y, _ = _validation_signals(ctx)
    for name, width in HISTOGRAM_WIDTHS.items():
        bins = signals.histogram([getattr(v, name) for v in vecs], y, width)
        write_table(
            ctx.out(f"{name}.csv"),
            ["bin_start", "pct_positive", "pct_negative", "count"],
            ([repr(b.bin_start), repr(b.pct_positive), repr(b.pct_negative), b.count] for b in bins),
            ",",
        )


STAGE_FUNCS: dict[str, Callable[[StageContext], None]] = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "signals": stage_signals,
    "train-combiner": stage_train_combiner,
    "weaklabel": stage_weaklabel,
    "train-lstm": stage_train_lstm,
    "tune-threshold": stage_tune_threshold,
    "predict": stage_predict,
    "evaluate": stage_evaluate,
    "histogram": stage_histogram,
}

PIPELINE = (
    "synth",
    "ingest",
    "signals",
    "train-combiner",
    "weaklabel",
    "train-lstm",
    "tune-threshold",
    "predict",
    "evaluate",
    "histogram",
)


def run_stage(stage: str, cfg: PipelineConfig, workspace: str | Path) -> StageContext:
    if stage not in STAGE_FUNCS:
        raise InputError(f"unknown stage {stage!r}")
    cfg.validate()
    ws = Workspace(Path(workspace))
    with ws.lock():
        ctx = StageContext(stage, ws, cfg)
        start = time.perf_counter()
        STAGE_FUNCS[stage](ctx)
        ctx.write_manifest()
        log.info("%s finished in %.1fs", stage, time.perf_counter() - start)
    return ctx


def run_pipeline(cfg: PipelineConfig, workspace: str | Path, stages=PIPELINE) -> None:
    for stage in stages:
        if stage == "synth" and cfg.corpus is not None:
            continue
        run_stage(stage, cfg, workspace)
