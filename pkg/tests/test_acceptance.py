"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints.
"""

import csv
import json
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from ctxdep import signals
from ctxdep.classify import tune_threshold
from ctxdep.config import PipelineConfig
from ctxdep.corpus import ResponseGroup, TokenSeq
from ctxdep.evaluation import binomial_two_sided
from ctxdep.linear import C_GRID, FeatureVector, kfold_cv, predict_label, train_linear
from ctxdep.lstm import TrainConfig, forward_batch, gradient_check, save_params, train
from ctxdep.pipeline import read_jsonl, run_pipeline

from conftest import ACCEPTANCE_RESULTS
from helpers import conditioned_params, initial_mean_loss, teacher_student
from oracles import binomial_tail_p, grid_best_accuracy, naive_signals


def record(key, ok, detail):
    ACCEPTANCE_RESULTS[key] = (bool(ok), detail)
    assert ok, detail


# -- shared runs ----------------------------------------------------------------


def run_teacher_student(seed=0):
    data = teacher_student(seed)
    cfg = TrainConfig(epochs=200, seed=seed)
    start = initial_mean_loss(data, 50, cfg)
    t0 = time.perf_counter()
    result = train(data, 50, cfg)
    seconds = time.perf_counter() - t0
    scores = forward_batch(result.params, [s for s, _ in data])
    end = float(np.mean((scores - np.array([t for _, t in data])) ** 2))
    return result, start, end, seconds


def run_full_pipeline(ws):
    t0 = time.perf_counter()
    run_pipeline(PipelineConfig(), ws)
    return time.perf_counter() - t0


@pytest.fixture(scope="module")
def teacher_run():
    return run_teacher_student()


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    ws = tmp_path_factory.mktemp("pipeline")
    return ws, run_full_pipeline(ws)


# -- criteria -------------------------------------------------------------------


def test_criterion_1_signal_oracle():
    rng = np.random.default_rng(2024)
    groups = []
    for _ in range(1000):
        vocab = int(rng.integers(1, 60))
        responses = [
            [f"w{int(t)}" for t in rng.integers(0, vocab, int(rng.integers(1, 12)))]
            for _ in range(int(rng.integers(1, 25)))
        ]
        groups.append(ResponseGroup(TokenSeq(("m",)), "m", [TokenSeq(tuple(r)) for r in responses]))
    t0 = time.perf_counter()
    table = signals.compute_signals(groups)
    seconds = time.perf_counter() - t0

    ref = [naive_signals([r.tokens for r in g.responses]) for g in groups]
    h_lo, h_hi = min(r[0] for r in ref), max(r[0] for r in ref)
    l_lo, l_hi = min(r[2] for r in ref), max(r[2] for r in ref)
    worst = 0.0
    for i, v in zip(table.ids, table.vectors):
        h, m, length = ref[i]
        worst = max(
            worst,
            abs(v.raw_entropy - h),
            abs(v.m_p - m),
            abs(v.raw_avg_len - length),
            abs(v.entropy_norm - (h - h_lo) / (h_hi - h_lo)),
            abs(v.avg_len_norm - (length - l_lo) / (l_hi - l_lo)),
        )
    ok = len(table.ids) == 1000 and worst < 1e-12 and seconds < 10
    record(1, ok, f"max |diff| = {worst:.2e} over {len(table.ids)} groups in {seconds:.2f}s")


def test_criterion_2_gradient_check():
    t0 = time.perf_counter()
    worst = None
    for seed in range(10):
        for length in range(1, 8):
            rng = np.random.default_rng(1000 * seed + length)
            p = conditioned_params(12, 8, 8, 4, rng)
            ids = [int(t) for t in rng.integers(0, 12, length)]
            res = gradient_check(p, (ids, float(rng.normal())), eps=1e-5)
            if worst is None or res.max_rel_error > worst[0].max_rel_error:
                worst = (res, seed, length)
    seconds = time.perf_counter() - t0
    res, seed, length = worst
    ok = res.max_rel_error < 1e-4 and seconds < 60
    record(
        2,
        ok,
        f"max rel error {res.max_rel_error:.2e} ({res.worst_param}{list(res.worst_index)}, "
        f"seed {seed}, length {length}) over 70 checks in {seconds:.1f}s",
    )


def test_criterion_3_teacher_student(teacher_run):
    _, start, end, seconds = teacher_run
    reduction = 1.0 - end / start
    ok = reduction >= 0.90 and seconds < 120
    record(3, ok, f"loss {start:.4f} -> {end:.4f} ({reduction:.1%} reduction) in {seconds:.1f}s")


def test_criterion_4_end_to_end(pipeline_run):
    ws, seconds = pipeline_run
    truth = {r["message"]: r["label"] for r in read_jsonl(ws / "synth" / "truth.jsonl")}
    weak = read_jsonl(ws / "weaklabel" / "weak.jsonl")
    agree = sum((1 if e["y"] > 0 else -1) == truth[e["message"]] for e in weak) / len(weak)

    report = json.loads((ws / "evaluate" / "report.json").read_text())
    acc = {s["name"]: s["accuracy"] for s in report["systems"]}
    systems = {s["name"]: s for s in report["systems"]}
    baselines = [n for n in acc if n != "LSTM"]
    best_baseline = max(baselines, key=lambda n: acc[n])
    if report["best"] == "LSTM":
        test = systems[best_baseline].get("vs_best")
    else:
        test = systems["LSTM"].get("vs_best")
    sign_reported = test is not None and 0.0 <= test["p_value"] <= 1.0

    ok = (
        report["size"] == 500
        and agree >= 0.95
        and acc["LSTM"] >= 0.85
        and acc["LSTM"] > acc["Length"]
        and acc["LSTM"] > acc["MDF"]
        and sign_reported
        and seconds < 300
    )
    p = test["p_value"] if test else float("nan")
    record(
        4,
        ok,
        f"agreement {agree:.1%}, LSTM {acc['LSTM']:.1%}, Length {acc['Length']:.1%}, MDF {acc['MDF']:.1%}, "
        f"best baseline {best_baseline} {acc[best_baseline]:.1%} (sign test p={p:.3g}) in {seconds:.0f}s",
    )


def test_criterion_5_threshold_exactness():
    rng = np.random.default_rng(5)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(1, 101))
        # lattice scores guarantee every gap is wider than the grid spacing
        scores = (rng.integers(0, 101, n) / 100.0).tolist()
        labels = rng.choice([-1, 1], n).tolist()
        with warnings.catch_warnings():
            # single-class instances are legitimate here
            warnings.simplefilter("ignore", RuntimeWarning)
            tuned = tune_threshold(scores, labels).tuned_accuracy
        if tuned != grid_best_accuracy(scores, labels, 10_000):
            mismatches += 1
    record(5, mismatches == 0, f"{mismatches} mismatches on 100 instances against a 10^4-point grid")


def test_criterion_6_sign_test_exactness():
    worst = max(abs(binomial_two_sided(n, k) - binomial_tail_p(n, k)) for n in range(1, 31) for k in range(n + 1))
    special = binomial_two_sided(10, 10)
    ok = worst < 1e-12 and abs(special - 0.001953125) <= 1e-12
    record(6, ok, f"max |diff| = {worst:.1e} for n <= 30; p(10, 10) = {special!r}")


def _model_bytes(tmp_path, params, name):
    path = tmp_path / name
    save_params(path, params, config=TrainConfig(epochs=200))
    return path.read_bytes()


def _artifacts(ws: Path):
    out = {}
    for p in sorted(ws.rglob("*")):
        if not p.is_file() or p.name in ("train_log.csv", ".lock"):
            continue
        rel = str(p.relative_to(ws))
        if p.name == "manifest.json":
            obj = json.loads(p.read_text())
            obj.pop("timestamp")
            obj["inputs"] = {k: v for k, v in obj["inputs"].items() if not k.startswith("/")}
            out[rel] = json.dumps(obj, sort_keys=True).encode()
        else:
            out[rel] = p.read_bytes()
    return out


def test_criterion_7_determinism(teacher_run, pipeline_run, tmp_path):
    first, *_ = teacher_run
    second, *_ = run_teacher_student()
    same_teacher = _model_bytes(tmp_path, first.params, "a.json") == _model_bytes(tmp_path, second.params, "b.json")

    ws, _ = pipeline_run
    again = tmp_path / "again"
    run_full_pipeline(again)
    a, b = _artifacts(ws), _artifacts(again)
    differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    ok = same_teacher and not differing
    record(
        7,
        ok,
        f"teacher-student model identical: {same_teacher}; pipeline files compared: {len(a)}, differing: {differing or 'none'}",
    )


def _validation_features(ws: Path):
    ids = {g["message"]: g["id"] for g in read_jsonl(ws / "ingest" / "groups.jsonl")}
    with open(ws / "signals" / "signals.tsv") as fh:
        sig = {int(r["message_id"]): r for r in csv.DictReader(fh, delimiter="\t")}
    X, y = [], []
    for rec in read_jsonl(ws / "synth" / "validation.jsonl"):
        row = sig.get(ids.get(rec["message"], -1))
        if row is not None:
            X.append(FeatureVector.dense([float(row[k]) for k in ("entropy_norm", "m_p", "avg_len_norm")]))
            y.append(rec["label"])
    return X, y


def test_criterion_8_cv_protocol(pipeline_run):
    ws, _ = pipeline_run
    X, y = _validation_features(ws)
    res = kfold_cv(X, y, k=5, C_grid=C_GRID, seed=0, n_features=3)

    # independent re-evaluation of every grid point on the same folds
    means = {}
    for C in C_GRID:
        accs = []
        for held in res.folds:
            train_idx = [i for i in range(len(X)) if i not in set(held)]
            model = train_linear([X[i] for i in train_idx], [y[i] for i in train_idx], C=C, n_features=3, seed=0)
            accs.append(sum(predict_label(model, X[i]) == y[i] for i in held) / len(held))
        means[C] = sum(accs) / len(accs)
    ok = len(res.folds) == 5 and means[res.best_C] == max(means.values()) and res.mean_accuracy == means[res.best_C]
    grid = ", ".join(f"{C:g}: {m:.3f}" for C, m in means.items())
    record(8, ok, f"selected C={res.best_C:g} on {len(X)} labeled messages; grid {{{grid}}}")

