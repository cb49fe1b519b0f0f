"""Shared fixtures-by-function for the LSTM tests."""

import numpy as np

from ctxdep.lstm import LstmParams, TrainConfig, forward_batch


def conditioned_params(V, d_w, d_h, d_s, rng):
    """Random parameters with every partial derivative comfortably nonzero.

    Default initialization (zero biases, weights within +/-0.08) yields
    recurrent partials near 1e-12.  The truncation error of a central
    difference at eps=1e-5 is of that size, so a relative error there
    measures the stencil rather than the backward pass.
    """
    p = LstmParams.init(V, d_w, d_h, d_s, rng, init_scale=0.8)
    for name, arr in p.items():
        if name.startswith("b"):
            arr[...] = rng.uniform(-0.2, 0.2, arr.shape)
    return p


def teacher_student(seed, n=200, V=50, max_len=10, teacher_scale=1.0):
    rng = np.random.default_rng(seed)
    teacher = LstmParams.init(V, 64, 64, 32, rng, init_scale=teacher_scale)
    seqs = [list(rng.integers(0, V, int(rng.integers(1, max_len + 1)))) for _ in range(n)]
    targets = forward_batch(teacher, seqs)
    return [(s, float(t)) for s, t in zip(seqs, targets)]


def initial_mean_loss(data, V, config: TrainConfig):
    rng = np.random.default_rng(config.seed)
    p = LstmParams.init(V, config.d_w, config.d_h, config.d_s, rng, config.init_scale)
    scores = forward_batch(p, [s for s, _ in data])
    return float(np.mean((scores - np.array([t for _, t in data])) ** 2))
