"""LSTM message encoder with a two-layer regression head, in numpy.

The encoder reads embedded tokens left to right from a zero state::

    i_t = sigmoid(Wi x_t + Ui h_{t-1} + bi)
    f_t = sigmoid(Wf x_t + Uf h_{t-1} + bf)
    o_t = sigmoid(Wo x_t + Uo h_{t-1} + bo)
    u_t = tanh(Wu x_t + Uu h_{t-1} + bu)
    c_t = i_t * u_t + f_t * c_{t-1}
    h_t = o_t * tanh(c_t)

and the final state is scored by ``s = b2 + W2 tanh(b1 + W1 h_n)``.  The
model is fitted to real-valued targets by minimizing the sum of squared
residuals, with exact gradients from backpropagation through time.

Sequences in a batch are right-padded; a padded step copies the previous
state forward, so the state after the last step is ``h_n`` of every
sequence and padding contributes nothing to any gradient.
"""

from __future__ import annotations

import base64
import dataclasses
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import PAD_ID
from .errors import DivergenceError, InputError, VocabularyError

FORMAT_VERSION = 1
GATES = ("i", "f", "o", "u")
PARAM_ORDER = (
    "E",
    "W_i", "W_f", "W_o", "W_u",
    "U_i", "U_f", "U_o", "U_u",
    "b_i", "b_f", "b_o", "b_u",
    "W1", "b1", "W2", "b2",
)


@dataclass
class LstmParams:
    E: np.ndarray
    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_u: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_u: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_u: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @property
    def vocab_size(self) -> int:
        return self.E.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.E.shape[1], self.W_i.shape[0], self.W1.shape[0]

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in PARAM_ORDER]

    def items(self):
        return [(name, getattr(self, name)) for name in PARAM_ORDER]

    def copy(self) -> "LstmParams":
        return LstmParams(*(a.copy() for a in self.arrays()))

    def zeros_like(self) -> "LstmParams":
        return LstmParams(*(np.zeros_like(a) for a in self.arrays()))

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gate weights stacked in i, f, o, u order."""
        W = np.concatenate([self.W_i, self.W_f, self.W_o, self.W_u])
        U = np.concatenate([self.U_i, self.U_f, self.U_o, self.U_u])
        b = np.concatenate([self.b_i, self.b_f, self.b_o, self.b_u])
        return W, U, b

    @classmethod
    def zeros(cls, vocab_size: int, d_w: int, d_h: int, d_s: int) -> "LstmParams":
        shapes = param_shapes(vocab_size, d_w, d_h, d_s)
        return cls(*(np.zeros(shapes[name]) for name in PARAM_ORDER))

    @classmethod
    def init(
        cls,
        vocab_size: int,
        d_w: int,
        d_h: int,
        d_s: int,
        rng: np.random.Generator,
        init_scale: float = 0.08,
        forget_bias: float = 1.0,
    ) -> "LstmParams":
        """Uniform weights in [-init_scale, init_scale], forget bias 1, other biases 0."""
        shapes = param_shapes(vocab_size, d_w, d_h, d_s)
        arrays = {}
        for name in PARAM_ORDER:
            if name.startswith("b"):
                arrays[name] = np.zeros(shapes[name])
            else:
                arrays[name] = rng.uniform(-init_scale, init_scale, shapes[name])
        arrays["b_f"][:] = forget_bias
        return cls(**arrays)

    def check(self) -> None:
        V = self.vocab_size
        expected = param_shapes(V, *self.dims)
        for name, a in self.items():
            if a.shape != expected[name]:
                raise InputError(f"{name} has shape {a.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(a)):
                raise InputError(f"{name} has non-finite entries")


def param_shapes(V: int, d_w: int, d_h: int, d_s: int) -> dict[str, tuple[int, ...]]:
    shapes = {"E": (V, d_w)}
    for g in GATES:
        shapes[f"W_{g}"] = (d_h, d_w)
        shapes[f"U_{g}"] = (d_h, d_h)
        shapes[f"b_{g}"] = (d_h,)
    shapes.update(W1=(d_s, d_h), b1=(d_s,), W2=(1, d_s), b2=(1,))
    return shapes


def sigmoid(z):
    # tanh form cannot overflow for large |z|; wider float types pass through
    z = np.asarray(z)
    z = z.astype(np.result_type(z.dtype, np.float64), copy=False)
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, d_h: int) -> "LstmState":
        return cls(np.zeros(d_h), np.zeros(d_h))


@dataclass
class GateValues:
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    u: np.ndarray


def lstm_step(
    params: LstmParams, token: int, state: LstmState, gates_out: list | None = None
) -> LstmState:
    """One recurrent update for a single token."""
    if not 0 <= token < params.vocab_size:
        raise VocabularyError(f"token id {token} outside vocabulary of {params.vocab_size}")
    d_h = params.dims[1]
    if state.h.shape != (d_h,) or state.c.shape != (d_h,):
        raise InputError("state does not match hidden size")
    x = params.E[token]
    h = state.h
    i = sigmoid(params.W_i @ x + params.U_i @ h + params.b_i)
    f = sigmoid(params.W_f @ x + params.U_f @ h + params.b_f)
    o = sigmoid(params.W_o @ x + params.U_o @ h + params.b_o)
    u = np.tanh(params.W_u @ x + params.U_u @ h + params.b_u)
    c = i * u + f * state.c
    if gates_out is not None:
        gates_out.append(GateValues(i, f, o, u))
    return LstmState(o * np.tanh(c), c)


def _check_ids(params: LstmParams, ids: Sequence[int]) -> None:
    if len(ids) == 0:
        raise InputError("cannot encode an empty sequence")
    arr = np.asarray(ids)
    if arr.min() < 0 or arr.max() >= params.vocab_size:
        raise VocabularyError(f"token id outside vocabulary of {params.vocab_size}")


def encode_states(params: LstmParams, ids: Sequence[int]) -> list[LstmState]:
    _check_ids(params, ids)
    state = LstmState.zeros(params.dims[1])
    states = []
    for t in ids:
        state = lstm_step(params, int(t), state)
        states.append(state)
    return states


def encode(params: LstmParams, ids: Sequence[int]) -> np.ndarray:
    """Final recurrent state ``h_n`` of a message."""
    return encode_states(params, ids)[-1].h


# -- batched forward / backward ------------------------------------------------


def pad_batch(seqs: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    lengths = [len(s) for s in seqs]
    if min(lengths) == 0:
        raise InputError("cannot encode an empty sequence")
    T = max(lengths)
    ids = np.full((len(seqs), T), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(seqs), T))
    for b, s in enumerate(seqs):
        ids[b, : len(s)] = s
        mask[b, : len(s)] = 1.0
    return ids, mask


def dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """Inverted-dropout multipliers: 0 with probability ``rate``, else 1/(1-rate)."""
    if rate <= 0.0:
        return np.ones(shape)
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


@dataclass
class _Cache:
    ids: np.ndarray
    mask: np.ndarray
    xs: list = field(default_factory=list)
    h_prev: list = field(default_factory=list)
    c_prev: list = field(default_factory=list)
    gates: list = field(default_factory=list)
    tanh_c: list = field(default_factory=list)
    h_n: np.ndarray | None = None
    hidden: np.ndarray | None = None
    drop: np.ndarray | None = None


def _forward_batch(params: LstmParams, seqs, drop: np.ndarray | None, stacked=None):
    ids, mask = pad_batch(seqs)
    if ids.max() >= params.vocab_size or ids.min() < 0:
        raise VocabularyError(f"token id outside vocabulary of {params.vocab_size}")
    W, U, b = stacked if stacked is not None else params.stacked()
    d_h = params.dims[1]
    B = len(seqs)
    h = np.zeros((B, d_h))
    c = np.zeros((B, d_h))
    cache = _Cache(ids, mask)
    for t in range(ids.shape[1]):
        x = params.E[ids[:, t]]
        z = x @ W.T + h @ U.T + b
        gi = sigmoid(z[:, :d_h])
        gf = sigmoid(z[:, d_h : 2 * d_h])
        go = sigmoid(z[:, 2 * d_h : 3 * d_h])
        gu = np.tanh(z[:, 3 * d_h :])
        c_new = gi * gu + gf * c
        tc = np.tanh(c_new)
        h_new = go * tc
        m = mask[:, t : t + 1]
        cache.xs.append(x)
        cache.h_prev.append(h)
        cache.c_prev.append(c)
        cache.gates.append((gi, gf, go, gu))
        cache.tanh_c.append(tc)
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
    hidden = np.tanh(h @ params.W1.T + params.b1)
    dropped = hidden if drop is None else hidden * drop
    scores = dropped @ params.W2[0] + params.b2[0]
    cache.h_n = h
    cache.hidden = hidden
    cache.drop = drop
    return scores, cache


def _backward_batch(params: LstmParams, cache: _Cache, d_scores: np.ndarray, stacked=None) -> LstmParams:
    grads = params.zeros_like()
    W, U, _ = stacked if stacked is not None else params.stacked()
    d_h = params.dims[1]
    hidden = cache.hidden
    dropped = hidden if cache.drop is None else hidden * cache.drop
    grads.b2[0] = d_scores.sum()
    grads.W2[0] = d_scores @ dropped
    d_dropped = d_scores[:, None] * params.W2[0][None, :]
    d_hidden = d_dropped if cache.drop is None else d_dropped * cache.drop
    d_a = d_hidden * (1.0 - hidden**2)
    grads.W1[:] = d_a.T @ cache.h_n
    grads.b1[:] = d_a.sum(axis=0)
    dh = d_a @ params.W1
    dc = np.zeros_like(dh)

    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * d_h)
    for t in reversed(range(cache.ids.shape[1])):
        m = cache.mask[:, t : t + 1]
        gi, gf, go, gu = cache.gates[t]
        tc = cache.tanh_c[t]
        dh_new = m * dh
        dc_new = m * dc + dh_new * go * (1.0 - tc**2)
        dz = np.concatenate(
            [
                dc_new * gu * gi * (1.0 - gi),
                dc_new * cache.c_prev[t] * gf * (1.0 - gf),
                dh_new * tc * go * (1.0 - go),
                dc_new * gi * (1.0 - gu**2),
            ],
            axis=1,
        )
        dW += dz.T @ cache.xs[t]
        dU += dz.T @ cache.h_prev[t]
        db += dz.sum(axis=0)
        np.add.at(grads.E, cache.ids[:, t], dz @ W)
        dh = dz @ U + (1.0 - m) * dh
        dc = dc_new * gf + (1.0 - m) * dc
    # padded positions have dz == 0, so their E rows received exact zeros
    for k, g in enumerate(GATES):
        rows = slice(k * d_h, (k + 1) * d_h)
        getattr(grads, f"W_{g}")[:] = dW[rows]
        getattr(grads, f"U_{g}")[:] = dU[rows]
        getattr(grads, f"b_{g}")[:] = db[rows]
    return grads


def forward_batch(
    params: LstmParams,
    seqs: Sequence[Sequence[int]],
    train: bool = False,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    drop = None
    if train and dropout_rate > 0.0:
        if rng is None:
            raise InputError("train-mode dropout needs a seeded generator")
        drop = dropout_mask(rng, (len(seqs), params.dims[2]), dropout_rate)
    scores, _ = _forward_batch(params, seqs, drop)
    return scores


def forward(
    params: LstmParams,
    ids: Sequence[int],
    train: bool = False,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> float:
    """Regression score of one message; dropout only on the head's hidden layer."""
    _check_ids(params, ids)
    return float(forward_batch(params, [ids], train, dropout_rate, rng)[0])


def score_messages(params: LstmParams, seqs: Sequence[Sequence[int]], batch_size: int = 256) -> np.ndarray:
    out = [forward_batch(params, seqs[k : k + batch_size]) for k in range(0, len(seqs), batch_size)]
    return np.concatenate(out) if out else np.zeros(0)


def loss(scores: Sequence[float], targets: Sequence[float]) -> float:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if s.shape != y.shape:
        raise InputError("scores and targets differ in length")
    if s.size == 0:
        raise InputError("empty batch")
    return float(np.sum((y - s) ** 2))


def loss_and_gradients(
    params: LstmParams,
    batch: Sequence[tuple[Sequence[int], float]],
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
    stacked=None,
) -> tuple[float, LstmParams]:
    if not batch:
        raise InputError("empty batch")
    seqs = [ids for ids, _ in batch]
    y = np.array([t for _, t in batch], dtype=np.float64)
    drop = None
    if dropout_rate > 0.0:
        if rng is None:
            raise InputError("dropout needs a seeded generator")
        drop = dropout_mask(rng, (len(seqs), params.dims[2]), dropout_rate)
    scores, cache = _forward_batch(params, seqs, drop, stacked)
    grads = _backward_batch(params, cache, 2.0 * (scores - y), stacked)
    return float(np.sum((y - scores) ** 2)), grads


def gradients(
    params: LstmParams,
    batch: Sequence[tuple[Sequence[int], float]],
    dropout_rate: float = 0.0,
    seed: int | None = None,
) -> LstmParams:
    """Exact gradient of the summed squared residuals over ``batch``."""
    rng = np.random.default_rng(seed) if dropout_rate > 0.0 else None
    return loss_and_gradients(params, batch, dropout_rate, rng)[1]


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_param: str
    worst_index: tuple[int, ...]
    analytic: float
    numeric: float

    def __float__(self) -> float:
        return self.max_rel_error


def gradient_check(
    params: LstmParams, example: tuple[Sequence[int], float], eps: float = 1e-5
) -> GradCheckResult:
    """Compare BPTT gradients against central differences for every scalar.

    Relative error is ``|g_a - g_n| / max(|g_a|, |g_n|, 1e-12)``; the
    worst parameter name and index are reported alongside the maximum.

    The analytic side is the float64 backward pass.  The differences are
    evaluated in ``np.longdouble`` where the platform provides a wider
    type: in float64 the rounding noise of ``(L+ - L-) / 2 eps`` is about
    1e-11 at eps=1e-5, which swamps partials near 1e-9 that occur for
    ordinary random parameters.
    """
    ids, y = example
    _check_ids(params, ids)
    analytic = gradients(params, [(ids, y)])
    p = LstmParams(*(a.astype(np.longdouble) for a in params.arrays()))
    target = np.longdouble(y)
    step = np.longdouble(eps)

    def objective():
        scores, _ = _forward_batch(p, [ids], None)
        return (target - scores[0]) ** 2

    worst = GradCheckResult(0.0, "", (), 0.0, 0.0)
    for name, arr in p.items():
        g_arr = getattr(analytic, name)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            up = objective()
            arr[idx] = orig - step
            down = objective()
            arr[idx] = orig
            g_n = float((up - down) / (2 * step))
            g_a = float(g_arr[idx])
            err = abs(g_a - g_n) / max(abs(g_a), abs(g_n), 1e-12)
            if err > worst.max_rel_error or not worst.worst_param:
                worst = GradCheckResult(err, name, idx, g_a, g_n)
    return worst


# -- training ----------------------------------------------------------------


@dataclass
class TrainConfig:
    d_w: int = 64
    d_h: int = 64
    d_s: int = 32
    learning_rate: float = 0.1
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    dropout_rate: float = 0.1
    init_scale: float = 0.08
    grad_clip: float = 5.0

    def validate(self, prefix: str = "train") -> None:
        from .errors import ConfigError

        for name in ("d_w", "d_h", "d_s", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{prefix}.{name}", "must be >= 1")
        if self.learning_rate < 0:
            raise ConfigError(f"{prefix}.learning_rate", "must be >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"{prefix}.dropout_rate", "must be in [0, 1)")
        if self.init_scale < 0:
            raise ConfigError(f"{prefix}.init_scale", "must be >= 0")
        if self.grad_clip <= 0:
            raise ConfigError(f"{prefix}.grad_clip", "must be > 0")


@dataclass
class TrainResult:
    params: LstmParams
    epoch_loss: list[float]
    epoch_seconds: list[float]


def _global_norm(grads: LstmParams) -> float:
    return float(np.sqrt(sum(float(np.sum(a * a)) for a in grads.arrays())))


def train(
    data: Sequence[tuple[Sequence[int], float]],
    vocab_size: int,
    config: TrainConfig = TrainConfig(),
    init: LstmParams | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> TrainResult:
    """Mini-batch gradient descent on the squared-residual objective.

    Each update uses the batch-mean gradient, rescaled to norm
    ``grad_clip`` when larger.  Shuffling, initialization and dropout all
    draw from one generator seeded by ``config.seed``.  The loss recorded
    for an epoch is the mean squared residual over the examples seen
    during that epoch (train-mode scores, before each update).
    """
    if not data:
        raise InputError("empty training set")
    config.validate()
    rng = np.random.default_rng(config.seed)
    if init is None:
        params = LstmParams.init(
            vocab_size, config.d_w, config.d_h, config.d_s, rng, config.init_scale
        )
    else:
        params = init.copy()
    n = len(data)
    epoch_loss, epoch_seconds = [], []
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        total = 0.0
        order = rng.permutation(n)
        for k in range(0, n, config.batch_size):
            batch = [data[i] for i in order[k : k + config.batch_size]]
            batch_loss, grads = loss_and_gradients(params, batch, config.dropout_rate, rng)
            total += batch_loss
            if not np.isfinite(batch_loss):
                raise DivergenceError(epoch)
            if config.learning_rate == 0.0:
                continue
            scale = 1.0 / len(batch)
            norm = _global_norm(grads) * scale
            if norm > config.grad_clip:
                scale *= config.grad_clip / norm
            step = config.learning_rate * scale
            for p_arr, g_arr in zip(params.arrays(), grads.arrays()):
                p_arr -= step * g_arr
        mean = total / n
        if not np.isfinite(mean):
            raise DivergenceError(epoch)
        epoch_loss.append(mean)
        epoch_seconds.append(time.perf_counter() - start)
        if on_epoch is not None:
            on_epoch(epoch, mean)
    return TrainResult(params, epoch_loss, epoch_seconds)


# -- persistence ---------------------------------------------------------------


def _b64(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def params_to_json(
    params: LstmParams, vocab_hash: str = "", config: TrainConfig | None = None
) -> dict:
    d_w, d_h, d_s = params.dims
    return {
        "version": FORMAT_VERSION,
        "dims": {"vocab": params.vocab_size, "d_w": d_w, "d_h": d_h, "d_s": d_s},
        "vocab_hash": vocab_hash,
        "config": None if config is None else dataclasses.asdict(config),
        "dtype": "<f8",
        "order": list(PARAM_ORDER),
        "params": {name: _b64(a) for name, a in params.items()},
    }


def params_from_json(obj: dict) -> LstmParams:
    if obj.get("version") != FORMAT_VERSION:
        raise InputError(f"unsupported model version {obj.get('version')}")
    dims = obj["dims"]
    shapes = param_shapes(dims["vocab"], dims["d_w"], dims["d_h"], dims["d_s"])
    arrays = {}
    for name in PARAM_ORDER:
        raw = base64.b64decode(obj["params"][name])
        arrays[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shapes[name])
    params = LstmParams(**arrays)
    params.check()
    return params


def save_params(path, params: LstmParams, vocab_hash: str = "", config: TrainConfig | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_json(params, vocab_hash, config), fh, indent=1)
        fh.write("\n")


def load_params(path) -> tuple[LstmParams, dict]:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return params_from_json(obj), obj
