import math

import numpy as np
import pytest

from ctxdep.errors import DivergenceError, InputError, VocabularyError
from ctxdep.lstm import (
    LstmParams,
    LstmState,
    TrainConfig,
    dropout_mask,
    encode,
    forward,
    forward_batch,
    gradient_check,
    gradients,
    load_params,
    loss,
    lstm_step,
    pad_batch,
    save_params,
    sigmoid,
    train,
)
from ctxdep.corpus import PAD_ID

from helpers import conditioned_params, initial_mean_loss, teacher_student


def scalar_params(**vals):
    p = LstmParams.zeros(3, 1, 1, 1)
    for k, v in vals.items():
        getattr(p, k)[...] = v
    return p


def sig(z):
    return 1.0 / (1.0 + math.exp(-z))


class TestStep:
    def test_hand_computed_scalar(self):
        p = scalar_params(E=[[0.5], [1.0], [-1.0]], W_i=0.3, W_f=-0.2, W_o=0.7, W_u=1.1,
                          U_i=0.4, U_f=0.5, U_o=-0.6, U_u=0.9, b_f=1.0, b_u=-0.1)
        s = LstmState(np.array([0.2]), np.array([-0.3]))
        out = lstm_step(p, 1, s)
        x, h, c = 1.0, 0.2, -0.3
        i = sig(0.3 * x + 0.4 * h)
        f = sig(-0.2 * x + 0.5 * h + 1.0)
        o = sig(0.7 * x - 0.6 * h)
        u = math.tanh(1.1 * x + 0.9 * h - 0.1)
        c_new = i * u + f * c
        assert out.c[0] == pytest.approx(c_new, abs=1e-15)
        assert out.h[0] == pytest.approx(o * math.tanh(c_new), abs=1e-15)

    def test_sigmoid_extremes(self):
        assert sigmoid(1000.0) == 1.0 and sigmoid(-1000.0) == 0.0 and sigmoid(0.0) == 0.5

    def test_out_of_vocab(self):
        p = LstmParams.zeros(3, 2, 2, 2)
        with pytest.raises(VocabularyError):
            lstm_step(p, 3, LstmState.zeros(2))

    def test_empty_sequence(self):
        with pytest.raises(InputError):
            encode(LstmParams.zeros(3, 2, 2, 2), [])


class TestForward:
    def test_head_formula(self):
        rng = np.random.default_rng(0)
        p = conditioned_params(7, 3, 4, 2, rng)
        h = encode(p, [1, 2, 3])
        expected = p.b2[0] + p.W2[0] @ np.tanh(p.b1 + p.W1 @ h)
        assert forward(p, [1, 2, 3]) == pytest.approx(expected, abs=1e-14)

    def test_batch_padding_invariant(self):
        rng = np.random.default_rng(1)
        p = conditioned_params(9, 4, 5, 3, rng)
        seqs = [[1], [2, 3, 4, 5, 6], [7, 8], [3] * 9]
        batched = forward_batch(p, seqs)
        single = [forward(p, s) for s in seqs]
        np.testing.assert_allclose(batched, single, atol=1e-14)

    def test_pad_batch(self):
        ids, mask = pad_batch([[5, 6], [7]])
        assert ids.tolist() == [[5, 6], [7, PAD_ID]] and mask.tolist() == [[1, 1], [1, 0]]

    def test_dropout_needs_rng(self):
        with pytest.raises(InputError):
            forward(LstmParams.zeros(3, 2, 2, 2), [1], train=True, dropout_rate=0.5)

    def test_dropout_mask_is_inverted(self):
        m = dropout_mask(np.random.default_rng(0), (20000,), 0.25)
        assert set(np.unique(m)) <= {0.0, 1.0 / 0.75}
        assert m.mean() == pytest.approx(1.0, abs=0.02)

    def test_eval_mode_ignores_dropout(self):
        p = conditioned_params(5, 2, 2, 2, np.random.default_rng(2))
        assert forward(p, [1, 2]) == forward(p, [1, 2], train=False, dropout_rate=0.9)

    def test_loss(self):
        assert loss([1.0, 2.0], [0.0, 4.0]) == 5.0
        with pytest.raises(InputError):
            loss([1.0], [1.0, 2.0])


class TestGradients:
    @pytest.mark.parametrize("length", [1, 3, 6])
    def test_check_small(self, length):
        rng = np.random.default_rng(length)
        p = conditioned_params(6, 3, 3, 2, rng)
        ids = list(rng.integers(0, 6, length))
        res = gradient_check(p, (ids, 0.7))
        assert res.max_rel_error < 1e-4, res

    def test_batch_gradient_is_sum(self):
        rng = np.random.default_rng(3)
        p = conditioned_params(8, 3, 4, 2, rng)
        batch = [([1, 2, 3], 0.5), ([4], -0.2), ([5, 6], 1.0)]
        total = gradients(p, batch)
        parts = [gradients(p, [ex]) for ex in batch]
        for name, arr in total.items():
            np.testing.assert_allclose(arr, sum(getattr(g, name) for g in parts), atol=1e-12)

    def test_dropout_gradient_matches_fixed_mask(self):
        # with a seeded mask the objective is deterministic, so finite differences apply
        rng = np.random.default_rng(4)
        p = conditioned_params(5, 2, 3, 4, rng)
        ex = [([1, 2], 0.3)]
        g = gradients(p, ex, dropout_rate=0.5, seed=11)

        def obj(q):
            s = forward_batch(q, [[1, 2]], train=True, dropout_rate=0.5, rng=np.random.default_rng(11))
            return loss(s, [0.3])

        q = p.copy()
        q.W1[1, 2] += 1e-6
        up = obj(q)
        q.W1[1, 2] -= 2e-6
        down = obj(q)
        assert g.W1[1, 2] == pytest.approx((up - down) / 2e-6, rel=1e-5, abs=1e-9)


class TestTrain:
    def test_learns_teacher(self):
        data = teacher_student(0, n=120)
        cfg = TrainConfig(epochs=60, seed=0)
        res = train(data, 50, cfg)
        start = initial_mean_loss(data, 50, cfg)
        scores = forward_batch(res.params, [s for s, _ in data])
        end = float(np.mean((scores - np.array([t for _, t in data])) ** 2))
        assert end < 0.4 * start

    def test_seeded_bitwise(self):
        data = teacher_student(1, n=40)
        cfg = TrainConfig(d_w=8, d_h=8, d_s=4, epochs=3, seed=7)
        a = train(data, 50, cfg).params
        b = train(data, 50, cfg).params
        for (_, x), (_, y) in zip(a.items(), b.items()):
            assert np.array_equal(x, y)

    def test_zero_lr_leaves_params(self):
        data = teacher_student(2, n=10)
        init = LstmParams.init(50, 4, 4, 2, np.random.default_rng(0))
        res = train(data, 50, TrainConfig(d_w=4, d_h=4, d_s=2, epochs=2, learning_rate=0.0), init=init)
        for (_, x), (_, y) in zip(init.items(), res.params.items()):
            assert np.array_equal(x, y)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence(self):
        data = teacher_student(3, n=64)
        with pytest.raises(DivergenceError) as exc:
            train(data, 50, TrainConfig(d_w=4, d_h=4, d_s=2, epochs=3, learning_rate=math.inf))
        assert exc.value.exit_code == 4

    def test_on_epoch_callback(self):
        seen = []
        train(teacher_student(4, n=10), 50, TrainConfig(d_w=4, d_h=4, d_s=2, epochs=3),
              on_epoch=lambda e, l: seen.append(e))
        assert seen == [1, 2, 3]

    def test_empty(self):
        with pytest.raises(InputError):
            train([], 5)


def test_persistence_roundtrip(tmp_path):
    p = conditioned_params(11, 3, 4, 2, np.random.default_rng(5))
    path = tmp_path / "model.json"
    save_params(path, p, vocab_hash="abc", config=TrainConfig())
    back, meta = load_params(path)
    assert meta["vocab_hash"] == "abc" and meta["dims"] == {"vocab": 11, "d_w": 3, "d_h": 4, "d_s": 2}
    for (_, x), (_, y) in zip(p.items(), back.items()):
        assert np.array_equal(x, y)
    save_params(tmp_path / "again.json", back, vocab_hash="abc", config=TrainConfig())
    assert path.read_bytes() == (tmp_path / "again.json").read_bytes()


def test_load_rejects_bad_version(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"version": 99}')
    with pytest.raises(InputError):
        load_params(path)
