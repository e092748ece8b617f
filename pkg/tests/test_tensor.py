"""Tests for the autograd tensor core."""

import math

import numpy as np
import pytest

from moose.core import (
    GradientError,
    MacCounter,
    MaskError,
    ShapeError,
    Tape,
    Tensor,
    check_gradients,
    concat,
    gelu,
    layer_norm,
    log_softmax_nll,
    matmul,
    relative_error,
    softmax_lastdim,
    tensor_sum,
)


def _param(shape, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return Tensor(rng.normal(0.0, scale, shape), requires_grad=True)


class TestTensor:
    def test_data_is_float64_copy(self):
        source = np.arange(4, dtype=np.int32)
        t = Tensor(source)
        source[0] = 99
        assert t.data.dtype == np.float64
        assert t.data[0] == 0.0

    def test_item_requires_single_element(self):
        assert Tensor([2.5]).item() == 2.5
        with pytest.raises(ValueError):
            Tensor([1.0, 2.0]).item()

    def test_zero_grad_clears_gradient(self):
        x = _param((3,))
        with Tape() as tape:
            loss = tensor_sum(x * x)
        tape.backward(loss)
        assert x.grad is not None
        x.zero_grad()
        assert x.grad is None

    def test_matmul_shape_mismatch(self):
        with pytest.raises(ShapeError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestTape:
    def test_gradients_of_simple_expression(self):
        a = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        b = Tensor([4.0, 5.0, 6.0], requires_grad=True)
        with Tape() as tape:
            loss = tensor_sum(a * b + a)
        tape.backward(loss)
        np.testing.assert_allclose(a.grad, [5.0, 6.0, 7.0])
        np.testing.assert_allclose(b.grad, [1.0, 2.0, 3.0])

    def test_reused_input_accumulates(self):
        x = Tensor([3.0], requires_grad=True)
        with Tape() as tape:
            loss = tensor_sum(x * x * x)
        tape.backward(loss)
        assert x.grad[0] == pytest.approx(27.0)

    def test_backward_twice_raises(self):
        x = _param((2,))
        with Tape() as tape:
            loss = tensor_sum(x * x)
        tape.backward(loss)
        with pytest.raises(GradientError):
            tape.backward(loss)

    def test_reset_allows_second_recording(self):
        x = _param((2,))
        tape = Tape()
        with tape:
            loss = tensor_sum(x)
        tape.backward(loss)
        tape.reset()
        x.zero_grad()
        with tape:
            loss = tensor_sum(x * 2.0)
        tape.backward(loss)
        np.testing.assert_allclose(x.grad, [2.0, 2.0])

    def test_non_scalar_loss_rejected(self):
        x = _param((2,))
        with Tape() as tape:
            y = x * 2.0
        with pytest.raises(GradientError):
            tape.backward(y)

    def test_no_recording_outside_tape(self):
        x = _param((2,))
        with Tape() as tape:
            pass
        _ = x * x
        assert len(tape) == 0


class TestSoftmax:
    def test_rows_sum_to_one(self):
        x = Tensor(np.random.default_rng(1).normal(size=(4, 5)))
        probs = softmax_lastdim(x).data
        np.testing.assert_allclose(probs.sum(axis=-1), np.ones(4), atol=1e-12)

    def test_masked_entries_are_exact_zeros(self):
        x = Tensor(np.random.default_rng(2).normal(size=(3, 3)))
        mask = np.eye(3, dtype=bool)
        mask[0, 2] = True
        probs = softmax_lastdim(x, mask).data
        assert np.all(probs[~mask] == 0.0)
        np.testing.assert_allclose(probs.sum(axis=-1), np.ones(3), atol=1e-12)

    def test_fully_masked_row_raises(self):
        mask = np.ones((2, 2), dtype=bool)
        mask[1] = False
        with pytest.raises(MaskError):
            softmax_lastdim(Tensor(np.zeros((2, 2))), mask)

    def test_large_logits_are_stable(self):
        probs = softmax_lastdim(Tensor([[1000.0, 1000.0]])).data
        np.testing.assert_allclose(probs, [[0.5, 0.5]])


class TestLosses:
    @pytest.mark.parametrize("classes", [2, 4, 6, 10])
    def test_uniform_logits_give_log_k(self, classes):
        loss = log_softmax_nll(Tensor(np.zeros(classes)), 0)
        assert loss.item() == pytest.approx(math.log(classes), rel=1e-12)

    def test_rejects_batched_logits(self):
        with pytest.raises(ShapeError):
            log_softmax_nll(Tensor(np.zeros((2, 3))), 0)

    def test_nll_gradient_is_probs_minus_onehot(self):
        logits = Tensor([1.0, 2.0, 0.5], requires_grad=True)
        with Tape() as tape:
            loss = log_softmax_nll(logits, 1)
        tape.backward(loss)
        probs = np.exp(logits.data) / np.exp(logits.data).sum()
        expected = probs.copy()
        expected[1] -= 1.0
        np.testing.assert_allclose(logits.grad, expected, atol=1e-12)


class TestMacCounter:
    def test_counts_matmul(self):
        a, b = Tensor(np.ones((2, 3, 4))), Tensor(np.ones((4, 5)))
        with MacCounter() as counter:
            matmul(a, b)
        assert counter.macs == 2 * 3 * 4 * 5

    def test_inactive_outside_block(self):
        counter = MacCounter()
        with counter:
            pass
        matmul(Tensor(np.ones((2, 2))), Tensor(np.ones((2, 2))))
        assert counter.macs == 0


class TestGradientCheck:
    def test_relative_error_floor(self):
        assert relative_error(np.array([0.0]), np.array([1e-9])) < 1e-2
        assert relative_error(np.array([1.0]), np.array([1.0])) == 0.0

    def test_composite_expression(self):
        x = _param((3, 4), seed=3)
        w = _param((4, 5), seed=4)
        gamma = Tensor(np.ones(5), requires_grad=True)
        beta = Tensor(np.zeros(5), requires_grad=True)
        mask = np.tril(np.ones((3, 5), dtype=bool), k=2)

        def loss_fn():
            h = layer_norm(gelu(matmul(x, w)), gamma, beta)
            attn = softmax_lastdim(h, mask)
            pooled = concat([attn, h], axis=0)
            return log_softmax_nll(tensor_sum(pooled, axis=0), 2)

        errors = check_gradients(loss_fn, {"x": x, "w": w, "gamma": gamma, "beta": beta})
        assert max(errors.values()) < 1e-4

    def test_sampled_entries_restore_values(self):
        w = _param((6, 6), seed=5)
        before = w.data.copy()
        check_gradients(lambda: tensor_sum(w * w), {"w": w}, max_entries=4)
        np.testing.assert_array_equal(w.data, before)

    def test_layer_norm_needs_two_features(self):
        with pytest.raises(ShapeError):
            layer_norm(Tensor(np.ones((2, 1))), Tensor(np.ones(1)), Tensor(np.zeros(1)))
