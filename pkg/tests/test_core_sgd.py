import numpy as np
import pytest

from sptucker.core_sgd import (
    CoreGradientAccumulator,
    core_accumulate,
    core_apply,
    merge_accumulators,
)
from sptucker.kernels import mode_dots, predict
from sptucker.model import TuckerModel, clone_model
from sptucker.oracle import dense_core_gradient
from conftest import random_index, random_model


class TestCoreAccumulate:
    def test_worked_example_contribution(self, worked_model):
        # xhat=6, x=8, q(mode 0, r 0) = [2,4] -> contribution (6-8)*[2,4]
        acc = CoreGradientAccumulator.zeros_like(worked_model)
        core_accumulate(worked_model, ((0, 0, 0), 8.0), acc)
        np.testing.assert_allclose(acc.grads[0][:, 0], [-4.0, -8.0])
        assert acc.sample_count == 1

    def test_worked_example_matches_oracle(self, worked_model):
        acc = CoreGradientAccumulator.zeros_like(worked_model)
        entry = ((0, 0, 0), 8.0)
        core_accumulate(worked_model, entry, acc)
        for n in range(3):
            dense = dense_core_gradient(worked_model, [entry], n, 0, 0.0)
            np.testing.assert_allclose(acc.grads[n][:, 0], dense, atol=1e-12)

    def test_exact_fit_contributes_zero(self, worked_model):
        x = predict(mode_dots(worked_model, (0, 0, 0)))
        acc = CoreGradientAccumulator.zeros_like(worked_model)
        core_accumulate(worked_model, ((0, 0, 0), x), acc)
        for g in acc.grads:
            np.testing.assert_allclose(g, 0.0, atol=1e-14)

    def test_zero_model_contributes_zero(self):
        m = TuckerModel((2, 2), (2, 2), 2,
                        [np.zeros((2, 2))] * 2, [np.zeros((2, 2))] * 2)
        acc = CoreGradientAccumulator.zeros_like(m)
        core_accumulate(m, ((0, 1), 3.0), acc)
        for g in acc.grads:
            assert not g.any()

    def test_model_not_mutated(self, worked_model):
        snap = clone_model(worked_model)
        acc = CoreGradientAccumulator.zeros_like(worked_model)
        core_accumulate(worked_model, ((0, 0, 0), 8.0), acc)
        for a, b in zip(
            worked_model.factors + worked_model.core_factors,
            snap.factors + snap.core_factors,
        ):
            np.testing.assert_array_equal(a, b)


class TestCoreApply:
    def test_worked_example_step(self, worked_model):
        acc = CoreGradientAccumulator.zeros_like(worked_model)
        core_accumulate(worked_model, ((0, 0, 0), 8.0), acc)
        core_apply(worked_model, acc, gamma_b=0.1, lambda_b=0.0)
        np.testing.assert_allclose(worked_model.core_factors[0][:, 0], [1.4, 1.8])

    def test_zero_accumulator_identity(self, worked_model):
        acc = CoreGradientAccumulator.zeros_like(worked_model)
        acc.sample_count = 1
        snap = [b.copy() for b in worked_model.core_factors]
        core_apply(worked_model, acc, gamma_b=0.5, lambda_b=0.0)
        for b, s in zip(worked_model.core_factors, snap):
            np.testing.assert_array_equal(b, s)

    def test_zero_gamma_identity(self, worked_model):
        acc = CoreGradientAccumulator.zeros_like(worked_model)
        core_accumulate(worked_model, ((0, 0, 0), 8.0), acc)
        snap = [b.copy() for b in worked_model.core_factors]
        core_apply(worked_model, acc, gamma_b=0.0, lambda_b=0.3)
        for b, s in zip(worked_model.core_factors, snap):
            np.testing.assert_array_equal(b, s)

    def test_empty_accumulator_rejected(self, worked_model):
        acc = CoreGradientAccumulator.zeros_like(worked_model)
        with pytest.raises(ValueError, match="empty"):
            core_apply(worked_model, acc, 0.1, 0.0)

    def test_simultaneous_semantics(self):
        # the update of one column never reads another column's new value:
        # applying to a model equals applying columnwise to a frozen copy
        rng = np.random.default_rng(20)
        m = random_model(rng)
        acc = CoreGradientAccumulator.zeros_like(m)
        for _ in range(5):
            core_accumulate(m, (random_index(rng, m.dims), float(rng.uniform(-2, 2))), acc)
        live = clone_model(m)
        core_apply(live, acc, 0.05, 0.1)
        frozen = clone_model(m)
        expected = [
            b - 0.05 * (acc.grads[n] / acc.sample_count + 0.1 * b)
            for n, b in enumerate(frozen.core_factors)
        ]
        for b, e in zip(live.core_factors, expected):
            np.testing.assert_array_equal(b, e)


class TestMergeAccumulators:
    def test_zero_is_identity(self, worked_model):
        a = CoreGradientAccumulator.zeros_like(worked_model)
        core_accumulate(worked_model, ((0, 0, 0), 8.0), a)
        z = CoreGradientAccumulator.zeros_like(worked_model)
        merged = merge_accumulators(a, z)
        for g1, g2 in zip(merged.grads, a.grads):
            np.testing.assert_array_equal(g1, g2)
        assert merged.sample_count == a.sample_count

    def test_commutative(self, worked_model):
        a = CoreGradientAccumulator.zeros_like(worked_model)
        b = CoreGradientAccumulator.zeros_like(worked_model)
        core_accumulate(worked_model, ((0, 0, 0), 8.0), a)
        core_accumulate(worked_model, ((0, 0, 0), 3.0), b)
        ab = merge_accumulators(a, b)
        ba = merge_accumulators(b, a)
        for g1, g2 in zip(ab.grads, ba.grads):
            np.testing.assert_array_equal(g1, g2)

    def test_split_equals_sequential(self):
        rng = np.random.default_rng(21)
        m = random_model(rng)
        entries = [
            (random_index(rng, m.dims), float(rng.uniform(-2, 2))) for _ in range(10)
        ]
        seq = CoreGradientAccumulator.zeros_like(m)
        for e in entries:
            core_accumulate(m, e, seq)
        half_a = CoreGradientAccumulator.zeros_like(m)
        half_b = CoreGradientAccumulator.zeros_like(m)
        for e in entries[:5]:
            core_accumulate(m, e, half_a)
        for e in entries[5:]:
            core_accumulate(m, e, half_b)
        merged = merge_accumulators(half_a, half_b)
        assert merged.sample_count == seq.sample_count
        for g1, g2 in zip(merged.grads, seq.grads):
            np.testing.assert_allclose(g1, g2, rtol=0, atol=1e-12)

    def test_shape_mismatch_rejected(self, worked_model):
        rng = np.random.default_rng(22)
        other = random_model(rng)
        with pytest.raises(ValueError, match="shapes"):
            merge_accumulators(
                CoreGradientAccumulator.zeros_like(worked_model),
                CoreGradientAccumulator.zeros_like(other),
            )


class TestCoreGradientCorrectness:
    def test_accumulator_matches_dense_gradient(self):
        rng = np.random.default_rng(23)
        for _ in range(15):
            m = random_model(rng, dims=(4, 5, 6), j_ranks=(2, 3, 2), r_core=2)
            batch = [
                (random_index(rng, m.dims), float(rng.uniform(-2, 2)))
                for _ in range(4)
            ]
            lam = float(rng.uniform(0, 0.2))
            acc = CoreGradientAccumulator.zeros_like(m)
            for e in batch:
                core_accumulate(m, e, acc)
            for n in range(m.order):
                for r in range(m.r_core):
                    fast = acc.grads[n][:, r] / acc.sample_count + lam * m.core_factors[n][:, r]
                    dense = dense_core_gradient(m, batch, n, r, lam)
                    np.testing.assert_allclose(fast, dense, atol=1e-9)


class TestBatchLossDecrease:
    def test_small_step_does_not_increase_batch_loss(self):
        rng = np.random.default_rng(24)
        gamma = 1e-4
        for _ in range(20):
            m = random_model(rng)
            batch = [
                (random_index(rng, m.dims), float(rng.uniform(-2, 2)))
                for _ in range(6)
            ]

            def batch_loss(model):
                total = 0.0
                for idx, x in batch:
                    xhat = predict(mode_dots(model, idx))
                    total += (x - xhat) ** 2
                return total / len(batch)

            before = batch_loss(m)
            acc = CoreGradientAccumulator.zeros_like(m)
            for e in batch:
                core_accumulate(m, e, acc)
            core_apply(m, acc, gamma, 0.0)
            assert batch_loss(m) <= before + 1e-12
