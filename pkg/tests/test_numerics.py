"""Dense kernels: activations, RMSprop, clipping, and the gradient checker."""

import numpy as np
import pytest

from c2m import numerics
from c2m.errors import NonFiniteError, ShapeMismatchError


class TestDenseOps:
    def test_matmul_identity(self):
        a = np.array([[3.0, 4.0], [5.0, 6.0]])
        np.testing.assert_array_equal(numerics.matmul(np.eye(2), a), a)

    def test_matmul_annihilator(self):
        out = numerics.matmul(np.zeros((2, 3)), np.ones((3, 1)))
        np.testing.assert_array_equal(out, np.zeros((2, 1)))

    def test_matmul_shape_mismatch_reports_dims(self):
        with pytest.raises(ShapeMismatchError, match=r"\(2, 3\).*\(2, 2\)"):
            numerics.matmul(np.zeros((2, 3)), np.zeros((2, 2)))

    def test_transpose_involution(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rng.standard_normal((rng.integers(1, 6), rng.integers(1, 6)))
            np.testing.assert_array_equal(numerics.transpose(numerics.transpose(a)), a)

    def test_elementwise_and_row_sums(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[5.0, 6.0], [7.0, 8.0]])
        np.testing.assert_array_equal(numerics.elementwise_add(a, b), a + b)
        np.testing.assert_array_equal(numerics.elementwise_mul(a, b), a * b)
        np.testing.assert_array_equal(numerics.row_sums(a), [3.0, 7.0])
        with pytest.raises(ShapeMismatchError):
            numerics.elementwise_add(a, np.zeros(3))


class TestActivations:
    def test_leaky_relu_definition(self):
        assert numerics.leaky_relu(np.array(-1.0), 0.2) == pytest.approx(-0.2)
        assert numerics.leaky_relu(np.array(2.5), 0.2) == pytest.approx(2.5)

    def test_sigmoid_symmetry_point(self):
        assert numerics.sigmoid(np.array(0.0)) == pytest.approx(0.5)

    def test_sigmoid_stable_for_large_inputs(self):
        out = numerics.sigmoid(np.array([-800.0, 800.0]))
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(0.0, abs=1e-300)
        assert out[1] == pytest.approx(1.0)

    def test_softmax_uniform_case(self):
        np.testing.assert_allclose(numerics.softmax_rows(np.zeros((1, 3))),
                                   np.full((1, 3), 1 / 3))

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((50, 7)) * 30
        s = numerics.softmax_rows(x)
        assert np.all(s >= 0)
        np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)


class TestRmsprop:
    def test_zero_gradient_is_identity(self):
        params = {"w": np.array([[1.0, -2.0]])}
        state = numerics.RmspropState.for_params(params)
        out = numerics.rmsprop_step(params, {"w": np.zeros((1, 2))}, state)
        np.testing.assert_array_equal(out["w"], params["w"])

    def test_single_scalar_hand_evaluation(self):
        # acc = 0.9*0 + 0.1*1 = 0.1; p = 1 - 0.01*1/(sqrt(0.1)+1e-8)
        params = {"p": np.array([[1.0]])}
        state = numerics.RmspropState.for_params(params, learning_rate=0.01,
                                                 rho=0.9, eps=1e-8)
        out = numerics.rmsprop_step(params, {"p": np.array([[1.0]])}, state)
        assert state.acc["p"][0, 0] == pytest.approx(0.1)
        expected = 1.0 - 0.01 / (np.sqrt(0.1) + 1e-8)
        assert out["p"][0, 0] == pytest.approx(expected, rel=1e-12)

    def test_learning_rate_decay(self):
        state = numerics.RmspropState(learning_rate=0.01)
        state.decay_lr(0.95)
        assert state.learning_rate == pytest.approx(0.0095)

    def test_non_finite_gradient_rejected(self):
        params = {"w": np.ones((2, 2))}
        state = numerics.RmspropState.for_params(params)
        before = params["w"].copy()
        with pytest.raises(NonFiniteError):
            numerics.rmsprop_step(params, {"w": np.full((2, 2), np.nan)}, state)
        np.testing.assert_array_equal(params["w"], before)
        np.testing.assert_array_equal(state.acc["w"], np.zeros((2, 2)))

    def test_shape_mismatch_rejected(self):
        params = {"w": np.ones((2, 2))}
        state = numerics.RmspropState.for_params(params)
        with pytest.raises(ShapeMismatchError, match="w"):
            numerics.rmsprop_step(params, {"w": np.ones((2, 3))}, state)


class TestClipParameters:
    def test_saturation_and_interior(self):
        out = numerics.clip_parameters({"w": np.array([0.5, -0.005])}, 0.01)
        np.testing.assert_allclose(out["w"], [0.01, -0.005])

    def test_idempotent_and_bounded(self):
        rng = np.random.default_rng(2)
        params = {"a": rng.standard_normal((4, 5)), "b": rng.standard_normal(7)}
        once = numerics.clip_parameters(params, 0.03)
        twice = numerics.clip_parameters(once, 0.03)
        for name in params:
            assert np.abs(once[name]).max() <= 0.03
            np.testing.assert_array_equal(once[name], twice[name])

    def test_rejects_non_positive_constant(self):
        with pytest.raises(ValueError):
            numerics.clip_parameters({"w": np.ones(2)}, 0.0)


class TestFiniteDiffCheck:
    def test_linear_function_is_exact(self):
        # f(w) = a . w has constant gradient a; central differences are exact
        rng = np.random.default_rng(3)
        a = rng.standard_normal((3, 4))
        params = {"w": rng.standard_normal((3, 4))}

        def loss(p):
            return float((a * p["w"]).sum())

        report = numerics.finite_diff_check(loss, params, {"w": a},
                                            coords_per_param=12, rng=rng)
        assert report.max_rel_deviation < 1e-8

    def test_detects_wrong_gradient(self):
        params = {"w": np.array([[2.0]])}

        def loss(p):
            return float(p["w"][0, 0] ** 2)

        report = numerics.finite_diff_check(loss, params, {"w": np.array([[1.0]])},
                                            coords_per_param=1)
        assert report.max_rel_deviation > 0.5
        assert report.worst_param == "w"

    def test_report_counts_coordinates(self):
        params = {"w": np.ones((2, 2)), "b": np.ones(3)}

        def loss(p):
            return float(p["w"].sum() + p["b"].sum())

        grads = {"w": np.ones((2, 2)), "b": np.ones(3)}
        report = numerics.finite_diff_check(loss, params, grads, coords_per_param=10)
        assert report.checked == 4 + 3
