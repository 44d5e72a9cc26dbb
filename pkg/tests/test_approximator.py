"""Tests for the dense-network engine, optimizer, target tracking, and
checkpoint container."""

import numpy as np
import pytest

from hrhr_rl.approximator import (
    Adam,
    Mlp,
    MlpSpec,
    load_bundle,
    polyak_update,
    save_bundle,
)
from hrhr_rl.errors import InvalidInputError, PoisonError
from hrhr_rl.oracle import fd_gradient


def small_mlp(seed=0, activation="relu", hidden=(8, 6)) -> Mlp:
    return Mlp(MlpSpec(4, hidden, 3, activation, init_seed=seed))


class TestForward:
    def test_zero_parameters_give_zero_output(self):
        net = small_mlp()
        out = net.forward(np.zeros(net.n_params), np.ones(4))
        np.testing.assert_array_equal(out, 0.0)

    def test_identity_single_linear_layer(self):
        net = Mlp(MlpSpec(3, (), 3, "relu"))
        params = np.zeros(net.n_params)
        params[:9] = np.eye(3).ravel()
        x = np.array([0.5, -1.5, 2.0])
        np.testing.assert_array_equal(net.forward(params, x), x)

    def test_matches_independent_matrix_arithmetic(self):
        rng = np.random.default_rng(3)
        spec = MlpSpec(4, (5,), 2, "tanh", init_seed=1)
        net = Mlp(spec)
        params = rng.normal(0, 1, net.n_params)
        x = rng.normal(0, 1, 4)
        w1 = params[:20].reshape(4, 5)
        b1 = params[20:25]
        w2 = params[25:35].reshape(5, 2)
        b2 = params[35:37]
        want = np.tanh(x @ w1 + b1) @ w2 + b2
        np.testing.assert_allclose(net.forward(params, x), want, atol=1e-12)

    def test_batched_rows_match_single_calls(self):
        rng = np.random.default_rng(4)
        net = small_mlp()
        params = rng.normal(0, 1, net.n_params)
        xs = rng.normal(0, 1, (6, 4))
        batched = net.forward(params, xs)
        for i in range(6):
            np.testing.assert_allclose(batched[i], net.forward(params, xs[i]))

    def test_shape_mismatch_rejected(self):
        net = small_mlp()
        with pytest.raises(InvalidInputError):
            net.forward(np.zeros(net.n_params), np.zeros(5))
        with pytest.raises(InvalidInputError):
            net.forward(np.zeros(3), np.zeros(4))


class TestBackward:
    def test_zero_output_grad_gives_zero_gradients(self):
        rng = np.random.default_rng(0)
        net = small_mlp()
        params = rng.normal(0, 1, net.n_params)
        gp, gx = net.backward(params, rng.normal(0, 1, 4), np.zeros(3))
        np.testing.assert_array_equal(gp, 0.0)
        np.testing.assert_array_equal(gx, 0.0)

    def test_single_linear_layer_closed_form(self):
        net = Mlp(MlpSpec(3, (), 2, "relu"))
        rng = np.random.default_rng(1)
        params = rng.normal(0, 1, net.n_params)
        x = rng.normal(0, 1, 3)
        gout = rng.normal(0, 1, 2)
        gp, gx = net.backward(params, x, gout)
        np.testing.assert_allclose(gp[:6], np.outer(x, gout).ravel(), atol=1e-14)
        np.testing.assert_allclose(gp[6:], gout, atol=1e-14)
        np.testing.assert_allclose(gx, params[:6].reshape(3, 2) @ gout, atol=1e-14)

    @pytest.mark.parametrize("activation", ["relu", "tanh"])
    def test_matches_finite_differences(self, activation):
        rng = np.random.default_rng(17)
        for trial in range(8):
            hidden = tuple(rng.integers(2, 32, size=int(rng.integers(1, 4))))
            spec = MlpSpec(int(rng.integers(1, 6)), hidden, int(rng.integers(1, 5)),
                           activation, init_seed=trial)
            net = Mlp(spec)
            # Keep ReLU kinks away from the finite-difference step.
            params = rng.normal(0, 0.7, net.n_params)
            x = rng.normal(0, 1, spec.input_dim)
            gout = rng.normal(0, 1, spec.output_dim)

            def scalar(p):
                return float(net.forward(p, x) @ gout)

            gp, _ = net.backward(params, x, gout)
            fd = fd_gradient(scalar, params.copy())
            scale = max(np.max(np.abs(gp)), np.max(np.abs(fd)), 1e-12)
            assert np.max(np.abs(gp - fd)) / scale < 1e-6

    def test_input_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(23)
        net = small_mlp(activation="tanh")
        params = rng.normal(0, 0.5, net.n_params)
        x = rng.normal(0, 1, 4)
        gout = rng.normal(0, 1, 3)
        _, gx = net.backward(params, x, gout)
        fd = fd_gradient(lambda v: float(net.forward(params, v) @ gout), x.copy())
        np.testing.assert_allclose(gx, fd, atol=1e-7)


class TestInit:
    def test_deterministic_given_seed(self):
        a = small_mlp(seed=9).init_params()
        b = small_mlp(seed=9).init_params()
        np.testing.assert_array_equal(a, b)
        c = small_mlp(seed=10).init_params()
        assert not np.array_equal(a, c)

    def test_zero_out_scale_zeroes_only_final_layer(self):
        spec = MlpSpec(4, (8,), 3, "relu", init_seed=0, out_scale=0.0)
        net = Mlp(spec)
        params = net.init_params()
        first_layer = params[: 4 * 8 + 8]
        final_layer = params[4 * 8 + 8 :]
        assert np.any(first_layer != 0.0)
        np.testing.assert_array_equal(final_layer, 0.0)


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        opt = Adam(5, lr=0.1)
        params = np.arange(5.0)
        out = opt.step(params, np.zeros(5))
        np.testing.assert_array_equal(out, params)
        assert opt.t == 1

    def test_descends_a_parabola_one_step(self):
        opt = Adam(1, lr=0.1)
        w = np.array([1.0])
        w_new = opt.step(w, 2.0 * w)
        assert abs(w_new[0]) < 1.0

    def test_reaches_quadratic_minimum_in_200_steps(self):
        opt = Adam(3, lr=0.1)
        target = np.array([0.3, -1.2, 2.0])
        w = np.zeros(3)
        for _ in range(200):
            w = opt.step(w, 2.0 * (w - target))
        np.testing.assert_allclose(w, target, atol=1e-3)

    def test_poisons_on_non_finite_gradient(self):
        opt = Adam(2)
        with pytest.raises(PoisonError):
            opt.step(np.zeros(2), np.array([1.0, np.nan]))

    def test_bit_identical_trajectories(self):
        def run():
            opt = Adam(4, lr=0.01)
            rng = np.random.default_rng(5)
            w = rng.normal(0, 1, 4)
            for _ in range(50):
                w = opt.step(w, np.sin(w) + w**3)
            return w

        np.testing.assert_array_equal(run(), run())


class TestPolyak:
    def test_hard_copy_at_tau_one(self):
        online = np.array([1.0, 2.0])
        out = polyak_update(np.zeros(2), online, 1.0)
        np.testing.assert_array_equal(out, online)

    def test_midpoint(self):
        assert polyak_update(np.zeros(1), np.array([2.0]), 0.5)[0] == 1.0

    def test_geometric_contraction(self):
        target = np.zeros(1)
        online = np.ones(1)
        tau = 0.005
        gaps = []
        for _ in range(3 * int(np.log(2) / tau)):
            target = polyak_update(target, online, tau)
            gaps.append(float(np.abs(online - target)[0]))
        half_life = int(np.log(2) / tau)
        assert gaps[half_life - 1] == pytest.approx(0.5, rel=0.02)
        assert gaps[2 * half_life - 1] == pytest.approx(0.25, rel=0.02)

    def test_rejects_tau_out_of_range(self):
        with pytest.raises(InvalidInputError):
            polyak_update(np.zeros(1), np.zeros(1), 0.0)
        with pytest.raises(InvalidInputError):
            polyak_update(np.zeros(1), np.zeros(1), 1.5)


class TestCheckpointBundle:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        arrays = {
            "actor": rng.normal(0, 1, 37),
            "opt_actor_m": rng.normal(0, 1, 37),
            "counts": np.array([3], dtype=np.int64),
        }
        meta = {"kind": "unit-test", "hidden": [8, 8]}
        path = tmp_path / "bundle.npz"
        save_bundle(path, meta, arrays)
        meta2, arrays2 = load_bundle(path)
        assert meta2["kind"] == "unit-test"
        assert meta2["format_version"] == 1
        for key, arr in arrays.items():
            np.testing.assert_array_equal(arrays2[key], arr)

    def test_version_mismatch_is_named(self, tmp_path):
        path = tmp_path / "bundle.npz"
        save_bundle(path, {}, {"a": np.zeros(1)})
        import json

        with np.load(path) as data:
            meta = json.loads(bytes(data["__meta__"]).decode())
            arrays = {k: data[k] for k in data.files if k != "__meta__"}
        meta["format_version"] = 999
        payload = {
            "__meta__": np.frombuffer(
                json.dumps(meta).encode(), dtype=np.uint8
            )
        }
        payload.update(arrays)
        np.savez(path, **payload)
        with pytest.raises(InvalidInputError, match="999"):
            load_bundle(path)
