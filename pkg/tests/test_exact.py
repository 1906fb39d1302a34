import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebm.errors import CapacityError, DimensionError, InvariantError, UnsupportedFamilyError
from ebm.exact import (
    IsingModel, binary_configs, boltzmann_quantities, config_index, exact_cond_hidden, exact_joint,
    exact_loglik, exact_loglik_grad, exact_marginal_visible, ising_energy, ising_energy_table, ising_states,
    joint_table, log_partition, marginal_visible_table, model_expectations, rbm_partition,
)
from ebm.model import BmParams, RbmParams, init_params, rng_stream

from conftest import loop_bm_energy, loop_joint, random_bm, random_rbm


def _perturb(params, name, idx, delta):
    base = params.base if isinstance(params, BmParams) else params
    arrays = {"W": base.W.copy(), "b": base.b.copy(), "c": base.c.copy()}
    if isinstance(params, BmParams):
        arrays["L"], arrays["J"] = params.L.copy(), params.J.copy()
    arrays[name][idx] += delta
    if name in ("L", "J"):
        arrays[name][idx[::-1]] += delta
    new = base.with_arrays(arrays["W"], arrays["b"], arrays["c"])
    return BmParams(new, arrays["L"], arrays["J"]) if isinstance(params, BmParams) else new


class TestPartition:
    def test_zero_model(self):
        params = init_params(3, 2, init_scale=0.0, rng=rng_stream(0))
        assert rbm_partition(params) == 32.0

    def test_hidden_units_summed_out(self, rng):
        params = random_rbm(rng, 4, 3)
        direct = sum(
            math.exp(params.b @ v) * np.prod(1.0 + np.exp(params.c + v @ params.W))
            for v in binary_configs(4)
        )
        assert abs(rbm_partition(params) / direct - 1.0) < 1e-12

    def test_matches_loop_enumeration(self, rng):
        params = random_rbm(rng, 3, 2)
        joint = loop_joint(params)
        for v in itertools.product((0.0, 1.0), repeat=3):
            for h in itertools.product((0.0, 1.0), repeat=2):
                assert abs(exact_joint(params, np.array(v), np.array(h)) - joint[(v, h)]) < 1e-12

    def test_large_weights_stay_finite(self):
        params = RbmParams(np.full((3, 2), 400.0), np.zeros(3), np.zeros(2))
        assert abs(log_partition(params) - 2400.0) < 1e-9

    def test_capacity(self):
        params = init_params(15, 10, init_scale=0.0, rng=rng_stream(0))
        with pytest.raises(CapacityError):
            log_partition(params)
        with pytest.raises(CapacityError):
            log_partition(init_params(3, 3, rng=rng_stream(0)), cap=5)

    def test_non_binary_rejected(self, rng):
        base = random_rbm(rng, 2, 2)
        with pytest.raises(UnsupportedFamilyError):
            log_partition(RbmParams(base.W, base.b, base.c, "gaussian", "binary"))

    def test_bm_joint_matches_loop(self, rng):
        params = random_bm(rng, 3, 2)
        joint = loop_joint(params, loop_bm_energy)
        table = joint_table(params)
        for (v, h), pr in joint.items():
            assert abs(table[config_index(v)[0], config_index(h)[0]] - pr) < 1e-12


class TestMarginals:
    def test_tables_normalized(self, rng):
        params = random_rbm(rng, 4, 3)
        assert abs(joint_table(params).sum() - 1.0) < 1e-12
        np.testing.assert_allclose(marginal_visible_table(params), joint_table(params).sum(axis=1), atol=1e-14)

    def test_marginal_scalar(self, rng):
        params = random_rbm(rng, 3, 2)
        table = marginal_visible_table(params)
        for v in binary_configs(3):
            assert abs(exact_marginal_visible(params, v) - table[config_index(v)[0]]) < 1e-14

    def test_conditional_rows(self, rng):
        params = random_rbm(rng, 3, 2)
        table = joint_table(params)
        for i, v in enumerate(binary_configs(3)):
            np.testing.assert_allclose(exact_cond_hidden(params, v), table[i] / table[i].sum(), atol=1e-14)


class TestLoglik:
    def test_uniform_model(self):
        params = init_params(3, 2, init_scale=0.0, rng=rng_stream(0))
        assert abs(exact_loglik(params, np.ones((4, 3))) - 4 * math.log(1 / 8)) < 1e-12

    def test_weights_equal_repetition(self, rng):
        params = random_rbm(rng, 3, 2)
        rows = binary_configs(3)[[1, 5]]
        repeated = np.vstack([rows[0], rows[1], rows[1], rows[1]])
        assert abs(exact_loglik(params, rows, [1, 3]) - exact_loglik(params, repeated)) < 1e-12

    def test_empty_data(self, rng):
        assert exact_loglik(random_rbm(rng, 2, 2), np.zeros((0, 2))) == 0.0

    def test_wrong_width(self, rng):
        with pytest.raises(DimensionError):
            exact_loglik(random_rbm(rng, 3, 2), np.ones((2, 4)))


def _fd_check(params, data, names):
    grad = exact_loglik_grad(params, data)
    eps = 1e-5
    for name in names:
        arr = getattr(params.base if isinstance(params, BmParams) and name in "Wbc" else params, name)
        for idx in np.ndindex(arr.shape):
            if name in ("L", "J") and idx[0] >= idx[1]:
                continue
            up = exact_loglik(_perturb(params, name, idx, eps), data)
            down = exact_loglik(_perturb(params, name, idx, -eps), data)
            numeric = (up - down) / (2 * eps) / len(data)
            analytic = getattr(grad, "d" + name)[idx] / len(data)
            if name in ("L", "J"):
                analytic *= 2
            assert abs(numeric - analytic) < 1e-6, (name, idx)


class TestGradient:
    def test_rbm_finite_differences(self, rng):
        for _ in range(3):
            params = random_rbm(rng, 3, 2)
            data = (rng.random((7, 3)) < 0.5).astype(float)
            _fd_check(params, data, "Wbc")

    def test_bm_finite_differences(self, rng):
        params = random_bm(rng, 3, 3)
        data = (rng.random((5, 3)) < 0.5).astype(float)
        _fd_check(params, data, ["W", "b", "c", "L", "J"])

    def test_zero_at_model_distribution(self, rng):
        params = random_rbm(rng, 3, 2)
        grad = exact_loglik_grad(params, binary_configs(3), weights=marginal_visible_table(params))
        for g in (grad.dW, grad.db, grad.dc):
            assert np.max(np.abs(g)) < 1e-12

    def test_model_expectations_against_table(self, rng):
        params = random_rbm(rng, 3, 2)
        table = joint_table(params)
        V, H = binary_configs(3), binary_configs(2)
        exp = model_expectations(params)
        np.testing.assert_allclose(exp["vh"], V.T @ table @ H, atol=1e-14)
        np.testing.assert_allclose(exp["v"], table.sum(axis=1) @ V, atol=1e-14)


class TestThermodynamics:
    def test_two_state_closed_form(self):
        rep = boltzmann_quantities([0.0, 1.0], 1.0)
        Z = 1 + math.exp(-1)
        assert abs(rep.Z - Z) < 1e-15
        assert abs(rep.U - math.exp(-1) / Z) < 1e-15
        assert abs(rep.F + math.log(Z)) < 1e-15

    def test_infinite_temperature(self):
        rep = boltzmann_quantities(np.arange(8.0), 0.0)
        assert rep.F is None
        assert abs(rep.H - math.log(8)) < 1e-15
        assert abs(rep.Z - 8.0) < 1e-12

    def test_large_beta_no_overflow(self):
        rep = boltzmann_quantities([-100.0, 0.0, 5.0], 1e3)
        assert math.isinf(rep.Z) or rep.Z > 0
        assert rep.H >= 0 and abs(rep.U + 100.0) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=16), st.floats(0.01, 10))
    def test_entropy_identity(self, energies, beta):
        rep = boltzmann_quantities(energies, beta)
        assert abs(rep.H - (-beta * rep.F + beta * rep.U)) <= 1e-10 * max(1.0, abs(rep.log_Z))
        assert -1e-12 <= rep.H <= math.log(len(energies)) + 1e-12

    def test_invalid_inputs(self):
        with pytest.raises(InvariantError):
            boltzmann_quantities([0.0, np.inf], 1.0)
        with pytest.raises(InvariantError):
            boltzmann_quantities([0.0], -1.0)
        with pytest.raises(DimensionError):
            boltzmann_quantities([], 1.0)


class TestIsing:
    def test_two_site_partition(self):
        model = IsingModel(2, [(0, 1, 1.0)])
        rep = boltzmann_quantities(ising_energy_table(model), 1.0)
        assert abs(rep.Z - (2 * math.e + 2 / math.e)) < 1e-12

    def test_table_matches_scalar(self):
        model = IsingModel.homogeneous_chain(4, J=0.7, closed=True)
        table = ising_energy_table(model)
        for x, e in zip(ising_states(4), table):
            assert abs(ising_energy(model, x) - e) < 1e-14

    def test_ferromagnet_orders(self):
        model = IsingModel.homogeneous_chain(6, J=1.0, closed=True)
        E = ising_energy_table(model)
        P = np.exp(-5.0 * (E - E.min()))
        P /= P.sum()
        aligned = np.all(ising_states(6) == ising_states(6)[:, :1], axis=1)
        assert P[aligned].sum() > 0.99

    def test_validation(self):
        with pytest.raises(InvariantError):
            IsingModel(3, [(1, 1, 1.0)])
        with pytest.raises(InvariantError):
            IsingModel(3, [(0, 1, 1.0), (1, 0, 0.5)])
        with pytest.raises(DimensionError):
            IsingModel(2, [(0, 2, 1.0)])
        with pytest.raises(InvariantError):
            ising_energy(IsingModel(2, []), [1, 0])
