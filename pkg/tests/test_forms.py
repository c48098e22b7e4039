"""Тесты конечных форм, полугрупп, резольвент и приближений."""

import math

import numpy as np
import pytest
import scipy.linalg

from src.errors import (
    AsymmetricWeights,
    DimensionMismatch,
    NegativeEntry,
    NegativeInput,
    NegativeTime,
    NonFiniteEntry,
    NonpositiveBeta,
    NonpositiveMeasure,
    NonpositiveTime,
    UnsortedGrid,
)
from src.features.forms import (
    build_form,
    clip_unit,
    deny_yosida,
    deny_yosida_form,
    energy,
    exact_energy,
    heat_evolve,
    is_excessive,
    approximating_semigroup_apply,
    kappa_beta,
    operator_matrix,
    sigma_t,
    representation_check,
    resolvent_apply,
    semigroup_apply,
    time_dependent,
    time_dependent_form,
    zero_form,
)
from tests.conftest import random_form


def _generator(form) -> np.ndarray:
    return form.laplacian() / form.measure[:, None]


class TestBuildForm:
    def test_two_node_spectrum(self, two_node):
        np.testing.assert_allclose(two_node.spectral.eigenvalues, [0.0, 2.0], atol=1e-14)

    def test_asymmetric_weights_rejected(self):
        with pytest.raises(AsymmetricWeights):
            build_form(np.array([[0.0, 1.0], [2.0, 0.0]]), [0.0, 0.0], [1.0, 1.0])

    def test_negative_weight_rejected(self):
        with pytest.raises(NegativeEntry):
            build_form(np.array([[0.0, -1.0], [-1.0, 0.0]]), [0.0, 0.0], [1.0, 1.0])

    def test_negative_killing_rejected(self):
        with pytest.raises(NegativeEntry):
            build_form(np.zeros((2, 2)), [0.0, -0.5], [1.0, 1.0])

    def test_zero_measure_rejected(self):
        with pytest.raises(NonpositiveMeasure):
            build_form(np.zeros((2, 2)), [0.0, 0.0], [1.0, 0.0])

    def test_nan_rejected(self):
        with pytest.raises(NonFiniteEntry):
            build_form(np.zeros((2, 2)), [0.0, float("nan")], [1.0, 1.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_form(np.zeros((3, 3)), [0.0, 0.0], [1.0, 1.0])

    def test_arrays_are_read_only(self, two_node):
        with pytest.raises(ValueError):
            two_node.killing[0] = 1.0

    def test_empty_form(self):
        form = zero_form(0)
        assert form.n == 0
        assert energy(form, np.zeros(0)) == 0.0


class TestEnergy:
    def test_two_node_energy(self, two_node):
        assert energy(two_node, [1.0, -1.0]) == 4.0

    def test_killing_contributes(self, two_node_killed):
        assert energy(two_node_killed, [1.0, 1.0]) == 1.0

    def test_matches_quadratic_form(self, form_factory):
        form = form_factory(12)
        u = np.linspace(-1.0, 2.0, 12)
        assert energy(form, u) == pytest.approx(u @ form.laplacian() @ u, rel=1e-12)

    def test_exact_energy_agrees(self, form_factory):
        form = form_factory(8)
        u = np.arange(8, dtype=float)
        assert float(exact_energy(form, u)) == pytest.approx(energy(form, u), rel=1e-15)

    def test_normal_contraction_does_not_increase_energy(self, form_factory, rng):
        form = form_factory(10)
        for _ in range(20):
            u = rng.normal(0.5, 1.0, size=10)
            assert energy(form, clip_unit(u)) <= energy(form, u) + 1e-12


class TestOperators:
    def test_semigroup_matches_expm(self, form_factory, rng):
        form = form_factory(10)
        u = rng.standard_normal(10)
        expected = scipy.linalg.expm(-0.7 * _generator(form)) @ u
        np.testing.assert_allclose(semigroup_apply(form, 0.7, u).values, expected, atol=1e-10)

    def test_resolvent_matches_solve(self, form_factory, rng):
        form = form_factory(10)
        u = rng.standard_normal(10)
        expected = np.linalg.solve(2.0 * np.eye(10) + _generator(form), u)
        np.testing.assert_allclose(resolvent_apply(form, 2.0, u).values, expected, atol=1e-10)

    def test_semigroup_at_zero_is_identity(self, two_node):
        np.testing.assert_allclose(semigroup_apply(two_node, 0.0, [1.0, 3.0]).values, [1.0, 3.0], atol=1e-14)

    def test_markov_property(self, form_factory, rng):
        form = form_factory(15)
        u = rng.uniform(0.0, 1.0, size=15)
        values = semigroup_apply(form, 1.3, u).values
        assert values.min() >= -1e-12
        assert values.max() <= 1.0 + 1e-12

    def test_operator_matrix_is_semigroup(self, two_node_killed):
        matrix = operator_matrix(two_node_killed, lambda lam: np.exp(-0.5 * lam))
        expected = scipy.linalg.expm(-0.5 * _generator(two_node_killed))
        np.testing.assert_allclose(matrix, expected, atol=1e-12)

    def test_negative_time_rejected(self, two_node):
        with pytest.raises(NegativeTime):
            semigroup_apply(two_node, -1.0, [1.0, 0.0])

    def test_nonpositive_beta_rejected(self, two_node):
        with pytest.raises(NonpositiveBeta):
            resolvent_apply(two_node, 0.0, [1.0, 0.0])
        with pytest.raises(NonpositiveBeta):
            deny_yosida(two_node, -1.0, [1.0, 0.0])

    def test_time_dependent_needs_positive_time(self, two_node):
        with pytest.raises(NonpositiveTime):
            time_dependent(two_node, 0.0, [1.0, 0.0])

    def test_wrong_vector_length(self, two_node):
        with pytest.raises(DimensionMismatch):
            semigroup_apply(two_node, 1.0, [1.0, 2.0, 3.0])


class TestApproximations:
    @pytest.mark.parametrize("beta", [0.01, 0.1, 1.0, 10.0, 1000.0])
    def test_deny_yosida_two_node(self, two_node, beta):
        assert deny_yosida(two_node, beta, [1.0, -1.0]) == pytest.approx(4 * beta / (beta + 2), rel=1e-12)

    @pytest.mark.parametrize("t", [0.001, 0.1, 1.0, 10.0])
    def test_time_dependent_two_node(self, two_node, t):
        expected = 2.0 * (1.0 - math.exp(-2.0 * t)) / t
        assert time_dependent(two_node, t, [1.0, -1.0]) == pytest.approx(expected, rel=1e-12)

    def test_representation_identities(self):
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(2, 31))
            form = random_form(rng, n, density=rng.uniform(0.05, 0.6))
            for u in rng.standard_normal((10, n)):
                for kind, param in (("time", rng.uniform(0.01, 5.0)), ("resolvent", rng.uniform(0.01, 5.0))):
                    worst = max(worst, representation_check(form, param, u, kind).residual)
        assert worst <= 1e-10

    def test_monotone_and_limits(self):
        rng = np.random.default_rng(2)
        betas = [10.0 ** j for j in range(-3, 9)]
        times = [10.0 ** -j for j in range(-3, 9)]
        for _ in range(100):
            n = int(rng.integers(2, 9))
            form = random_form(rng, n)
            u = rng.standard_normal(n)
            full = energy(form, u)
            by_beta = [deny_yosida(form, b, u) for b in betas]
            by_time = [time_dependent(form, t, u) for t in times]
            slack = 1e-12 * max(1.0, full)
            assert all(b >= a - slack for a, b in zip(by_beta, by_beta[1:]))
            assert all(b >= a - slack for a, b in zip(by_time, by_time[1:]))
            assert by_beta[-1] == pytest.approx(full, rel=1e-6, abs=1e-12)
            assert by_time[-1] == pytest.approx(full, rel=1e-6, abs=1e-12)
            assert max(by_beta + by_time) <= full + slack

    def test_time_dependent_form_energy(self, form_factory, rng):
        form = form_factory(9)
        jump = time_dependent_form(form, 0.3)
        for u in rng.standard_normal((5, 9)):
            assert energy(jump, u) == pytest.approx(time_dependent(form, 0.3, u), rel=1e-9, abs=1e-12)

    def test_deny_yosida_form_energy(self, form_factory, rng):
        form = form_factory(9)
        jump = deny_yosida_form(form, 4.0)
        for u in rng.standard_normal((5, 9)):
            assert energy(jump, u) == pytest.approx(deny_yosida(form, 4.0, u), rel=1e-9, abs=1e-12)

    def test_unknown_kind(self, two_node):
        with pytest.raises(ValueError):
            representation_check(two_node, 1.0, [1.0, 0.0], kind="spectral")

    @pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
    def test_sigma_two_node(self, two_node, t):
        expected = (1.0 - math.exp(-2.0 * t)) / (2.0 * t)
        np.testing.assert_allclose(sigma_t(two_node, t, [1.0, 0.0]).values, [expected, expected], rtol=1e-12)
        np.testing.assert_allclose(sigma_t(two_node, t, [1.0, 1.0]).values, [0.0, 0.0], atol=1e-12)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 20.0])
    def test_kappa_two_node(self, two_node, beta):
        expected = beta * (1.0 / beta - 1.0 / (beta + 2.0)) / 2.0
        np.testing.assert_allclose(kappa_beta(two_node, beta, [1.0, 0.0]).values, [expected, expected], rtol=1e-12)

    def test_approximating_semigroup_on_eigenvectors(self, two_node):
        ones = approximating_semigroup_apply(two_node, "time", 0.5, 3.0, [1.0, 1.0]).values
        np.testing.assert_allclose(ones, [1.0, 1.0], rtol=1e-12)
        factor = math.exp(-3.0 * 4.0 * 2.0 / 6.0)
        odd = approximating_semigroup_apply(two_node, "resolvent", 4.0, 3.0, [1.0, -1.0]).values
        np.testing.assert_allclose(odd, [factor, -factor], rtol=1e-12)
        with pytest.raises(ValueError):
            approximating_semigroup_apply(two_node, "spectral", 1.0, 1.0, [1.0, 0.0])


class TestHeatAndExcessive:
    def test_heat_starts_at_initial_data(self, two_node):
        trajectory = heat_evolve(two_node, [1.0, 0.0], [0.0, 1.0, 100.0])
        np.testing.assert_allclose(trajectory[0].values, [1.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(trajectory[-1].values, [0.5, 0.5], atol=1e-12)

    def test_heat_grid_must_start_at_zero(self, two_node):
        with pytest.raises(UnsortedGrid):
            heat_evolve(two_node, [1.0, 0.0], [0.5, 1.0])

    def test_heat_grid_must_increase(self, two_node):
        with pytest.raises(UnsortedGrid):
            heat_evolve(two_node, [1.0, 0.0], [0.0, 1.0, 1.0])

    def test_green_potential_is_excessive(self, two_node_killed):
        assert is_excessive(two_node_killed, [3.0, 2.0], [0.1, 1.0, 10.0])

    def test_constants_are_excessive_without_killing(self, two_node):
        assert is_excessive(two_node, [1.0, 1.0], [0.5, 5.0])

    def test_point_mass_is_not_excessive(self, two_node):
        assert not is_excessive(two_node, [1.0, 0.0], [0.5])

    def test_resolvent_potential_is_one_excessive(self, form_factory, rng):
        form = form_factory(8)
        potential = resolvent_apply(form, 1.0, rng.uniform(0.0, 1.0, size=8)).values
        assert is_excessive(form, potential, [0.1, 1.0, 5.0], alpha=1.0)

    def test_negative_input_rejected(self, two_node):
        with pytest.raises(NegativeInput):
            is_excessive(two_node, [1.0, -1.0], [1.0])
