"""Тесты оператора Грина, классификации и разложений."""

import numpy as np
import pytest

from src.errors import NegativeInput, NonpositiveRho, NotExcessive, NotInvariant, Reducible
from src.features.forms import build_form, energy, semigroup_apply
from src.features.graph_builder import path_graph_form
from src.modeling.decomposition import (
    ComponentClass,
    classify,
    decompose,
    decomposition_residual,
    excessive_decomposition_check,
    excessive_initial_data,
    green_apply,
    green_potential,
    irreducible_trichotomy,
    maximality_check,
)
from tests.conftest import mixed_random_form, random_form


def _multi_component_form(rng: np.random.Generator):
    """Несколько путей, часть с убиванием; вершины перемешаны перестановкой."""
    sizes = rng.integers(1, 5, size=int(rng.integers(2, 5)))
    n = int(sizes.sum())
    perm = rng.permutation(n)
    weights = np.zeros((n, n))
    killing = np.zeros(n)
    offset = 0
    for size in sizes:
        block = perm[offset:offset + size]
        for a, b in zip(block, block[1:]):
            weights[a, b] = weights[b, a] = rng.uniform(0.2, 2.0)
        if rng.random() < 0.5:
            killing[rng.choice(block)] = rng.uniform(0.1, 1.0)
        offset += size
    return build_form(weights, killing, rng.uniform(0.5, 2.0, size=n))


class TestGreen:
    def test_two_node_worked_example(self, two_node_killed):
        result = green_apply(two_node_killed, [1.0, 1.0])
        np.testing.assert_allclose(result.values, [3.0, 2.0], rtol=0, atol=1e-12)
        assert result.verdict(0) == "Finite(3)"
        assert result.diagnostics == ()

    def test_conservative_component_is_infinite(self, two_node):
        result = green_apply(two_node, [1.0, 0.0])
        assert not result.finite.any()
        assert result.verdict(1) == "Infinite"

    def test_zero_function_on_conservative_component(self, mixed_form):
        f = np.array([0.0, 0.0, 1.0, 1.0, 1.0])
        result = green_apply(mixed_form, f)
        np.testing.assert_array_equal(result.values[:2], [0.0, 0.0])
        assert result.finite[2:].all()

    def test_checkpoints_match_closed_form(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            form = mixed_random_form(rng)
            f = rng.uniform(0.1, 1.0, size=form.n)
            result = green_apply(form, f)
            killed = [3, 4, 5, 6]
            solution = result.closed_form[killed]
            gap = np.max(np.abs(result.partial_sums[-1, killed] - solution))
            assert gap <= 1e-8 * max(1.0, np.max(np.abs(solution)))

    def test_partial_and_resolvent_sums_agree(self, two_node_killed):
        result = green_apply(two_node_killed, [1.0, 1.0])
        assert result.resolvent_gap() <= 1e-8
        np.testing.assert_allclose(result.resolvent_sums[-1], [3.0, 2.0], atol=1e-8)

    def test_resolvent_gap_ignores_infinite_vertices(self, mixed_form):
        result = green_apply(mixed_form, np.array([1.0, 1.0, 0.0, 0.0, 0.0]))
        assert not result.finite[:2].any()
        assert result.resolvent_gap() == 0.0

    def test_partial_sums_increase(self, two_node_killed):
        result = green_apply(two_node_killed, [1.0, 0.0])
        assert np.all(np.diff(result.partial_sums, axis=0) >= -1e-12)

    def test_negative_f_rejected(self, two_node):
        with pytest.raises(NegativeInput):
            green_apply(two_node, [1.0, -1.0])

    def test_potential(self, mixed_form):
        potential = green_potential(mixed_form, np.ones(5))
        assert np.isinf(potential[:2]).all()
        assert np.isfinite(potential[2:]).all()


class TestClassify:
    def test_mixed_form(self, mixed_form):
        report = classify(mixed_form)
        assert report.x_rec == (0, 1)
        assert report.x_cons == (0, 1)
        assert report.x_diss == (2, 3, 4)
        assert report.x_trans == (2, 3, 4)
        assert report.x_tc == ()
        assert report.classes == (ComponentClass.RECURRENT, ComponentClass.DISSIPATIVE)
        assert report.diagnostics == ()

    def test_single_vertex(self):
        report = classify(build_form(np.zeros((1, 1)), [0.0], [1.0]))
        assert report.x_rec == (0,)

    def test_semigroup_on_one(self, mixed_form):
        report = classify(mixed_form)
        for values in report.semigroup_on_one.values():
            np.testing.assert_allclose(values[:2], [1.0, 1.0], atol=1e-9)
            assert max(values[2:]) < 1.0

    def test_rho_does_not_change_verdicts(self, mixed_form):
        rng = np.random.default_rng(11)
        baseline = classify(mixed_form).sets()
        densities = [rng.uniform(0.01, 1.0, size=5) for _ in range(4)]
        densities.append(np.array([1.0, 1.0, 1e-6, 1e-6, 1e-6]))
        for rho in densities:
            report = classify(mixed_form, rho=rho)
            assert report.sets() == baseline
            assert report.x_tc == ()

    def test_small_density_on_conservative_component(self):
        weights = np.zeros((4, 4))
        weights[0, 1] = weights[1, 0] = weights[2, 3] = weights[3, 2] = 1.0
        form = build_form(weights, np.zeros(4), np.ones(4))
        report = classify(form, rho=[1.0, 1.0, 1e-5, 1e-5])
        assert report.x_rec == (0, 1, 2, 3)
        assert report.classes == (ComponentClass.RECURRENT, ComponentClass.RECURRENT)
        assert report.diagnostics == ()

    def test_nonpositive_rho(self, mixed_form):
        with pytest.raises(NonpositiveRho):
            classify(mixed_form, rho=[1.0, 0.0, 1.0, 1.0, 1.0])

    def test_random_forms_inclusions_and_collapse(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            form = _multi_component_form(rng)
            report = classify(form)
            rec, diss, tc = set(report.x_rec), set(report.x_diss), set(report.x_tc)
            assert rec <= set(report.x_cons)
            assert diss <= set(report.x_trans)
            assert rec | diss | tc == set(range(form.n))
            assert not (rec & diss)
            assert report.x_rec == report.x_cons
            assert report.x_diss == report.x_trans


class TestTrichotomy:
    def test_recurrent_iff_no_killing(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = int(rng.integers(2, 8))
            killing = {n - 1: 0.5} if rng.random() < 0.5 else None
            form = path_graph_form(n, rng.uniform(0.5, 2.0), 1.0, killing)
            expected = ComponentClass.DISSIPATIVE if killing else ComponentClass.RECURRENT
            assert irreducible_trichotomy(form) == expected

    def test_reducible_rejected(self, mixed_form):
        with pytest.raises(Reducible):
            irreducible_trichotomy(mixed_form)


class TestDecompose:
    def test_mixed_form_parts(self, mixed_form):
        dec = decompose(mixed_form)
        assert dec.rec.subset == (0, 1)
        assert dec.diss.subset == (2, 3, 4)
        assert dec.tc.is_empty
        assert all(dec.report.checks.values())

    def test_conservative_form(self, two_node):
        dec = decompose(two_node)
        assert dec.rec.form is two_node
        assert dec.diss.is_empty and dec.tc.is_empty

    def test_residual_is_zero(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            form = _multi_component_form(rng)
            dec = decompose(form)
            for u in rng.standard_normal((3, form.n)):
                assert decomposition_residual(dec, u) == 0.0
            subsets = sorted(dec.rec.subset + dec.diss.subset + dec.tc.subset)
            assert subsets == list(range(form.n))

    def test_parts_reclassify(self, rng):
        form = mixed_random_form(rng, sizes=(4, 3))
        dec = decompose(form)
        assert classify(dec.rec.form).classes == (ComponentClass.RECURRENT,)
        assert classify(dec.diss.form).classes == (ComponentClass.DISSIPATIVE,)


class TestMaximality:
    def test_invariant_subsets(self, mixed_form):
        assert maximality_check(mixed_form, (0, 1))
        assert maximality_check(mixed_form, (2, 3, 4))
        assert maximality_check(mixed_form, ())

    def test_requires_invariance(self, mixed_form):
        with pytest.raises(NotInvariant):
            maximality_check(mixed_form, (3, 4))


class TestExcessive:
    def test_initial_data(self, mixed_form):
        u = excessive_initial_data(mixed_form)
        np.testing.assert_array_equal(u[:2], [1.0, 1.0])
        assert np.all(u[2:] > 0)

    def test_heat_decomposition_on_random_forms(self):
        rng = np.random.default_rng(7)
        grid = [0.1, 1.0, 10.0, 100.0]
        for _ in range(20):
            form = mixed_random_form(rng, sizes=(int(rng.integers(1, 5)), int(rng.integers(1, 5))))
            u = excessive_initial_data(form)
            check = excessive_decomposition_check(form, u, grid)
            assert check.passed
            assert max(check.residuals) <= 1e-10
            assert check.lower_bound_gap >= -1e-10

    def test_dissipative_part_decays(self, mixed_form):
        u = excessive_initial_data(mixed_form)
        late = semigroup_apply(mixed_form, 1e4, u).values
        np.testing.assert_allclose(late[:2], [1.0, 1.0], atol=1e-9)
        assert np.max(late[2:]) < 1e-3

    def test_not_excessive(self, two_node):
        with pytest.raises(NotExcessive):
            excessive_decomposition_check(two_node, [1.0, 0.0], [1.0])

    def test_random_form_energy_finite(self, form_factory):
        form = form_factory(6)
        u = excessive_initial_data(form)
        assert np.isfinite(energy(form, u))


def test_random_form_helper_is_seeded():
    a = random_form(np.random.default_rng(9), 5)
    b = random_form(np.random.default_rng(9), 5)
    np.testing.assert_array_equal(a.killing, b.killing)
