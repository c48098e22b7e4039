"""Тесты инвариантных множеств, частей и следов."""

import numpy as np
import pytest

from src.errors import EmptySubset, IndexOutOfRange, NotInvariant
from src.features.forms import energy, semigroup_apply
from src.features.graph_builder import path_graph_form
from src.features.invariance import (
    commutator_norm,
    detect_invariant_sets,
    generator_commutator_norm,
    indicator,
    is_invariant,
    part_form,
    trace_form,
)
from tests.conftest import mixed_random_form


class TestInvariance:
    def test_component_is_invariant(self, mixed_form):
        verdict = is_invariant(mixed_form, (0, 1))
        assert verdict
        assert verdict.residual <= 1e-10
        assert verdict.numerical_agrees

    def test_split_component_is_not_invariant(self, mixed_form):
        verdict = is_invariant(mixed_form, (2, 3))
        assert not verdict
        assert verdict.cross_edges == ((3, 4, 0.5),)
        assert verdict.residual > 1e-6

    def test_semigroup_commutes_with_indicator(self, mixed_form, rng):
        mask = indicator(5, (2, 3, 4))
        u = rng.standard_normal(5)
        left = semigroup_apply(mixed_form, 0.8, mask * u).values
        right = mask * semigroup_apply(mixed_form, 0.8, u).values
        np.testing.assert_allclose(left, right, atol=1e-12)

    def test_empty_and_full_sets_are_invariant(self, mixed_form):
        assert is_invariant(mixed_form, ())
        assert is_invariant(mixed_form, range(5))

    def test_index_out_of_range(self, mixed_form):
        with pytest.raises(IndexOutOfRange):
            is_invariant(mixed_form, (7,))

    def test_generator_commutator(self, mixed_form):
        assert generator_commutator_norm(mixed_form, (0, 1)) == 0.0
        assert generator_commutator_norm(mixed_form, (2,)) > 0.1

    def test_resolvent_commutator(self, two_node):
        value = commutator_norm(two_node, (0,), lambda lam: 1.0 / (1.0 + lam))
        assert value > 1e-3

    def test_detect_components(self, mixed_form):
        partition = detect_invariant_sets(mixed_form)
        assert partition.components == ((0, 1), (2, 3, 4))
        assert partition.residual <= 1e-10
        assert partition.component_of(3) == 1
        assert partition.union([0, 1]) == (0, 1, 2, 3, 4)


class TestPartForm:
    def test_part_of_component(self, mixed_form):
        part = part_form(mixed_form, (2, 3, 4))
        assert part.form.n == 3
        np.testing.assert_allclose(part.form.killing, [0.0, 0.0, 0.25])
        np.testing.assert_allclose(part.form.measure, [1.0, 2.0, 1.0])

    def test_part_energy_adds_up(self, rng):
        form = mixed_random_form(rng)
        first = part_form(form, (0, 1, 2))
        second = part_form(form, (3, 4, 5, 6))
        u = rng.standard_normal(7)
        total = energy(first.form, first.restrict(u)) + energy(second.form, second.restrict(u))
        assert total == pytest.approx(energy(form, u), rel=1e-14)

    def test_extend_by_zero(self, mixed_form):
        part = part_form(mixed_form, (0, 1))
        np.testing.assert_array_equal(part.extend([1.0, 2.0]), [1.0, 2.0, 0.0, 0.0, 0.0])

    def test_non_invariant_part_rejected(self, mixed_form):
        with pytest.raises(NotInvariant):
            part_form(mixed_form, (2, 3))

    def test_whole_space_part_is_form(self, mixed_form):
        assert part_form(mixed_form, range(5)).form is mixed_form


class TestTrace:
    def test_path_schur_weight(self):
        trace = trace_form(path_graph_form(3, 1.0, 1.0), (0, 2))
        assert trace.weights[0, 1] == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(trace.killing, [0.0, 0.0], atol=1e-12)
        np.testing.assert_array_equal(trace.measure, [1.0, 1.0])

    def test_trace_equals_part_on_invariant_set(self, mixed_form):
        trace = trace_form(mixed_form, (2, 3, 4))
        part = part_form(mixed_form, (2, 3, 4)).form
        assert (trace.weights != part.weights).nnz == 0
        np.testing.assert_array_equal(trace.killing, part.killing)
        np.testing.assert_array_equal(trace.measure, part.measure)

    def test_trace_energy_is_harmonic_minimum(self, rng):
        form = path_graph_form(6, 2.0, 1.0, killing={5: 0.5})
        subset = [0, 2, 4]
        rest = [1, 3, 5]
        trace = trace_form(form, subset)
        v = rng.standard_normal(3)
        L = form.laplacian()
        u = np.zeros(6)
        u[subset] = v
        u[rest] = np.linalg.solve(L[np.ix_(rest, rest)], -L[np.ix_(rest, subset)] @ v)
        assert energy(trace, v) == pytest.approx(energy(form, u), rel=1e-10)

    def test_killing_carries_over(self):
        form = path_graph_form(3, 1.0, 1.0, killing={2: 1.0})
        trace = trace_form(form, (0,))
        # последовательное соединение 1 — 1 — 1 дает проводимость 1/3
        assert trace.killing[0] == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_empty_subset_rejected(self, two_node):
        with pytest.raises(EmptySubset):
            trace_form(two_node, ())
