"""Тесты одномерных диффузий, теста Феллера и цепей рождения–гибели."""

import dataclasses
import math

import numpy as np
import pytest
import sympy

from src.errors import FiniteSpeedMass, InvalidDiffusionSpec, NonpositiveAtom
from src.modeling.diffusion import (
    CLASS_DISSIPATIVE,
    CLASS_RECURRENT,
    CLASS_TRANSIENT_CONSERVATIVE,
    CLASS_UNCLASSIFIED,
    EXIT,
    NON_APPROACHABLE,
    REFLECTING,
    BirthDeathSpec,
    DiffusionSpec,
    Interval,
    birth_death_conservative,
    classify_diffusion,
    classify_interval,
    classify_recurrence,
    custom_atoms,
    endpoint_report,
    exact_mass,
    example_5_1,
    example_5_1_spec,
    example_5_2,
    example_5_2_spec,
    extrapolate_limit,
    feller_explosion_test,
    parse_atom_spec,
    power_atoms,
    scale_limit,
    series_heuristic,
)
from src.modeling.rule_engine import RECURRENT, TRANSIENT, UNCLASSIFIED
from src.utils.expressions import Expression


@pytest.fixture(scope="module")
def two_intervals():
    return example_5_1()


@pytest.fixture
def slow_tail_spec():
    """Плотность x^-1.03 на [1, ∞): масса у бесконечного конца не решается."""
    return DiffusionSpec(
        name="slow-tail",
        scale=Expression("x"),
        speed_density=Expression("x^-1.03"),
        intervals=(Interval("I", 1.0, math.inf, True, False, 2.0),),
    )


class TestInterval:
    def test_describe(self):
        assert Interval("I", 0.0, math.inf, True, False, 1.0).describe() == "[0, inf)"

    @pytest.mark.parametrize(
        "lower,upper,include_upper,reference",
        [(1.0, 0.0, False, 0.5), (0.0, math.inf, True, 1.0), (0.0, 1.0, False, 2.0)],
    )
    def test_rejected(self, lower, upper, include_upper, reference):
        with pytest.raises(InvalidDiffusionSpec):
            Interval("I", lower, upper, True, include_upper, reference)

    def test_contains_respects_flags(self):
        interval = Interval("I", 0.0, 1.0, True, False, 0.5)
        assert interval.contains(0.0)
        assert not interval.contains(1.0)

    def test_interior_samples_are_increasing(self):
        samples = Interval("I", -math.inf, math.inf, False, False, 0.0).interior_samples()
        assert np.all(np.diff(samples) > 0)


class TestDiffusionSpec:
    def _spec(self, **overrides):
        fields = {
            "name": "d",
            "scale": Expression("x"),
            "speed_density": Expression("1"),
            "intervals": (Interval("I", 0.0, 1.0, True, True, 0.5),),
        }
        fields.update(overrides)
        return DiffusionSpec(**fields)

    def test_decreasing_scale(self):
        with pytest.raises(InvalidDiffusionSpec):
            self._spec(scale=Expression("-x"))

    def test_negative_density(self):
        with pytest.raises(InvalidDiffusionSpec):
            self._spec(speed_density=Expression("x"), intervals=(Interval("I", -1.0, 1.0, True, True, 0.0),))

    def test_density_not_evaluable(self):
        with pytest.raises(InvalidDiffusionSpec):
            self._spec(speed_density=Expression("log(x)"), intervals=(Interval("I", -1.0, 1.0, True, True, 0.0),))

    def test_overlapping_intervals(self):
        with pytest.raises(InvalidDiffusionSpec):
            self._spec(intervals=(Interval("A", 0.0, 2.0, True, True, 1.0), Interval("B", 1.0, 3.0, True, True, 2.0)))

    def test_touching_closed_intervals(self):
        with pytest.raises(InvalidDiffusionSpec):
            self._spec(intervals=(Interval("A", 0.0, 1.0, True, True, 0.5), Interval("B", 1.0, 2.0, True, True, 1.5)))
        spec = self._spec(intervals=(Interval("A", 0.0, 1.0, True, False, 0.5), Interval("B", 1.0, 2.0, True, True, 1.5)))
        assert len(spec.intervals) == 2

    def test_duplicate_names(self):
        with pytest.raises(InvalidDiffusionSpec):
            self._spec(intervals=(Interval("A", 0.0, 1.0, True, False, 0.5), Interval("A", 2.0, 3.0, True, True, 2.5)))

    def test_atoms(self):
        with pytest.raises(NonpositiveAtom):
            self._spec(atoms=((0.5, 0.0),))
        with pytest.raises(InvalidDiffusionSpec):
            self._spec(atoms=((2.0, 1.0),))
        spec = self._spec(atoms=((0.5, 2.0), (1.0, 1.0)))
        assert spec.atom_mass(0.0, 1.0) == 2.0

    def test_declared_limit_for_unknown_endpoint(self):
        with pytest.raises(InvalidDiffusionSpec):
            self._spec(declared_limits={("J", "lower"): 0.0})


class TestScaleLimit:
    def test_sources(self):
        spec = example_5_1_spec()
        assert scale_limit(spec, spec.interval("I1"), "lower").source == "evaluated"
        lower = scale_limit(spec, spec.interval("I2"), "lower")
        assert lower.label == "MinusInfinity"
        assert lower.source == "symbolic"
        upper = scale_limit(spec, spec.interval("I2"), "upper")
        assert upper.value == 0.0
        assert upper.diagnostics == ()

    def test_declared_value_conflict(self):
        spec = dataclasses.replace(example_5_1_spec(), declared_limits={("I1", "lower"): 0.7})
        limit = scale_limit(spec, spec.interval("I1"), "lower")
        assert limit.source == "declared"
        assert limit.value == 0.7
        assert len(limit.diagnostics) == 1

    def test_extrapolation(self):
        interval = Interval("I", 1.0, math.inf, True, False, 2.0)
        assert extrapolate_limit(Expression("1 - 1/x"), interval, "upper") == pytest.approx(1.0, abs=1e-9)
        assert extrapolate_limit(Expression("x^2"), interval, "upper") == math.inf
        assert extrapolate_limit(Expression("log(x)"), interval, "upper") is None


class TestEndpoints:
    def test_two_interval_endpoints(self):
        spec = example_5_1_spec()
        assert endpoint_report(spec, "I1", "lower").boundary_class == REFLECTING
        assert endpoint_report(spec, "I1", "upper").boundary_class == REFLECTING
        assert endpoint_report(spec, "I2", "lower").boundary_class == NON_APPROACHABLE
        upper = endpoint_report(spec, "I2", "upper")
        assert upper.boundary_class == EXIT
        assert upper.approachable and not upper.m_near.finite

    def test_open_regular_end_is_exit(self):
        report = endpoint_report(example_5_2_spec(), "I", "upper")
        assert report.regular
        assert not report.included
        assert report.boundary_class == EXIT

    def test_unknown_endpoint(self):
        with pytest.raises(InvalidDiffusionSpec):
            endpoint_report(example_5_2_spec(), "I", "middle")

    def test_recurrence_verdicts(self):
        spec = example_5_1_spec()
        assert classify_recurrence(spec, "I1").label == RECURRENT
        verdict = classify_recurrence(spec, "I2")
        assert verdict.label == TRANSIENT
        assert verdict.rule["pattern"] == "non_approachable|exit"


class TestTwoIntervals:
    def test_partition(self, two_intervals):
        assert two_intervals.rec == ("I1",)
        assert two_intervals.trans == ("I2",)
        assert set(two_intervals.cons) == {"I1", "I2"}
        assert two_intervals.diss == ()

    def test_classes(self, two_intervals):
        assert two_intervals.classification("I1").label == CLASS_RECURRENT
        assert two_intervals.classification("I2").label == CLASS_TRANSIENT_CONSERVATIVE

    def test_checks_and_exact_values(self, two_intervals):
        assert all(two_intervals.checks.values())
        assert two_intervals.exact["m(I1)"] == "14/3"
        assert two_intervals.diagnostics == ()

    def test_to_dict(self, two_intervals):
        data = two_intervals.to_dict()
        assert [item["class"] for item in data["intervals"]] == [CLASS_RECURRENT, CLASS_TRANSIENT_CONSERVATIVE]
        assert data["intervals"][1]["range"] == "[0, inf)"

    def test_exact_mass_with_atoms(self):
        spec = dataclasses.replace(example_5_1_spec(), atoms=((-1.5, 1.0),))
        assert exact_mass(spec, "I1") == sympy.Rational(17, 3)

    def test_rule_override(self, tmp_path):
        rules = tmp_path / "rules.json"
        rules.write_text('{"reflecting|reflecting": {"verdict": "Transient", "reason": "проверка"}}', encoding="utf-8")
        report = classify_diffusion(example_5_1_spec(), str(rules))
        assert report.classification("I1").label == CLASS_TRANSIENT_CONSERVATIVE
        assert report.rec == ()


class TestFeller:
    def test_regular_exit_explodes(self):
        verdict = feller_explosion_test(example_5_2_spec(), "I")
        assert verdict.conservative is False
        assert verdict.explosive == ("upper",)
        assert verdict.label == "NonConservative"

    def test_reflecting_ends_are_skipped(self):
        verdict = feller_explosion_test(example_5_1_spec(), "I1")
        assert verdict.conservative is True
        assert verdict.reflecting == ("lower", "upper")

    def test_unbounded_end_is_not_explosive(self):
        verdict = feller_explosion_test(example_5_1_spec(), "I2")
        assert verdict.conservative is True
        assert not verdict.upper.finite


class TestAmbiguity:
    def test_unclassified_interval(self, slow_tail_spec):
        item = classify_interval(slow_tail_spec, "I")
        assert item.recurrence.label == UNCLASSIFIED
        assert len(item.recurrence.evidence) > 0
        assert item.label == CLASS_UNCLASSIFIED

    def test_report_lists_unclassified(self, slow_tail_spec):
        report = classify_diffusion(slow_tail_spec)
        assert report.unclassified == ("I",)
        assert report.rec == () and report.trans == ()
        assert any("I" in message for message in report.diagnostics)


class TestBirthDeath:
    def test_power_rule(self):
        assert birth_death_conservative(power_atoms(0.0)).conservative is True
        assert birth_death_conservative(power_atoms(-0.5)).conservative is False
        assert birth_death_conservative(power_atoms(1.0, 2.0)).label == "Conservative"

    def test_power_partial_sums_agree(self):
        for p in (0.0, -0.5):
            verdict = birth_death_conservative(power_atoms(p))
            assert verdict.diagnostics == ()
            assert sorted(verdict.partial_sums) == [100, 1000, 10_000, 100_000]

    def test_infinite_mass_boundary(self):
        assert birth_death_conservative(power_atoms(-1.0)).infinite_mass is True
        assert birth_death_conservative(power_atoms(-1.5)).infinite_mass is False

    def test_custom_partial_sums(self):
        assert birth_death_conservative(custom_atoms("1")).conservative is True
        assert birth_death_conservative(custom_atoms("k^-0.5")).conservative is False

    def test_custom_undecided(self):
        verdict = birth_death_conservative(custom_atoms("1/log(k)"))
        assert verdict.conservative is None
        assert verdict.label == "Undecided"

    def test_declared_mass_conflict(self):
        verdict = birth_death_conservative(custom_atoms("k^-2", mass_infinite=True))
        assert verdict.infinite_mass is True
        assert len(verdict.diagnostics) == 1

    def test_nonpositive_atoms(self):
        with pytest.raises(NonpositiveAtom):
            custom_atoms("k - 3")
        with pytest.raises(NonpositiveAtom):
            parse_atom_spec("power:1:0")

    def test_unsupported_conductance(self):
        with pytest.raises(InvalidDiffusionSpec):
            BirthDeathSpec(Expression("1", variable="k"), conductance="k")

    def test_parse_atom_spec(self):
        spec = parse_atom_spec("power:-0.5:3")
        assert spec.power == -0.5 and spec.coefficient == 3.0
        assert spec.describe() == "a_k = 3·k^-0.5"
        with pytest.raises(InvalidDiffusionSpec):
            parse_atom_spec("power:abc")

    def test_series_heuristic(self):
        k = np.arange(2, 100_001, dtype=float)
        assert series_heuristic(np.ones_like(k), 2).label == "Divergent"
        assert series_heuristic(k ** -2, 2).label == "Convergent"
        assert series_heuristic(k ** -2, 2).divergent is False


class TestTraceExample:
    def test_constant_atoms(self):
        report = example_5_2("power:0")
        assert report.interval.label == CLASS_DISSIPATIVE
        assert report.chain.conservative is True
        assert report.cons == ("J",)
        assert report.diss == ("I",)
        assert report.trans == ("I", "J")
        assert all(report.checks.values())

    def test_decaying_atoms(self):
        report = example_5_2("power:-0.5")
        assert report.diss == ("I", "J")
        assert report.cons == ()

    def test_finite_mass_rejected(self):
        with pytest.raises(FiniteSpeedMass):
            example_5_2("power:-2")

    def test_undecided_chain(self):
        report = example_5_2(custom_atoms("1/log(k)"))
        assert report.chain.label == "Undecided"
        assert report.cons == ()
        assert any("J" in message for message in report.diagnostics)
