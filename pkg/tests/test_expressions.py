"""Тесты языка выражений."""

import math

import numpy as np
import pytest

from src.errors import EvaluationFailure, ExpressionError
from src.utils.expressions import Expression, parse_text


class TestParse:
    @pytest.mark.parametrize("text", ["", "   ", "sin(x)", "__import__('os')", "x y", "x2 + 1"])
    def test_rejected(self, text):
        with pytest.raises(ExpressionError):
            parse_text(text)

    def test_caret_is_power(self):
        assert Expression("x^2").scalar(3.0) == 9.0

    def test_scientific_literals(self):
        assert Expression("2.5e-3*x").scalar(2.0) == pytest.approx(5e-3)

    def test_pi_and_functions(self):
        expr = Expression("sqrt(abs(x)) + log(exp(pi))")
        assert expr.scalar(-4.0) == pytest.approx(2.0 + math.pi)

    def test_sequence_variable(self):
        assert Expression("k*(k+1)", variable="k").scalar(3.0) == 12.0
        with pytest.raises(ExpressionError):
            Expression("x + k", variable="k")


class TestEvaluate:
    def test_vectorized(self):
        values = Expression("x^2 - 1").evaluate([0.0, 1.0, 2.0])
        np.testing.assert_array_equal(values, [-1.0, 0.0, 3.0])

    def test_constant_broadcasts(self):
        np.testing.assert_array_equal(Expression("2").evaluate(np.zeros(3)), [2.0, 2.0, 2.0])

    def test_non_finite_raises(self):
        with pytest.raises(EvaluationFailure):
            Expression("1/x").evaluate([0.0, 1.0])
        with pytest.raises(EvaluationFailure):
            Expression("log(x)").scalar(-1.0)

    def test_non_strict_keeps_shape(self):
        values = Expression("1/x").evaluate([0.0, 2.0], strict=False)
        assert not np.isfinite(values[0])
        assert values[1] == 0.5


class TestSymbolic:
    def test_derivative(self):
        assert Expression("x^3").derivative().scalar(2.0) == pytest.approx(12.0)

    def test_antiderivative(self):
        primitive = Expression("x").antiderivative()
        assert primitive is not None
        assert primitive.scalar(2.0) == pytest.approx(2.0)

    def test_exact_value(self):
        assert Expression("1/x").exact_value(0.0) is None
        assert Expression("x^2").exact_value(0.5) == 0.25

    def test_limits(self):
        assert Expression("1/x").limit(0.0, "+") == math.inf
        assert Expression("-1/x").limit(0.0, "+") == -math.inf
        assert Expression("exp(-x)").limit(math.inf, "-") == 0.0
        assert Expression("log(x)").limit(1.0, "-") == 0.0

    def test_is_constant(self):
        assert Expression("pi^2").is_constant
        assert not Expression("x - x + x").is_constant
