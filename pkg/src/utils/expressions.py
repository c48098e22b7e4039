"""
Язык выражений для шкалы, плотности скорости и атомов.

Допустимы арифметика, степени (** и ^), abs, log, exp, sqrt и константа pi.
Переменная по умолчанию x; для последовательностей используется k.
"""

import math
import re
from typing import Optional

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from src.errors import EvaluationFailure, ExpressionError

ALLOWED_FUNCTIONS = {
    "abs": sympy.Abs,
    "log": sympy.log,
    "exp": sympy.exp,
    "sqrt": sympy.sqrt,
}

_NUMBER = re.compile(r"(?<![A-Za-z_\d])(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_TRANSFORMATIONS = standard_transformations + (convert_xor,)


def parse_text(text: str, variable: str = "x") -> sympy.Expr:
    """
    Разбирает текст выражения с белым списком имен.

    :raises ExpressionError: Пустой текст, недопустимое имя или синтаксическая ошибка
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("Пустое выражение")
    text = text.strip()
    stripped = _NUMBER.sub(" ", text)
    allowed = set(ALLOWED_FUNCTIONS) | {"pi", variable}
    unknown = sorted(set(_IDENTIFIER.findall(stripped)) - allowed)
    if unknown:
        raise ExpressionError(f"Недопустимые имена в выражении '{text}': {', '.join(unknown)}")

    symbol = sympy.Symbol(variable, real=True)
    namespace = dict(ALLOWED_FUNCTIONS)
    namespace["pi"] = sympy.pi
    namespace[variable] = symbol
    try:
        expr = parse_expr(text, local_dict=namespace, transformations=_TRANSFORMATIONS)
    except Exception as e:
        raise ExpressionError(f"Не удалось разобрать выражение '{text}': {e}") from e
    if not isinstance(expr, sympy.Expr):
        raise ExpressionError(f"Выражение '{text}' не является числовым")
    extra = expr.free_symbols - {symbol}
    if extra:
        raise ExpressionError(f"Лишние переменные в '{text}': {sorted(map(str, extra))}")
    return expr


class Expression:
    """
    Выражение одной переменной.

    Вычисление векторизовано через sympy.lambdify (numpy); любое нечисловое
    или бесконечное значение в запрошенных точках дает EvaluationFailure.
    """

    def __init__(self, text: str, variable: str = "x", expr: Optional[sympy.Expr] = None):
        self.variable = variable
        self.symbol = sympy.Symbol(variable, real=True)
        if expr is None:
            expr = parse_text(text, variable)
            self.text = text.strip()
        else:
            self.text = text
        self.expr = expr
        self._func = sympy.lambdify(self.symbol, self.expr, modules="numpy")

    @classmethod
    def from_sympy(cls, expr: sympy.Expr, variable: str = "x") -> "Expression":
        return cls(sympy.sstr(expr), variable=variable, expr=expr)

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"

    def evaluate(self, points, strict: bool = True) -> np.ndarray:
        """
        Вычисляет выражение в точках.

        :param points: Скаляр или массив
        :param strict: Бросать EvaluationFailure при нечисловых значениях
        :return: Массив той же формы
        """
        values_in = np.asarray(points, dtype=float)
        with np.errstate(all="ignore"):
            try:
                raw = self._func(values_in)
                values = np.asarray(raw, dtype=float)
            except (ZeroDivisionError, OverflowError, ValueError, TypeError) as e:
                if strict:
                    raise EvaluationFailure(f"Ошибка вычисления '{self.text}': {e}") from e
                values = np.full(values_in.shape, np.nan)
        # константы lambdify возвращает скаляром
        values = np.array(np.broadcast_to(values, values_in.shape), dtype=float)
        if strict and not np.all(np.isfinite(values)):
            bad = np.atleast_1d(values_in)[~np.isfinite(np.atleast_1d(values))]
            raise EvaluationFailure(f"Выражение '{self.text}' не конечно в точках {bad[:5].tolist()}")
        return values

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(points)

    def scalar(self, point: float) -> float:
        return float(self.evaluate(float(point)))

    def derivative(self) -> "Expression":
        """Символическая производная (для ds = s'(x) dx)."""
        return Expression.from_sympy(sympy.diff(self.expr, self.symbol), variable=self.variable)

    def antiderivative(self) -> Optional["Expression"]:
        """Первообразная или None, если sympy не берет интеграл в замкнутом виде."""
        try:
            result = sympy.integrate(self.expr, self.symbol)
        except Exception:
            return None
        if result.has(sympy.Integral):
            return None
        return Expression.from_sympy(result, variable=self.variable)

    def exact_value(self, point: float) -> Optional[float]:
        """Значение в точке через подстановку (None, если не конечно)."""
        try:
            value = self.expr.subs(self.symbol, sympy.nsimplify(point))
        except Exception:
            return None
        if value.has(sympy.zoo, sympy.nan, sympy.oo, -sympy.oo) or not value.is_number:
            return None
        try:
            result = float(value)
        except TypeError:
            return None
        return result if math.isfinite(result) else None

    def limit(self, point: float, direction: str) -> Optional[float]:
        """
        Символический односторонний предел.

        :param point: Конечная точка или ±inf
        :param direction: '+' (справа) или '-' (слева)
        :return: float (возможно ±inf) или None, если предел не найден
        """
        try:
            if math.isinf(point):
                value = sympy.limit(self.expr, self.symbol, sympy.oo if point > 0 else -sympy.oo)
            else:
                value = sympy.limit(self.expr, self.symbol, sympy.nsimplify(point), dir=direction)
        except Exception:
            return None
        if value == sympy.oo:
            return math.inf
        if value == -sympy.oo:
            return -math.inf
        if value.has(sympy.zoo, sympy.nan, sympy.AccumBounds) or not value.is_number:
            return None
        try:
            return float(value)
        except TypeError:
            return None

    @property
    def is_constant(self) -> bool:
        return self.symbol not in self.expr.free_symbols
