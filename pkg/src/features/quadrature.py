"""
Несобственные интегралы с поэтапными отсечками.

К особому (бесконечному или с неконечным значением подынтегральной функции)
концу приближаемся геометрически; на каждом слое работает scipy.integrate.quad.
Решение принимается по приращениям между этапами:

- Finite: приращения убывают геометрически и оценка хвоста по Ричардсону
  стабилизировалась до INTEGRAL_REL_TOL;
- Divergent: значение превысило cap или последние приращения не убывают;
- иначе AmbiguousTail.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import integrate

from src.constants import (
    INTEGRAL_CAP,
    INTEGRAL_FACTOR,
    INTEGRAL_GROWTH_WINDOW,
    INTEGRAL_REL_TOL,
    INTEGRAL_SHRINK_RATIO,
    INTEGRAL_STAGES,
)
from src.errors import AmbiguousTail, EvaluationFailure, ParameterError

_QUAD_REL = 1e-11
_QUAD_LIMIT = 200
_INTERIOR_SAMPLES = 17
_EQUAL_SLACK = 1e-9


@dataclass(frozen=True)
class IntegralVerdict:
    """Finite(value, error) или Divergent(stage_values)."""

    finite: bool
    value: float = math.inf
    error: float = 0.0
    stage_values: Tuple[float, ...] = field(default_factory=tuple)

    @property
    def label(self) -> str:
        return "Finite" if self.finite else "Divergent"

    def to_dict(self) -> dict:
        if self.finite:
            return {"verdict": "Finite", "value": self.value, "error": self.error,
                    "stage_values": list(self.stage_values)}
        return {"verdict": "Divergent", "stage_values": list(self.stage_values)}


def finite(value: float, error: float = 0.0, stage_values: Sequence[float] = ()) -> IntegralVerdict:
    return IntegralVerdict(True, float(value), float(error), tuple(float(v) for v in stage_values))


def divergent(stage_values: Sequence[float]) -> IntegralVerdict:
    return IntegralVerdict(False, math.inf, 0.0, tuple(float(v) for v in stage_values))


def _scalar(f: Callable) -> Callable[[float], float]:
    def wrapped(x: float) -> float:
        with np.errstate(all="ignore"):
            try:
                value = float(np.asarray(f(np.asarray(x, dtype=float))))
            except EvaluationFailure:
                raise
            except (ZeroDivisionError, OverflowError, ValueError, TypeError) as e:
                raise EvaluationFailure(f"Подынтегральная функция не вычисляется в x={x:g}: {e}") from e
        if not math.isfinite(value):
            raise EvaluationFailure(f"Подынтегральная функция не конечна в x={x:g}")
        return value

    return wrapped


def _is_singular(f: Callable, point: float) -> bool:
    if math.isinf(point):
        return True
    with np.errstate(all="ignore"):
        try:
            value = float(np.asarray(f(np.asarray(point, dtype=float))))
        except Exception:
            return True
    return not math.isfinite(value)


def _quad(g: Callable[[float], float], a: float, b: float) -> Tuple[float, float]:
    if a == b:
        return 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, error = integrate.quad(g, a, b, epsabs=0.0, epsrel=_QUAD_REL, limit=_QUAD_LIMIT)
    return float(value), float(error)


def _cutoffs(start: float, end: float, stages: int, factor: float) -> List[float]:
    """Точки x_0 = start, ..., x_stages, геометрически приближающиеся к end."""
    if math.isinf(end):
        sign = 1.0 if end > 0 else -1.0
        return [start + sign * (factor ** j - 1.0) for j in range(stages + 1)]
    return [end - (end - start) * factor ** (-j) for j in range(stages + 1)]


def _richardson(values: List[float], increments: List[float]) -> List[float]:
    """Экстраполяции R_j = V_j + d_j q_j / (1 − q_j) с q_j = d_j / d_{j−1}."""
    estimates = []
    for j in range(1, len(increments)):
        prev, cur = increments[j - 1], increments[j]
        if prev == 0.0:
            estimates.append(values[j + 1])
            continue
        q = cur / prev
        estimates.append(values[j + 1] + (cur * q / (1.0 - q) if abs(q) < 1.0 else 0.0))
    return estimates


def _staged(
    g: Callable[[float], float],
    start: float,
    end: float,
    cap: float,
    stages: int,
    factor: float,
) -> Tuple[IntegralVerdict, List[float], float]:
    """Односторонний интеграл от start к особому концу end. Возвращает (вердикт, этапы, ошибка quad)."""
    points = _cutoffs(start, end, stages, factor)
    values = [0.0]
    quad_error = 0.0
    for lo, hi in zip(points, points[1:]):
        piece, err = _quad(g, lo, hi) if start <= end else _quad(g, hi, lo)
        values.append(values[-1] + piece)
        quad_error += err
    increments = [b - a for a, b in zip(values, values[1:])]
    stage_values = values[1:]

    if abs(stage_values[-1]) > cap:
        return divergent(stage_values), stage_values, quad_error

    window = [abs(d) for d in increments[-INTEGRAL_GROWTH_WINDOW:]]
    if all(b >= a * (1.0 - _EQUAL_SLACK) and b > 0.0 for a, b in zip(window, window[1:])):
        return divergent(stage_values), stage_values, quad_error

    ratios = [abs(b) / abs(a) for a, b in zip(window, window[1:]) if a != 0.0]
    tail_zero = all(d == 0.0 for d in window[1:])
    shrinking = tail_zero or (len(ratios) == len(window) - 1 and all(r <= INTEGRAL_SHRINK_RATIO for r in ratios))
    if shrinking:
        if tail_zero:
            return finite(stage_values[-1], quad_error, stage_values), stage_values, quad_error
        estimates = _richardson(values, increments)
        scale = max(abs(estimates[-1]), sum(abs(d) for d in increments), 1e-300)
        drift = abs(estimates[-1] - estimates[-2])
        if drift <= INTEGRAL_REL_TOL * scale:
            return finite(estimates[-1], drift + quad_error, stage_values), stage_values, quad_error

    raise AmbiguousTail(
        "Не удалось решить сходимость интеграла: приращения "
        + ", ".join(f"{d:.3e}" for d in increments),
        stage_values,
    )


def improper_integral(
    f: Callable,
    a: float,
    b: float,
    cap: float = INTEGRAL_CAP,
    stages: int = INTEGRAL_STAGES,
    factor: float = INTEGRAL_FACTOR,
) -> IntegralVerdict:
    """
    Вычисляет ∫_a^b f(x) dx с поэтапным подходом к особым концам.

    :param f: Векторизуемая функция (массив -> массив)
    :param a: Нижний предел (может быть -inf)
    :param b: Верхний предел (может быть +inf)
    :param cap: Порог расходимости по модулю значения
    :param stages: Число этапов отсечек
    :param factor: Геометрический множитель отсечек
    :return: IntegralVerdict
    :raises EvaluationFailure: f не конечна во внутренней точке
    :raises AmbiguousTail: Ни один критерий не выполнен
    """
    a, b = float(a), float(b)
    if not a < b:
        raise ParameterError(f"Требуется a < b, получено a={a:g}, b={b:g}")
    if stages < INTEGRAL_GROWTH_WINDOW + 1:
        raise ParameterError(f"Нужно не меньше {INTEGRAL_GROWTH_WINDOW + 1} этапов")

    g = _scalar(f)
    lower_singular = _is_singular(f, a)
    upper_singular = _is_singular(f, b)

    if math.isinf(a) and math.isinf(b):
        middle = 0.0
    elif math.isinf(a):
        middle = b - 1.0
    elif math.isinf(b):
        middle = a + 1.0
    else:
        middle = 0.5 * (a + b)

    # внутренние точки: f должна быть конечной
    span_lo = a if not math.isinf(a) else middle - 1.0
    span_hi = b if not math.isinf(b) else middle + 1.0
    for t in np.linspace(0.0, 1.0, _INTERIOR_SAMPLES + 2)[1:-1]:
        g(span_lo + t * (span_hi - span_lo))

    if not lower_singular and not upper_singular:
        value, error = _quad(g, a, b)
        return finite(value, error, (value,))

    total, total_error, stage_values = 0.0, 0.0, []
    base_lo = middle if lower_singular else a
    base_hi = middle if upper_singular else b
    if base_lo < base_hi:
        value, error = _quad(g, base_lo, base_hi)
        total += value
        total_error += error

    if lower_singular:
        # слои ориентированы слева направо, так что сумма равна ∫_a^middle
        verdict, stages_lower, _ = _staged(g, middle, a, cap, stages, factor)
        if not verdict.finite:
            return verdict
        total += verdict.value
        total_error += verdict.error
        stage_values.extend(stages_lower)
    if upper_singular:
        verdict, stages_upper, _ = _staged(g, middle, b, cap, stages, factor)
        if not verdict.finite:
            return verdict
        total += verdict.value
        total_error += verdict.error
        stage_values.extend(stages_upper)
    return finite(total, total_error, stage_values)
