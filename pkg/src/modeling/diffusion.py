"""
Одномерные диффузии, заданные шкалой s и мерой скорости m, и цепи
рождения–гибели.

Концы интервала классифицируются по конечности s и массы m рядом с концом:

- reflecting — регулярный конец, принадлежащий интервалу;
- exit — достижимый конец, не являющийся отражающим;
- non_approachable — s уходит в ±∞.

Возвратность решает таблица BoundaryRuleEngine, консервативность решает
тест Феллера на взрыв. Неоднозначные несобственные интегралы и ряды
никогда не превращаются в классификацию: вердикт остается
Unclassified/Undecided с данными этапов.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from src.constants import (
    BIRTH_DEATH_CHECKPOINTS,
    SCALE_APPROACH_STEPS,
    SCALE_CONFLICT_TOL,
    SCALE_INFINITY_THRESHOLD,
    SERIES_GROWTH_RATIO,
    SERIES_SHRINK_RATIO,
    SPEC_SAMPLE_POINTS,
)
from src.errors import (
    AmbiguousTail,
    EvaluationFailure,
    FiniteSpeedMass,
    InvalidDiffusionSpec,
    NonpositiveAtom,
)
from src.features.quadrature import IntegralVerdict, finite, improper_integral
from src.modeling.rule_engine import RECURRENT, TRANSIENT, UNCLASSIFIED, BoundaryRuleEngine
from src.utils.expressions import Expression, parse_text

REFLECTING = "reflecting"
EXIT = "exit"
NON_APPROACHABLE = "non_approachable"

CLASS_RECURRENT = "Recurrent"
CLASS_DISSIPATIVE = "Dissipative"
CLASS_TRANSIENT_CONSERVATIVE = "TransientConservative"
CLASS_UNCLASSIFIED = "Unclassified"


def _format_point(x: float) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return f"{x:g}"


@dataclass(frozen=True)
class Interval:
    """Интервал с флагами включения концов и внутренней опорной точкой c."""

    name: str
    lower: float
    upper: float
    include_lower: bool
    include_upper: bool
    reference: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise InvalidDiffusionSpec(f"Интервал {self.name}: требуется lower < upper")
        if math.isinf(self.lower) and self.include_lower or math.isinf(self.upper) and self.include_upper:
            raise InvalidDiffusionSpec(f"Интервал {self.name}: бесконечный конец не может быть включен")
        if not self.lower < self.reference < self.upper:
            raise InvalidDiffusionSpec(f"Интервал {self.name}: опорная точка {self.reference:g} не внутренняя")

    def endpoint(self, which: str) -> float:
        return self.lower if which == "lower" else self.upper

    def includes(self, which: str) -> bool:
        return self.include_lower if which == "lower" else self.include_upper

    def contains(self, x: float) -> bool:
        above = x > self.lower or (x == self.lower and self.include_lower)
        below = x < self.upper or (x == self.upper and self.include_upper)
        return above and below

    def interior_samples(self, count: int = SPEC_SAMPLE_POINTS) -> np.ndarray:
        t = np.linspace(0.0, 1.0, count + 2)[1:-1]
        a, b = self.lower, self.upper
        if math.isinf(a) and math.isinf(b):
            return np.tan(np.pi * (t - 0.5))
        if math.isinf(b):
            return a + t / (1.0 - t)
        if math.isinf(a):
            return b - t[::-1] / (1.0 - t[::-1])
        return a + (b - a) * t

    def describe(self) -> str:
        left = "[" if self.include_lower else "("
        right = "]" if self.include_upper else ")"
        return f"{left}{_format_point(self.lower)}, {_format_point(self.upper)}{right}"


@dataclass(frozen=True, eq=False)
class DiffusionSpec:
    """
    Шкала, плотность меры скорости, атомы и интервалы.

    declared_limits: {(имя интервала, "lower"|"upper"): значение s на конце}.
    """

    name: str
    scale: Expression
    speed_density: Expression
    intervals: Tuple[Interval, ...]
    atoms: Tuple[Tuple[float, float], ...] = ()
    declared_limits: Dict[Tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.intervals:
            raise InvalidDiffusionSpec("Нужен хотя бы один интервал")
        names = [iv.name for iv in self.intervals]
        if len(set(names)) != len(names):
            raise InvalidDiffusionSpec(f"Повторяющиеся имена интервалов: {names}")
        ordered = sorted(self.intervals, key=lambda iv: iv.lower)
        for left, right in zip(ordered, ordered[1:]):
            touching = left.upper == right.lower and left.include_upper and right.include_lower
            if left.upper > right.lower or touching:
                raise InvalidDiffusionSpec(f"Интервалы {left.name} и {right.name} пересекаются")

        for interval in self.intervals:
            samples = interval.interior_samples()
            try:
                s_values = self.scale.evaluate(samples)
                density = self.speed_density.evaluate(samples)
            except EvaluationFailure as e:
                raise InvalidDiffusionSpec(f"Интервал {interval.name}: {e}") from e
            if not np.all(np.diff(s_values) > 0):
                raise InvalidDiffusionSpec(f"Шкала не возрастает строго на интервале {interval.name}")
            if np.any(density < 0):
                raise InvalidDiffusionSpec(f"Плотность меры скорости отрицательна на интервале {interval.name}")

        for position, mass in self.atoms:
            if not mass > 0:
                raise NonpositiveAtom(f"Атом в точке {position:g} имеет неположительную массу {mass:g}")
            if not any(iv.contains(position) for iv in self.intervals):
                raise InvalidDiffusionSpec(f"Атом в точке {position:g} вне интервалов")

        for (interval_name, which) in self.declared_limits:
            if interval_name not in names or which not in ("lower", "upper"):
                raise InvalidDiffusionSpec(f"Объявленный предел для неизвестного конца {interval_name}:{which}")

    def interval(self, name: str) -> Interval:
        for interval in self.intervals:
            if interval.name == name:
                return interval
        raise InvalidDiffusionSpec(f"Нет интервала {name}")

    def atom_mass(self, lo: float, hi: float) -> float:
        """Масса атомов строго внутри (lo, hi)."""
        return float(sum(mass for position, mass in self.atoms if lo < position < hi))


def _resolve_interval(spec: DiffusionSpec, interval) -> Interval:
    return interval if isinstance(interval, Interval) else spec.interval(str(interval))


def _approach_points(interval: Interval, which: str) -> np.ndarray:
    e, c = interval.endpoint(which), interval.reference
    steps = np.arange(1, SCALE_APPROACH_STEPS + 1, dtype=float)
    if math.isinf(e):
        return c + math.copysign(1.0, e) * 10.0 ** steps
    return e + (c - e) * 10.0 ** (-steps)


def extrapolate_limit(expression: Expression, interval: Interval, which: str) -> Optional[float]:
    """
    Численная экстраполяция предела вдоль геометрического подхода к концу.

    :return: Предел (возможно ±inf) или None, если поведение неясно
    """
    values = expression.evaluate(_approach_points(interval, which), strict=False)
    if np.any(np.isnan(values)):
        return None
    if np.isinf(values[-1]):
        return float(values[-1])
    tail = np.abs(values[-3:])
    if tail[-1] > SCALE_INFINITY_THRESHOLD and np.all(np.diff(tail) > 0):
        return math.copysign(math.inf, values[-1])
    increments = np.diff(values)
    a, b = abs(increments[-2]), abs(increments[-1])
    if b == 0.0:
        return float(values[-1])
    if a == 0.0 or b / a > SERIES_GROWTH_RATIO:
        return None
    q = increments[-1] / increments[-2]
    return float(values[-1] + increments[-1] * q / (1.0 - q))


@dataclass(frozen=True)
class ScaleLimit:
    value: float
    source: str
    diagnostics: Tuple[str, ...] = ()

    @property
    def label(self) -> str:
        if self.value == math.inf:
            return "PlusInfinity"
        if self.value == -math.inf:
            return "MinusInfinity"
        return f"Finite({self.value:g})"


def _limits_conflict(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a != b
    return abs(a - b) > SCALE_CONFLICT_TOL * max(1.0, abs(a))


def scale_limit(spec: DiffusionSpec, interval: Interval, which: str) -> ScaleLimit:
    """
    Предел s на конце интервала.

    Порядок: объявленное значение, точное значение в конечной точке,
    символический предел, численная экстраполяция.

    :raises AmbiguousTail: Если предел не удалось определить
    """
    point = interval.endpoint(which)
    direction = "+" if which == "lower" else "-"
    numeric = extrapolate_limit(spec.scale, interval, which)

    key = (interval.name, which)
    if key in spec.declared_limits:
        value, source = float(spec.declared_limits[key]), "declared"
    else:
        value = spec.scale.exact_value(point) if not math.isinf(point) else None
        source = "evaluated"
        if value is None:
            value, source = spec.scale.limit(point, direction), "symbolic"
        if value is None:
            value, source = numeric, "extrapolated"
        if value is None:
            stages = spec.scale.evaluate(_approach_points(interval, which), strict=False)
            raise AmbiguousTail(
                f"Предел шкалы на конце {interval.name}:{which} не определен", stages.tolist()
            )

    diagnostics = []
    if source != "extrapolated" and numeric is not None and _limits_conflict(value, numeric):
        message = (
            f"Конец {interval.name}:{which}: значение {_format_point(value)} ({source}) "
            f"расходится с экстраполяцией {_format_point(numeric)}"
        )
        print(f"⚠ {message}")
        diagnostics.append(message)
    return ScaleLimit(value, source, tuple(diagnostics))


def _density_integral(spec: DiffusionSpec, lo: float, hi: float) -> IntegralVerdict:
    verdict = improper_integral(lambda x: spec.speed_density.evaluate(x, strict=False), lo, hi)
    if not verdict.finite:
        return verdict
    return finite(verdict.value + spec.atom_mass(lo, hi), verdict.error, verdict.stage_values)


@dataclass(frozen=True)
class EndpointReport:
    """Классификация одного конца интервала."""

    interval: str
    which: str
    point: float
    s_limit: ScaleLimit
    approachable: bool
    m_near: IntegralVerdict
    regular: bool
    included: bool
    boundary_class: str

    def to_dict(self) -> dict:
        return {
            "interval": self.interval,
            "which": self.which,
            "point": _format_point(self.point),
            "s_limit": self.s_limit.label,
            "s_source": self.s_limit.source,
            "approachable": self.approachable,
            "m_near": self.m_near.to_dict() if self.m_near.finite else {"verdict": "Infinite"},
            "regular": self.regular,
            "included": self.included,
            "boundary_class": self.boundary_class,
            "diagnostics": list(self.s_limit.diagnostics),
        }


def endpoint_report(spec: DiffusionSpec, interval, which: str) -> EndpointReport:
    """
    Строит отчет по концу интервала.

    :param spec: Спецификация диффузии
    :param interval: Interval или его имя
    :param which: "lower" или "upper"
    :return: EndpointReport
    :raises AmbiguousTail: Если масса около конца или предел шкалы не решены
    """
    if which not in ("lower", "upper"):
        raise InvalidDiffusionSpec(f"Конец должен быть lower или upper, получено {which}")
    interval = _resolve_interval(spec, interval)
    point = interval.endpoint(which)
    limit = scale_limit(spec, interval, which)
    approachable = math.isfinite(limit.value)

    c = interval.reference
    lo, hi = (point, c) if which == "lower" else (c, point)
    m_near = _density_integral(spec, lo, hi)

    regular = approachable and m_near.finite
    included = interval.includes(which)
    if regular and included:
        boundary_class = REFLECTING
    elif approachable:
        boundary_class = EXIT
    else:
        boundary_class = NON_APPROACHABLE
    return EndpointReport(interval.name, which, point, limit, approachable, m_near, regular, included, boundary_class)


@dataclass(frozen=True)
class RecurrenceVerdict:
    label: str
    lower: Optional[EndpointReport]
    upper: Optional[EndpointReport]
    rule: Dict[str, str] = field(default_factory=dict)
    evidence: Tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "verdict": self.label,
            "rule": dict(self.rule),
            "lower": self.lower.to_dict() if self.lower else None,
            "upper": self.upper.to_dict() if self.upper else None,
            "evidence": list(self.evidence),
        }


def classify_recurrence(spec: DiffusionSpec, interval, rules: Optional[BoundaryRuleEngine] = None) -> RecurrenceVerdict:
    """
    Возвратность части формы на интервале по классам концов.

    :return: RecurrenceVerdict (Recurrent, Transient или Unclassified)
    """
    interval = _resolve_interval(spec, interval)
    engine = rules or BoundaryRuleEngine()
    try:
        lower = endpoint_report(spec, interval, "lower")
        upper = endpoint_report(spec, interval, "upper")
    except AmbiguousTail as e:
        print(f"⚠ Интервал {interval.name}: {e}")
        return RecurrenceVerdict(UNCLASSIFIED, None, None, {"reason": str(e)}, tuple(e.stage_values))
    rule = engine.match_pattern(lower.boundary_class, upper.boundary_class)
    return RecurrenceVerdict(rule["verdict"], lower, upper, rule)


def _mass_from_reference(spec: DiffusionSpec, c: float) -> Callable[[np.ndarray], np.ndarray]:
    """Функция x -> m((c,x)) при x > c и m((x,c)) при x < c."""
    antiderivative = spec.speed_density.antiderivative()
    positions = np.array(sorted(p for p, _ in spec.atoms), dtype=float)
    masses = np.array([m for _, m in sorted(spec.atoms)], dtype=float)

    def atoms_between(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if positions.size == 0:
            return np.zeros_like(x)
        lo, hi = np.minimum(x, c), np.maximum(x, c)
        inside = (positions[None, :] > lo[..., None]) & (positions[None, :] < hi[..., None])
        return (inside * masses).sum(axis=-1).reshape(np.shape(x))

    if antiderivative is not None:
        base = antiderivative.evaluate(c, strict=False)
        if np.isfinite(base):
            def mass(x):
                x = np.asarray(x, dtype=float)
                values = antiderivative.evaluate(x, strict=False)
                return np.sign(x - c) * (values - base) + atoms_between(x)

            return mass

    def mass_numeric(x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x)
        out = np.empty_like(flat)
        for i, point in enumerate(flat):
            if point == c:
                out[i] = 0.0
                continue
            lo, hi = min(point, c), max(point, c)
            try:
                verdict = improper_integral(lambda y: spec.speed_density.evaluate(y, strict=False), lo, hi)
                out[i] = verdict.value
            except (AmbiguousTail, EvaluationFailure):
                out[i] = math.nan
        return out.reshape(x.shape) + atoms_between(x)

    return mass_numeric


@dataclass(frozen=True)
class FellerVerdict:
    """Тест Феллера на взрыв: интегралы к обоим концам и флаги взрывных концов."""

    conservative: Optional[bool]
    lower: Optional[IntegralVerdict]
    upper: Optional[IntegralVerdict]
    explosive: Tuple[str, ...] = ()
    reflecting: Tuple[str, ...] = ()
    evidence: Dict[str, List[float]] = field(default_factory=dict)

    @property
    def label(self) -> str:
        if self.conservative is None:
            return "Withheld"
        return "Conservative" if self.conservative else "NonConservative"

    def to_dict(self) -> dict:
        return {
            "verdict": self.label,
            "lower": self.lower.to_dict() if self.lower else None,
            "upper": self.upper.to_dict() if self.upper else None,
            "explosive": list(self.explosive),
            "reflecting": list(self.reflecting),
            "evidence": {k: list(v) for k, v in self.evidence.items()},
        }


def feller_explosion_test(spec: DiffusionSpec, interval) -> FellerVerdict:
    """
    Тест Феллера: ∫_c^b m((c,x)) ds(x) и ∫_a^c m((x,c)) ds(x).

    Конечный интеграл на неотражающем конце делает его взрывным, и форма
    не консервативна. Отражающие концы не взрывные.

    :return: FellerVerdict (conservative=None, если какой-то интеграл неоднозначен)
    """
    interval = _resolve_interval(spec, interval)
    c = interval.reference
    mass = _mass_from_reference(spec, c)
    ds = spec.scale.derivative()

    def integrand(x):
        with np.errstate(all="ignore"):
            return mass(x) * ds.evaluate(x, strict=False)

    verdicts: Dict[str, Optional[IntegralVerdict]] = {}
    evidence: Dict[str, List[float]] = {}
    explosive, reflecting = [], []
    withheld = False
    for which in ("lower", "upper"):
        point = interval.endpoint(which)
        lo, hi = (point, c) if which == "lower" else (c, point)
        try:
            verdicts[which] = improper_integral(integrand, lo, hi)
        except AmbiguousTail as e:
            verdicts[which] = None
            evidence[which] = list(e.stage_values)

        try:
            is_reflecting = endpoint_report(spec, interval, which).boundary_class == REFLECTING
        except AmbiguousTail:
            is_reflecting = False
        if is_reflecting:
            reflecting.append(which)
            continue
        if verdicts[which] is None:
            withheld = True
        elif verdicts[which].finite:
            explosive.append(which)

    if explosive:
        conservative = False
    elif withheld:
        conservative = None
    else:
        conservative = True
    return FellerVerdict(conservative, verdicts["lower"], verdicts["upper"], tuple(explosive), tuple(reflecting), evidence)


@dataclass(frozen=True)
class IntervalClassification:
    interval: Interval
    recurrence: RecurrenceVerdict
    feller: FellerVerdict
    label: str
    consistent: bool

    def to_dict(self) -> dict:
        return {
            "interval": self.interval.name,
            "range": self.interval.describe(),
            "class": self.label,
            "recurrence": self.recurrence.to_dict(),
            "feller": self.feller.to_dict(),
            "consistent": self.consistent,
        }


def classify_interval(spec: DiffusionSpec, interval, rules: Optional[BoundaryRuleEngine] = None) -> IntervalClassification:
    """
    Возвратность и консервативность части формы на интервале.

    Возвратная форма консервативна, диссипативная транзиентна; нарушение
    отмечается consistent=False.
    """
    interval = _resolve_interval(spec, interval)
    recurrence = classify_recurrence(spec, interval, rules)
    feller = feller_explosion_test(spec, interval)

    consistent = True
    if recurrence.label == RECURRENT and feller.conservative is False:
        consistent = False
    if recurrence.label == RECURRENT:
        label = CLASS_RECURRENT
    elif feller.conservative is False:
        label = CLASS_DISSIPATIVE
    elif recurrence.label == TRANSIENT and feller.conservative:
        label = CLASS_TRANSIENT_CONSERVATIVE
    else:
        label = CLASS_UNCLASSIFIED
    if not consistent:
        print(f"❌ Интервал {interval.name}: возвратная часть не прошла тест Феллера")
    return IntervalClassification(interval, recurrence, feller, label, consistent)


@dataclass(frozen=True)
class DiffusionReport:
    """Разбиение интервалов по частям rec/trans/cons/diss."""

    name: str
    intervals: Tuple[IntervalClassification, ...]
    rec: Tuple[str, ...]
    trans: Tuple[str, ...]
    cons: Tuple[str, ...]
    diss: Tuple[str, ...]
    checks: Dict[str, bool] = field(default_factory=dict)
    exact: Dict[str, str] = field(default_factory=dict)
    diagnostics: Tuple[str, ...] = ()

    def classification(self, name: str) -> IntervalClassification:
        for item in self.intervals:
            if item.interval.name == name:
                return item
        raise InvalidDiffusionSpec(f"Нет интервала {name}")

    @property
    def unclassified(self) -> Tuple[str, ...]:
        return tuple(item.interval.name for item in self.intervals if item.label == CLASS_UNCLASSIFIED)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "intervals": [item.to_dict() for item in self.intervals],
            "rec": list(self.rec),
            "trans": list(self.trans),
            "cons": list(self.cons),
            "diss": list(self.diss),
            "checks": dict(self.checks),
            "exact": dict(self.exact),
            "diagnostics": list(self.diagnostics),
        }


def classify_diffusion(spec: DiffusionSpec, rules_path: Optional[str] = None) -> DiffusionReport:
    """
    Классифицирует все интервалы спецификации.

    :param spec: Спецификация
    :param rules_path: JSON с переопределением таблицы граничных правил
    :return: DiffusionReport
    """
    engine = BoundaryRuleEngine(rules_path)
    items = tuple(classify_interval(spec, interval, engine) for interval in spec.intervals)

    rec = tuple(i.interval.name for i in items if i.label == CLASS_RECURRENT)
    trans = tuple(i.interval.name for i in items if i.label in (CLASS_DISSIPATIVE, CLASS_TRANSIENT_CONSERVATIVE))
    cons = tuple(i.interval.name for i in items if i.feller.conservative)
    diss = tuple(i.interval.name for i in items if i.feller.conservative is False)

    diagnostics = []
    for item in items:
        for report in (item.recurrence.lower, item.recurrence.upper):
            if report is not None:
                diagnostics.extend(report.s_limit.diagnostics)
        if item.label == CLASS_UNCLASSIFIED:
            diagnostics.append(f"Интервал {item.interval.name} не классифицирован")

    whole_conservative = len(cons) == len(items)
    checks = {
        "recurrent_implies_conservative": all(i.consistent for i in items),
        "dissipative_implies_transient": all(name in trans for name in diss),
        # при консервативной форме транзиентная часть тоже консервативна
        "transient_part_conservative": (not whole_conservative) or all(name in cons for name in trans),
    }
    return DiffusionReport(spec.name, items, rec, trans, cons, diss, checks, {}, tuple(diagnostics))


def exact_mass(spec: DiffusionSpec, interval) -> sympy.Expr:
    """Точная масса интервала sympy-интегралом плотности (плюс атомы)."""
    interval = _resolve_interval(spec, interval)
    symbol = spec.speed_density.symbol
    lo = -sympy.oo if interval.lower == -math.inf else sympy.nsimplify(interval.lower)
    hi = sympy.oo if interval.upper == math.inf else sympy.nsimplify(interval.upper)
    total = sympy.integrate(spec.speed_density.expr, (symbol, lo, hi))
    for position, mass in spec.atoms:
        if interval.contains(position):
            total += sympy.nsimplify(mass)
    return sympy.simplify(total)


# ---------------------------------------------------------------------------
# Цепи рождения–гибели
# ---------------------------------------------------------------------------

POWER = "power"
CUSTOM = "custom"
DEFAULT_CONDUCTANCE = "k*(k+1)"


@dataclass(frozen=True, eq=False)
class BirthDeathSpec:
    """
    Цепь на {start, start+1, ...} с проводимостями k(k+1) и атомами a_k.

    family=power: a_k = coefficient·k^p (точное правило);
    family=custom: a_k задано выражением от k, бесконечность Σ a_k можно объявить.
    """

    atoms: Expression
    family: str = CUSTOM
    power: Optional[float] = None
    coefficient: float = 1.0
    start: int = 2
    conductance: str = DEFAULT_CONDUCTANCE
    mass_infinite: Optional[bool] = None

    def __post_init__(self):
        if self.family not in (POWER, CUSTOM):
            raise InvalidDiffusionSpec(f"Неизвестное семейство атомов: {self.family}")
        if self.family == POWER and (self.power is None or not self.coefficient > 0):
            raise NonpositiveAtom("Степенное семейство требует p и коэффициент > 0")
        if self.start < 1:
            raise InvalidDiffusionSpec("Начальный индекс цепи должен быть ≥ 1")
        k = sympy.Symbol("k", real=True)
        expected = k * (k + 1)
        if sympy.simplify(parse_text(self.conductance, "k") - expected) != 0:
            raise InvalidDiffusionSpec(f"Поддерживаются только проводимости {DEFAULT_CONDUCTANCE}")
        values = self.atoms.evaluate(self.indices())
        if np.any(values <= 0):
            bad = int(self.indices()[np.argmax(values <= 0)])
            raise NonpositiveAtom(f"a_{bad} = {float(values[np.argmax(values <= 0)]):g} ≤ 0")

    def indices(self, last: Optional[int] = None) -> np.ndarray:
        return np.arange(self.start, (last or max(BIRTH_DEATH_CHECKPOINTS)) + 1, dtype=float)

    def describe(self) -> str:
        if self.family == POWER:
            return f"a_k = {self.coefficient:g}·k^{self.power:g}"
        return f"a_k = {self.atoms.text}"


def power_atoms(p: float, coefficient: float = 1.0, start: int = 2) -> BirthDeathSpec:
    expression = Expression(f"{float(coefficient)!r}*k**({float(p)!r})", variable="k")
    return BirthDeathSpec(expression, POWER, float(p), float(coefficient), start)


def custom_atoms(text: str, start: int = 2, mass_infinite: Optional[bool] = None) -> BirthDeathSpec:
    return BirthDeathSpec(Expression(text, variable="k"), CUSTOM, start=start, mass_infinite=mass_infinite)


def parse_atom_spec(text: str) -> BirthDeathSpec:
    """
    Разбирает "power:p", "power:p:C" или выражение от k.

    :raises InvalidDiffusionSpec: Некорректная запись степенного семейства
    """
    text = text.strip()
    if text.startswith(POWER + ":"):
        parts = text.split(":")[1:]
        try:
            p = float(parts[0])
            coefficient = float(parts[1]) if len(parts) > 1 else 1.0
        except (IndexError, ValueError) as e:
            raise InvalidDiffusionSpec(f"Некорректное степенное семейство '{text}'") from e
        return power_atoms(p, coefficient)
    return custom_atoms(text)


@dataclass(frozen=True)
class SeriesVerdict:
    """Эвристика несобственного ряда по частичным суммам."""

    label: str
    partial_sums: Dict[int, float]
    ratios: Tuple[float, ...]

    @property
    def divergent(self) -> Optional[bool]:
        return {"Divergent": True, "Convergent": False}.get(self.label)


def series_heuristic(terms: np.ndarray, start: int, checkpoints: Sequence[int] = BIRTH_DEATH_CHECKPOINTS) -> SeriesVerdict:
    """
    Частичные суммы Σ_{k=start}^N terms в контрольных точках N.

    Приращения между точками не убывают (отношение ≥ SERIES_GROWTH_RATIO) —
    Divergent; убывают геометрически (≤ SERIES_SHRINK_RATIO) — Convergent;
    иначе Undecided.
    """
    cumulative = np.cumsum(terms)
    sums = {int(n): float(cumulative[int(n) - start]) for n in checkpoints}
    values = [sums[int(n)] for n in checkpoints]
    increments = np.diff(values)
    ratios = tuple(float(b / a) if a > 0 else math.inf for a, b in zip(increments, increments[1:]))
    if ratios and all(r >= SERIES_GROWTH_RATIO for r in ratios):
        label = "Divergent"
    elif ratios and all(r <= SERIES_SHRINK_RATIO for r in ratios):
        label = "Convergent"
    else:
        label = "Undecided"
    return SeriesVerdict(label, sums, ratios)


@dataclass(frozen=True)
class BirthDeathVerdict:
    conservative: Optional[bool]
    rule: str
    criterion: SeriesVerdict
    mass: SeriesVerdict
    infinite_mass: Optional[bool]
    diagnostics: Tuple[str, ...] = ()

    @property
    def label(self) -> str:
        if self.conservative is None:
            return "Undecided"
        return "Conservative" if self.conservative else "Dissipative"

    @property
    def partial_sums(self) -> Dict[int, float]:
        return self.criterion.partial_sums

    def to_dict(self) -> dict:
        return {
            "verdict": self.label,
            "rule": self.rule,
            "partial_sums": {str(k): v for k, v in self.criterion.partial_sums.items()},
            "ratios": list(self.criterion.ratios),
            "mass_partial_sums": {str(k): v for k, v in self.mass.partial_sums.items()},
            "infinite_mass": self.infinite_mass,
            "diagnostics": list(self.diagnostics),
        }


def birth_death_conservative(spec: BirthDeathSpec) -> BirthDeathVerdict:
    """
    Консервативность цепи: Σ a_k / k = ∞.

    Для степенного семейства a_k = C·k^p решение точное (p ≥ 0), для
    прочих — по частичным суммам.

    :return: BirthDeathVerdict
    """
    k = spec.indices()
    atoms = spec.atoms.evaluate(k)
    criterion = series_heuristic(atoms / k, spec.start)
    mass = series_heuristic(atoms, spec.start)
    diagnostics = []

    if spec.family == POWER:
        conservative = spec.power >= 0
        infinite_mass = spec.power >= -1
        rule = POWER
        if criterion.divergent is not None and criterion.divergent != conservative:
            diagnostics.append(f"Частичные суммы ({criterion.label}) расходятся с точным правилом")
    else:
        conservative = criterion.divergent
        rule = "partial-sums"
        infinite_mass = spec.mass_infinite if spec.mass_infinite is not None else mass.divergent
        if spec.mass_infinite is True and mass.divergent is False:
            diagnostics.append("Объявленная бесконечная масса противоречит частичным суммам Σ a_k")
    for message in diagnostics:
        print(f"⚠ {message}")
    return BirthDeathVerdict(conservative, rule, criterion, mass, infinite_mass, tuple(diagnostics))


# ---------------------------------------------------------------------------
# Готовые примеры
# ---------------------------------------------------------------------------

def example_5_1_spec() -> DiffusionSpec:
    """Два интервала [−2,−1] и [0,∞), dm = 2x² dx, s(x) = −1/x."""
    return DiffusionSpec(
        name="two-intervals",
        scale=Expression("-1/x"),
        speed_density=Expression("2*x**2"),
        intervals=(
            Interval("I1", -2.0, -1.0, True, True, -1.5),
            Interval("I2", 0.0, math.inf, True, False, 1.0),
        ),
    )


def example_5_1() -> DiffusionReport:
    """
    Диффузия на двух интервалах: I1 возвратна, I2 транзиентна и
    консервативна, вся форма консервативна.
    """
    spec = example_5_1_spec()
    report = classify_diffusion(spec)
    s_lower = spec.scale.exact_value(-2.0)
    s_upper = spec.scale.exact_value(-1.0)
    mass_i1 = exact_mass(spec, "I1")
    exact = {"s(-2)": repr(s_lower), "s(-1)": repr(s_upper), "m(I1)": str(mass_i1)}
    checks = dict(report.checks)
    checks["whole_space_conservative"] = set(report.cons) == {"I1", "I2"}
    checks["endpoint_values_exact"] = s_lower == 0.5 and s_upper == 1.0
    checks["mass_I1_exact"] = mass_i1 == sympy.Rational(14, 3)
    return DiffusionReport(
        report.name, report.intervals, report.rec, report.trans, report.cons, report.diss,
        checks, exact, report.diagnostics,
    )


def example_5_2_spec() -> DiffusionSpec:
    """
    Непрерывная часть следа: I = [0,1) с плотностью x² и той же шкалой.

    Конец 1 не включен: через него процесс уходит в дискретную часть,
    поэтому он выходной.
    """
    return DiffusionSpec(
        name="trace-interval",
        scale=Expression("-1/x"),
        speed_density=Expression("x**2"),
        intervals=(Interval("I", 0.0, 1.0, True, False, 0.5),),
    )


@dataclass(frozen=True)
class TraceExampleReport:
    """Интервал I плюс цепь J; вся форма транзиентна по условию."""

    interval: IntervalClassification
    chain: BirthDeathVerdict
    atoms: str
    whole_transient: bool
    rec: Tuple[str, ...]
    trans: Tuple[str, ...]
    cons: Tuple[str, ...]
    diss: Tuple[str, ...]
    checks: Dict[str, bool] = field(default_factory=dict)
    diagnostics: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "atoms": self.atoms,
            "whole_transient": self.whole_transient,
            "whole_transient_source": "assumed",
            "interval": self.interval.to_dict(),
            "chain": self.chain.to_dict(),
            "rec": list(self.rec),
            "trans": list(self.trans),
            "cons": list(self.cons),
            "diss": list(self.diss),
            "checks": dict(self.checks),
            "diagnostics": list(self.diagnostics),
        }


def example_5_2(atoms="power:0") -> TraceExampleReport:
    """
    След транзиентной формы на [0,1] ∪ {2, 3, ...}.

    :param atoms: BirthDeathSpec или строка для parse_atom_spec
    :return: TraceExampleReport
    :raises FiniteSpeedMass: Если Σ a_k конечна
    """
    chain_spec = atoms if isinstance(atoms, BirthDeathSpec) else parse_atom_spec(str(atoms))
    interval = classify_interval(example_5_2_spec(), "I")
    chain = birth_death_conservative(chain_spec)
    if chain.infinite_mass is False:
        raise FiniteSpeedMass(f"Масса Σ a_k конечна для {chain_spec.describe()}, пример требует бесконечной")

    diagnostics = list(chain.diagnostics)
    cons, diss = [], []
    for name, conservative in (("I", interval.feller.conservative), ("J", chain.conservative)):
        if conservative is True:
            cons.append(name)
        elif conservative is False:
            diss.append(name)
        else:
            diagnostics.append(f"Консервативность {name} не решена")
    checks = {
        "interval_dissipative": interval.label == CLASS_DISSIPATIVE,
        "recurrent_implies_conservative": interval.consistent,
    }
    return TraceExampleReport(
        interval, chain, chain_spec.describe(), True, (), ("I", "J"), tuple(cons), tuple(diss), checks, tuple(diagnostics)
    )
