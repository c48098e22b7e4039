"""
Оператор Грина, классификация пространства состояний и разложения форм.

X_rec — где Kρ = ∞, X_cons — где T_t 1 = 1. На конечном пространстве каждая
компонента связности либо рекуррентна (без убивания), либо диссипативна
(с убиванием), а X_tc пусто; это проверяется, а не предполагается.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
import scipy.linalg

from src.constants import (
    CONSERVATIVE_TIMES,
    CONSERVATIVE_TOL,
    DISSIPATIVE_PROBE_TIME,
    GREEN_CHECKPOINTS,
    GREEN_DIVERGENCE_SCALE,
    GREEN_GROWTH_FACTOR,
    GREEN_ORACLE_TOL,
    TOL_SPECTRAL,
)
from src.errors import (
    DimensionMismatch,
    NegativeInput,
    NonpositiveRho,
    NotExcessive,
    NotInvariant,
    Reducible,
)
from src.features.forms import (
    FiniteDirichletForm,
    as_vector,
    exact_energy,
    is_excessive,
    semigroup_apply,
    spectral_apply,
    zero_form,
)
from src.features.invariance import (
    InvariantPartition,
    PartForm,
    as_subset,
    detect_invariant_sets,
    indicator,
    is_invariant,
    part_form,
    restrict_form,
)


class ComponentClass(str, Enum):
    RECURRENT = "Recurrent"
    DISSIPATIVE = "Dissipative"
    TRANSIENT_CONSERVATIVE = "TransientConservative"


@dataclass(frozen=True)
class GreenResult:
    """
    Результат green_apply.

    values — Kf с np.inf там, где вердикт Infinite; partial_sums[j] = S_{n_j} f,
    resolvent_sums[j] = K_{1/n_j} f; closed_form — решение L_CC g = m_C f_C на
    компонентах с убиванием (nan на остальных).
    """

    values: np.ndarray
    finite: np.ndarray
    checkpoints: Tuple[float, ...]
    partial_sums: np.ndarray
    resolvent_sums: np.ndarray
    closed_form: np.ndarray
    components: Tuple[Tuple[int, ...], ...]
    component_finite: Tuple[bool, ...]
    diagnostics: Tuple[str, ...] = ()

    def verdict(self, vertex: int) -> str:
        if self.finite[vertex]:
            return f"Finite({self.values[vertex]:.12g})"
        return "Infinite"

    def resolvent_gap(self) -> float:
        """max |S_n f − K_{1/n} f| в последней контрольной точке на конечных вершинах."""
        finite = np.flatnonzero(self.finite)
        if finite.size == 0:
            return 0.0
        return float(np.max(np.abs(self.partial_sums[-1, finite] - self.resolvent_sums[-1, finite])))


def _green_symbol(n: float):
    def g(lam: np.ndarray) -> np.ndarray:
        # (1 − e^{−nλ})/λ, продолженное значением n в λ = 0
        safe = np.where(lam > 0, lam, 1.0)
        return np.where(lam > 0, -np.expm1(-n * safe) / safe, n)
    return g


def _killed_components(form: FiniteDirichletForm, partition: InvariantPartition) -> List[bool]:
    return [bool(np.any(form.killing[list(c)] > 0)) for c in partition.components]


def green_apply(
    form: FiniteDirichletForm,
    f,
    schedule: Sequence[float] = GREEN_CHECKPOINTS,
) -> GreenResult:
    """
    Оператор Грина Kf = lim S_n f, S_n f = ∫_0^n T_s f ds.

    Компонента без убивания с f|_C ≠ 0 дает Infinite; рост контрольных точек
    (хотя бы в GREEN_GROWTH_FACTOR раз и выше GREEN_DIVERGENCE_SCALE·max f|_C)
    служит сверкой. На компонентах с убиванием значение берется из замкнутой
    формы и сверяется с последней контрольной точкой.

    :param form: Форма
    :param f: Неотрицательная функция
    :param schedule: Возрастающие контрольные точки n
    :return: GreenResult
    :raises NegativeInput: Если f имеет отрицательные компоненты
    """
    f = as_vector(form, f)
    if np.any(f < 0):
        raise NegativeInput("Оператор Грина применяется только к f ≥ 0")
    checkpoints = tuple(float(n) for n in schedule)
    if len(checkpoints) < 2 or any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("Нужны хотя бы две строго возрастающие контрольные точки")

    partition = detect_invariant_sets(form)
    killed = _killed_components(form, partition)

    partial_sums = np.zeros((len(checkpoints), form.n))
    resolvent_sums = np.zeros((len(checkpoints), form.n))
    values = np.zeros(form.n)
    closed_form = np.full(form.n, np.nan)
    component_finite = []
    diagnostics: List[str] = []
    for index, component in enumerate(partition.components):
        idx = list(component)
        # компонента инвариантна: считаем на ее части, без смешивания с другими
        sub = form if len(idx) == form.n else restrict_form(form, component)
        f_sub = f[idx]
        f_scale = float(np.max(f_sub, initial=0.0))
        for j, n in enumerate(checkpoints):
            partial_sums[j, idx] = spectral_apply(sub, _green_symbol(n), f_sub)
            resolvent_sums[j, idx] = spectral_apply(sub, lambda lam, n=n: 1.0 / (1.0 / n + lam), f_sub)

        last = float(np.max(partial_sums[-1, idx]))
        previous = float(np.max(partial_sums[-2, idx]))
        growing = (
            last > GREEN_DIVERGENCE_SCALE * f_scale
            and last >= GREEN_GROWTH_FACTOR * previous
            and last > 0
        )
        if killed[index]:
            solution = scipy.linalg.solve(sub.laplacian(), sub.measure * f_sub, assume_a="pos")
            closed_form[idx] = solution
            values[idx] = solution
            component_finite.append(True)
            gap = float(np.max(np.abs(partial_sums[-1, idx] - solution)))
            if growing or gap > GREEN_ORACLE_TOL * max(1.0, float(np.max(np.abs(solution)))):
                diagnostics.append(
                    f"компонента {index}: контрольные точки S_n f не сходятся к замкнутой форме (разность {gap:.3e})"
                )
        elif f_scale > 0:
            # без убивания S_n f растет линейно по n
            values[idx] = np.inf
            component_finite.append(False)
            if not growing:
                diagnostics.append(f"компонента {index}: S_n f не показывает линейного роста")
        else:
            values[idx] = partial_sums[-1, idx]
            component_finite.append(True)

    for message in diagnostics:
        print(f"⚠ {message}")
    return GreenResult(
        values=values,
        finite=np.isfinite(values),
        checkpoints=checkpoints,
        partial_sums=partial_sums,
        resolvent_sums=resolvent_sums,
        closed_form=closed_form,
        components=partition.components,
        component_finite=tuple(component_finite),
        diagnostics=tuple(diagnostics),
    )


def green_potential(form: FiniteDirichletForm, f) -> np.ndarray:
    """Kf (np.inf там, где Kf бесконечно)."""
    return green_apply(form, f).values


@dataclass(frozen=True)
class ClassificationReport:
    """Разбиение X на X_rec, X_diss, X_tc с доказательствами."""

    x_rec: Tuple[int, ...]
    x_trans: Tuple[int, ...]
    x_cons: Tuple[int, ...]
    x_diss: Tuple[int, ...]
    x_tc: Tuple[int, ...]
    components: Tuple[Tuple[int, ...], ...]
    classes: Tuple[ComponentClass, ...]
    green: GreenResult
    semigroup_on_one: Dict[float, Tuple[float, ...]]
    diagnostics: Tuple[str, ...] = ()
    checks: Dict[str, bool] = field(default_factory=dict)

    def class_of(self, vertex: int) -> ComponentClass:
        for component, cls in zip(self.components, self.classes):
            if vertex in component:
                return cls
        raise IndexError(vertex)

    def sets(self) -> Dict[str, List[int]]:
        return {
            "X_rec": list(self.x_rec),
            "X_trans": list(self.x_trans),
            "X_cons": list(self.x_cons),
            "X_diss": list(self.x_diss),
            "X_tc": list(self.x_tc),
        }


def _default_rho(form: FiniteDirichletForm) -> np.ndarray:
    return np.full(form.n, 1.0 / float(form.measure.sum())) if form.n else np.zeros(0)


def _check_rho(form: FiniteDirichletForm, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 1 or rho.shape[0] != form.n:
        raise DimensionMismatch(f"Плотность ρ должна иметь длину {form.n}")
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
        raise NonpositiveRho("Плотность ρ должна быть строго положительной и конечной")
    return rho


def classify(form: FiniteDirichletForm, rho=None) -> ClassificationReport:
    """
    Классифицирует вершины формы.

    X_rec — из вердиктов Грина для ρ, X_cons — структурно (компоненты без
    убивания) с численной сверкой по T_t 1 при t ∈ CONSERVATIVE_TIMES.

    :param form: Форма
    :param rho: Строго положительная плотность (по умолчанию 1/Σm)
    :return: ClassificationReport
    :raises NonpositiveRho: Если ρ не строго положительна
    """
    rho = _default_rho(form) if rho is None else _check_rho(form, rho)
    green = green_apply(form, rho)
    partition = InvariantPartition(green.components)
    killed = _killed_components(form, partition)
    diagnostics = list(green.diagnostics)

    everything = tuple(range(form.n))
    x_rec = tuple(i for i in everything if not green.finite[i])
    x_cons = partition.union(k for k, is_killed in enumerate(killed) if not is_killed)
    x_trans = tuple(i for i in everything if i not in set(x_rec))
    x_diss = tuple(i for i in everything if i not in set(x_cons))
    x_tc = tuple(i for i in x_trans if i not in set(x_diss))

    ones = np.ones(form.n)
    semigroup_on_one = {t: tuple(semigroup_apply(form, t, ones).values.tolist()) for t in CONSERVATIVE_TIMES}
    if x_cons:
        drift = max(float(np.max(np.abs(np.asarray(v)[list(x_cons)] - 1.0))) for v in semigroup_on_one.values())
        if drift > CONSERVATIVE_TOL:
            diagnostics.append(f"X_cons: |T_t 1 − 1| = {drift:.3e} превышает {CONSERVATIVE_TOL:.0e}")
    if x_diss:
        leak = 1.0 - semigroup_apply(form, DISSIPATIVE_PROBE_TIME, ones).values[list(x_diss)]
        if float(np.min(leak)) <= 0:
            diagnostics.append("X_diss: найдена вершина с T_1 1 = 1 при структурном убивании")

    classes = []
    rec_set, diss_set = set(x_rec), set(x_diss)
    for component in partition.components:
        if all(i in rec_set for i in component):
            classes.append(ComponentClass.RECURRENT)
        elif all(i in diss_set for i in component):
            classes.append(ComponentClass.DISSIPATIVE)
        else:
            classes.append(ComponentClass.TRANSIENT_CONSERVATIVE)
    if not set(x_rec) <= set(x_cons):
        diagnostics.append("нарушено включение X_rec ⊆ X_cons")
    if x_tc:
        diagnostics.append(f"X_tc непусто на конечном пространстве: {list(x_tc)}")

    for message in diagnostics[len(green.diagnostics):]:
        print(f"⚠ {message}")
    return ClassificationReport(
        x_rec=x_rec,
        x_trans=x_trans,
        x_cons=x_cons,
        x_diss=x_diss,
        x_tc=x_tc,
        components=partition.components,
        classes=tuple(classes),
        green=green,
        semigroup_on_one=semigroup_on_one,
        diagnostics=tuple(diagnostics),
    )


class Decomposition(NamedTuple):
    rec: PartForm
    diss: PartForm
    tc: PartForm
    report: ClassificationReport


def _part_or_empty(form: FiniteDirichletForm, subset: Tuple[int, ...]) -> PartForm:
    if not subset:
        return PartForm(form, (), zero_form(0))
    return part_form(form, subset)


def decompose(form: FiniteDirichletForm) -> Decomposition:
    """
    Разложение E = E^rec + E^diss + E^tc по X_rec, X_diss, X_tc.

    Каждая непустая часть переклассифицируется на своем множестве; итог
    записывается в report.checks.
    """
    report = classify(form)
    rec = _part_or_empty(form, report.x_rec)
    diss = _part_or_empty(form, report.x_diss)
    tc = _part_or_empty(form, report.x_tc)

    checks = {"partition": sorted(rec.subset + diss.subset + tc.subset) == list(range(form.n))}
    expected = {
        "rec": ComponentClass.RECURRENT,
        "diss": ComponentClass.DISSIPATIVE,
        "tc": ComponentClass.TRANSIENT_CONSERVATIVE,
    }
    for name, part in (("rec", rec), ("diss", diss), ("tc", tc)):
        if part.is_empty:
            checks[name] = True
            continue
        sub_report = classify(part.form)
        checks[name] = all(cls == expected[name] for cls in sub_report.classes)
    return Decomposition(rec, diss, tc, replace(report, checks=checks))


def decomposition_residual(decomposition: Decomposition, u) -> float:
    """
    E[u] − (E^rec[u|rec] + E^diss[u|diss] + E^tc[u|tc]) в точной арифметике.

    Слагаемые энергии частей — это в точности слагаемые энергии родителя,
    поэтому остаток равен нулю.
    """
    parent = decomposition.rec.parent
    u = as_vector(parent, u)
    total = exact_energy(parent, u)
    parts = Fraction(0)
    for part in (decomposition.rec, decomposition.diss, decomposition.tc):
        if not part.is_empty:
            parts += exact_energy(part.form, part.restrict(u))
    return float(total - parts)


def maximality_check(form: FiniteDirichletForm, subset) -> bool:
    """
    Проверяет максимальность: часть на Y транзиентна ⇒ Y ⊆ X_trans,
    часть рекуррентна ⇒ Y ⊆ X_rec. Иначе (или при пустом Y) — истина.

    :raises NotInvariant: Если Y не инвариантно
    """
    Y = as_subset(form, subset)
    if not is_invariant(form, Y):
        raise NotInvariant("Проверка максимальности требует инвариантного множества")
    if not Y:
        return True
    part = part_form(form, Y)
    part_report = classify(part.form)
    report = classify(form)
    n_part = part.form.n
    if len(part_report.x_rec) == n_part:
        return set(Y) <= set(report.x_rec)
    if not part_report.x_rec:
        return set(Y) <= set(report.x_trans)
    return True


def irreducible_trichotomy(form: FiniteDirichletForm) -> ComponentClass:
    """
    Класс неприводимой (связной) формы.

    :raises Reducible: Если у формы не одна компонента связности
    """
    partition = detect_invariant_sets(form)
    if len(partition.components) != 1:
        raise Reducible(f"Форма приводима: {len(partition.components)} компонент связности")
    report = classify(form)
    label = report.classes[0]
    if label == ComponentClass.TRANSIENT_CONSERVATIVE:
        print("⚠ Транзиентно-консервативная связная форма на конечном пространстве")
    return label


def excessive_initial_data(form: FiniteDirichletForm, f=None) -> np.ndarray:
    """
    Эксцессивная функция: 1 на X_cons и потенциал Грина Kf на X_diss.

    :param f: Неотрицательная функция (по умолчанию 1)
    """
    f = np.ones(form.n) if f is None else as_vector(form, f)
    report = classify(form)
    u = np.zeros(form.n)
    if report.x_cons:
        u[list(report.x_cons)] = 1.0
    if report.x_diss:
        diss = list(report.x_diss)
        u[diss] = green_potential(form, f)[diss]
    return u


class ExcessiveCheck(NamedTuple):
    times: Tuple[float, ...]
    residuals: Tuple[float, ...]
    lower_bound_gap: float
    passed: bool


def excessive_decomposition_check(form: FiniteDirichletForm, u, t_grid: Sequence[float]) -> ExcessiveCheck:
    """
    Для эксцессивной u проверяет T_t u = 1_{X_cons}u + 1_{X_diss}T_t u и
    T_t u ≥ 1_{X_cons}u на наибольшем времени сетки.

    :raises NotExcessive: Если u не эксцессивна на сетке
    """
    u = as_vector(form, u)
    if not is_excessive(form, u, t_grid):
        raise NotExcessive("Функция не эксцессивна на заданной сетке времени")
    report = classify(form)
    cons = indicator(form.n, report.x_cons)
    diss = indicator(form.n, report.x_diss)

    times = tuple(float(t) for t in t_grid)
    residuals = []
    evolved = None
    for t in times:
        evolved = semigroup_apply(form, t, u).values
        predicted = cons * u + diss * evolved
        residuals.append(float(np.max(np.abs(evolved - predicted), initial=0.0)))
    lower_gap = float(np.min(evolved - cons * u, initial=0.0)) if evolved is not None else 0.0
    passed = max(residuals, default=0.0) <= TOL_SPECTRAL and lower_gap >= -TOL_SPECTRAL
    return ExcessiveCheck(times, tuple(residuals), lower_gap, passed)
