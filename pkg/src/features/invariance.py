"""
Инвариантные множества, части и следы форм.

Множество Y инвариантно, если T_t(1_Y u) = 1_Y T_t u. Для конечных
симметричных форм это равносильно отсутствию ребер между Y и дополнением;
структурный критерий решает, численный коммутатор служит перекрестной
проверкой.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from src.constants import (
    INVARIANCE_BETA,
    INVARIANCE_TIMES,
    INVARIANCE_TOL,
    TOL_ALGEBRAIC,
    TRACE_LAMBDAS,
    TRACE_STABILIZATION_TOL,
)
from src.errors import EmptySubset, IndexOutOfRange, NonStabilizingLimit, NotInvariant
from src.features.forms import FiniteDirichletForm, SpectralFunction, as_vector, build_form, zero_form
from src.features.graph_builder import connected_components, cross_edges


def as_subset(form: FiniteDirichletForm, subset: Optional[Iterable[int]]) -> Tuple[int, ...]:
    """Нормализует множество вершин: уникальные индексы по возрастанию."""
    indices = sorted(set(int(i) for i in (() if subset is None else subset)))
    for i in indices:
        if i < 0 or i >= form.n:
            raise IndexOutOfRange(f"Вершина {i} вне диапазона 0..{form.n - 1}")
    return tuple(indices)


def indicator(n: int, subset: Iterable[int]) -> np.ndarray:
    mask = np.zeros(n)
    mask[list(subset)] = 1.0
    return mask


def complement(form: FiniteDirichletForm, subset: Iterable[int]) -> Tuple[int, ...]:
    inside = set(subset)
    return tuple(i for i in range(form.n) if i not in inside)


def commutator_norm(form: FiniteDirichletForm, subset: Iterable[int], g: SpectralFunction) -> float:
    """
    ‖[1_Y, g(A)]‖ в операторной m-норме.

    Умножение на 1_Y коммутирует с M^{1/2}, поэтому норма считается для
    симметричной матрицы Q g(Λ) Qᵀ.
    """
    if form.n == 0:
        return 0.0
    return masked_commutator_norm(form.spectral.symmetric_matrix(g), as_subset(form, subset))


def symmetric_generator(form: FiniteDirichletForm) -> np.ndarray:
    """S = M^{-1/2} L M^{-1/2}, собранный прямо из весов (без спектральной сборки)."""
    sqrt_m = np.sqrt(form.measure)
    return form.laplacian() / np.outer(sqrt_m, sqrt_m)


def masked_commutator_norm(matrix: np.ndarray, subset: Iterable[int]) -> float:
    if matrix.size == 0:
        return 0.0
    mask = indicator(matrix.shape[0], subset)
    return float(np.linalg.norm(mask[:, None] * matrix - matrix * mask[None, :], 2))


def generator_commutator_norm(form: FiniteDirichletForm, subset: Iterable[int]) -> float:
    """‖[1_Y, A]‖: ненулевой ровно тогда, когда есть ребра через границу Y."""
    return masked_commutator_norm(symmetric_generator(form), as_subset(form, subset))


@dataclass(frozen=True)
class InvarianceVerdict:
    """Результат is_invariant; ведет себя как bool."""

    invariant: bool
    residual: float
    cross_edges: Tuple[Tuple[int, int, float], ...] = ()
    numerical_agrees: bool = True

    def __bool__(self) -> bool:
        return self.invariant


def is_invariant(form: FiniteDirichletForm, subset: Iterable[int]) -> InvarianceVerdict:
    """
    Проверяет инвариантность Y.

    Решение структурное (нет ребер через границу). Остаток — максимум
    коммутаторов 1_Y с T_t (t из INVARIANCE_TIMES) и с K_β.

    :param form: Форма
    :param subset: Множество вершин Y
    :return: InvarianceVerdict
    :raises IndexOutOfRange: Если индекс вне 0..n−1
    """
    Y = as_subset(form, subset)
    edges = tuple(cross_edges(form, Y))
    residuals = [commutator_norm(form, Y, lambda lam, t=t: np.exp(-t * lam)) for t in INVARIANCE_TIMES]
    residuals.append(commutator_norm(form, Y, lambda lam: 1.0 / (INVARIANCE_BETA + lam)))
    residual = max(residuals)
    invariant = not edges
    agrees = (residual <= INVARIANCE_TOL) == invariant
    if not agrees:
        print(f"⚠ Структурный и численный критерии инвариантности расходятся: остаток {residual:.3e}")
    return InvarianceVerdict(invariant, residual, edges, agrees)


@dataclass(frozen=True)
class InvariantPartition:
    """Минимальные инвариантные множества — компоненты связности."""

    components: Tuple[Tuple[int, ...], ...]
    residual: float = 0.0

    def component_of(self, vertex: int) -> int:
        for index, component in enumerate(self.components):
            if vertex in component:
                return index
        raise IndexOutOfRange(f"Вершина {vertex} не принадлежит разбиению")

    def union(self, indices: Iterable[int]) -> Tuple[int, ...]:
        return tuple(sorted(v for k in indices for v in self.components[k]))


def detect_invariant_sets(form: FiniteDirichletForm) -> InvariantPartition:
    """
    Разбиение на компоненты связности с численной перекрестной проверкой.

    :return: InvariantPartition (residual — наибольший коммутатор по компонентам)
    """
    components = tuple(connected_components(form))
    residual = 0.0
    if len(components) > 1:
        for component in components:
            residual = max(
                residual,
                *(commutator_norm(form, component, lambda lam, t=t: np.exp(-t * lam)) for t in INVARIANCE_TIMES),
            )
        if residual > INVARIANCE_TOL:
            print(f"⚠ Коммутатор компоненты {residual:.3e} превышает допуск {INVARIANCE_TOL:.0e}")
    return InvariantPartition(components, residual)


@dataclass(frozen=True, eq=False)
class PartForm:
    """Часть формы E^Y на инвариантном множестве Y."""

    parent: FiniteDirichletForm
    subset: Tuple[int, ...]
    form: FiniteDirichletForm

    def restrict(self, u) -> np.ndarray:
        return as_vector(self.parent, u)[list(self.subset)]

    def extend(self, values) -> np.ndarray:
        """Продолжение нулем с Y на все пространство."""
        full = np.zeros(self.parent.n)
        full[list(self.subset)] = as_vector(self.form, values)
        return full

    @property
    def is_empty(self) -> bool:
        return len(self.subset) == 0


def restrict_form(
    form: FiniteDirichletForm,
    subset: Tuple[int, ...],
    extra_killing: Optional[np.ndarray] = None,
) -> FiniteDirichletForm:
    """Ограничение весов, убивания и меры на subset (без проверки инвариантности)."""
    if not subset:
        return zero_form(0)
    idx = list(subset)
    killing = form.killing[idx].copy()
    if extra_killing is not None:
        killing = killing + extra_killing
    labels = [form.labels[i] for i in idx] if form.labels else None
    return build_form(form.weights[idx][:, idx], killing, form.measure[idx].copy(), labels=labels)


def part_form(form: FiniteDirichletForm, subset: Iterable[int]) -> PartForm:
    """
    Строит часть формы на инвариантном множестве.

    :raises NotInvariant: Если есть ребро через границу Y
    """
    Y = as_subset(form, subset)
    edges = cross_edges(form, Y)
    if edges:
        i, j, w = edges[0]
        raise NotInvariant(f"Множество не инвариантно: ребро ({i}, {j}) с весом {w:g} пересекает границу")
    if len(Y) == form.n:
        return PartForm(form, Y, form)
    return PartForm(form, Y, restrict_form(form, Y))


def _schur_complement(
    laplacian: np.ndarray,
    measure_b: np.ndarray,
    y_idx: List[int],
    b_idx: List[int],
    lam: float,
) -> np.ndarray:
    """L_YB (L_BB + λM_B)^{-1} L_BY."""
    L_bb = laplacian[np.ix_(b_idx, b_idx)] + lam * np.diag(measure_b)
    L_by = laplacian[np.ix_(b_idx, y_idx)]
    solved = scipy.linalg.solve(L_bb, L_by, assume_a="pos")
    correction = laplacian[np.ix_(y_idx, b_idx)] @ solved
    return 0.5 * (correction + correction.T)


def trace_form(form: FiniteDirichletForm, subset: Iterable[int]) -> FiniteDirichletForm:
    """
    След формы на Y: дополнение Шура генератора по B = Y^c в пределе λ ↓ 0.

    Вершины B, компоненты которых не пересекают Y, в след не входят.

    :param form: Форма
    :param subset: Непустое множество Y
    :return: Форма на Y (мера m|_Y)
    :raises EmptySubset: Если Y пусто
    :raises NonStabilizingLimit: Если регуляризованные дополнения не стабилизируются
    """
    Y = as_subset(form, subset)
    if not Y:
        raise EmptySubset("След определен только для непустого множества")
    if not cross_edges(form, Y):
        return part_form(form, Y).form

    labels = form.component_labels()
    touched = set(labels[list(Y)])
    inside = set(Y)
    y_idx = list(Y)
    b_idx = [i for i in range(form.n) if i not in inside and labels[i] in touched]

    laplacian = form.laplacian()
    measure_b = form.measure[b_idx]
    regularized = [_schur_complement(laplacian, measure_b, y_idx, b_idx, lam) for lam in TRACE_LAMBDAS]
    correction = _schur_complement(laplacian, measure_b, y_idx, b_idx, 0.0)

    scale = max(1.0, float(np.abs(correction).max()))
    gaps = [float(np.abs(a - b).max()) for a, b in zip(regularized, regularized[1:] + [correction])]
    if gaps[-1] > TRACE_STABILIZATION_TOL * scale or gaps[-2] > TRACE_STABILIZATION_TOL * scale:
        raise NonStabilizingLimit(
            f"Дополнение Шура не стабилизируется при λ ↓ 0: разности {', '.join(f'{g:.3e}' for g in gaps)}"
        )

    dense = form.weights.toarray()
    w_yy = dense[np.ix_(y_idx, y_idx)]
    weights = w_yy + correction
    np.fill_diagonal(weights, 0.0)
    weights[weights < 0] = 0.0

    # сумма строки L_YY равна k_i + Σ_{j∈B} w_ij; дополнение Шура вычитает Σ_j C_ij
    row_sums = form.killing[y_idx] + dense[np.ix_(y_idx, b_idx)].sum(axis=1)
    killing = row_sums - correction.sum(axis=1)
    tolerance = TOL_ALGEBRAIC * max(1.0, float(np.abs(row_sums).max()))
    if float(killing.min()) < -tolerance:
        print(f"⚠ Отрицательное убивание следа {float(killing.min()):.3e} обнулено")
    killing[np.abs(killing) < tolerance] = 0.0
    killing = np.clip(killing, 0.0, None)

    labels_y = [form.labels[i] for i in y_idx] if form.labels else None
    return build_form(sp.csr_matrix(weights), killing, form.measure[y_idx].copy(), labels=labels_y)
