"""
Конечные симметричные формы Дирихле.

Форма задается взвешенным графом с убиванием (killing) и положительной мерой
на вершинах:

    E[u] = ½·Σ_ij w_ij (u_i − u_j)² + Σ_i k_i u_i²,
    (Au)_i = (1/m_i)(Σ_j w_ij (u_i − u_j) + k_i u_i).

Полугруппа T_t = exp(−tA), резольвента K_β = (β + A)^{-1} и все
приближения вычисляются через спектральное разложение симметризованного
генератора S = M^{-1/2} L M^{-1/2}. Интегралы ∫·dm на конечном
пространстве — это суммы Σ_i (·)_i m_i.
"""

from dataclasses import dataclass
from fractions import Fraction
import math
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import scipy.linalg
import scipy.sparse as sp

from src.constants import (
    EIGEN_CLAMP,
    EIGEN_ERROR,
    TOL_ALGEBRAIC,
    TOL_SYMMETRY,
)
from src.errors import (
    AsymmetricWeights,
    DimensionMismatch,
    NegativeEntry,
    NegativeInput,
    NegativeTime,
    NonFiniteEntry,
    NonPSDForm,
    NonpositiveBeta,
    NonpositiveMeasure,
    NonpositiveTime,
    UnsortedGrid,
)


SpectralFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SpectralCore:
    """
    Спектральное разложение S = Q·diag(λ)·Qᵀ.

    Собственные векторы в m-скалярном произведении — столбцы M^{-1/2}Q.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    sqrt_measure: np.ndarray

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.basis / self.sqrt_measure[:, None]

    def coefficients(self, u: np.ndarray) -> np.ndarray:
        return self.basis.T @ (self.sqrt_measure * u)

    def synthesize(self, coefficients: np.ndarray) -> np.ndarray:
        return (self.basis @ coefficients) / self.sqrt_measure

    def apply(self, g: SpectralFunction, u: np.ndarray) -> np.ndarray:
        """g(A)u."""
        return self.synthesize(g(self.eigenvalues) * self.coefficients(u))

    def symmetric_matrix(self, g: SpectralFunction) -> np.ndarray:
        """Матрица M^{1/2} g(A) M^{-1/2} = Q g(Λ) Qᵀ (симметричная)."""
        return (self.basis * g(self.eigenvalues)) @ self.basis.T


@dataclass(frozen=True)
class MeasuredVector:
    """Элемент L²(X, m): значения и мера, задающая скалярное произведение."""

    values: np.ndarray
    measure: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def inner(self, other: Union["MeasuredVector", np.ndarray]) -> float:
        other_values = other.values if isinstance(other, MeasuredVector) else np.asarray(other, dtype=float)
        if other_values.shape != self.values.shape:
            raise DimensionMismatch(
                f"Длины векторов не совпадают: {len(self.values)} и {len(other_values)}"
            )
        return float(np.dot(self.values * self.measure, other_values))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self), 0.0))


@dataclass(frozen=True, eq=False)
class FiniteDirichletForm:
    """
    Конечная форма Дирихле (E, D) на X = {0, …, n−1}.

    Объекты неизменяемы: массивы помечены как read-only, спектр вычисляется
    один раз в build_form.
    """

    weights: sp.csr_matrix
    killing: np.ndarray
    measure: np.ndarray
    spectral: SpectralCore
    labels: Optional[Tuple[str, ...]] = None

    @property
    def n(self) -> int:
        return len(self.measure)

    @property
    def degree(self) -> np.ndarray:
        return np.asarray(self.weights.sum(axis=1)).ravel()

    def laplacian(self) -> np.ndarray:
        """Плотная матрица L = D − W + K (без деления на меру)."""
        dense = self.weights.toarray()
        return np.diag(dense.sum(axis=1) + self.killing) - dense

    def edge_list(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Ребра i < j с весами (каждое неориентированное ребро один раз)."""
        upper = sp.triu(self.weights, k=1).tocoo()
        return upper.row, upper.col, upper.data

    def generator_action(self, u: np.ndarray) -> np.ndarray:
        u = as_vector(self, u)
        return (self.degree * u - self.weights @ u + self.killing * u) / self.measure

    def vector(self, values) -> MeasuredVector:
        return MeasuredVector(as_vector(self, values), self.measure)

    def component_labels(self) -> np.ndarray:
        """
        Номер связной компоненты графа {w_ij > 0} для каждой вершины.

        Компоненты занумерованы по возрастанию наименьшей вершины.
        """
        G = nx.from_scipy_sparse_array(self.weights)
        labels = np.zeros(self.n, dtype=int)
        for k, component in enumerate(sorted(nx.connected_components(G), key=min)):
            labels[list(component)] = k
        return labels


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def as_vector(form: FiniteDirichletForm, u) -> np.ndarray:
    """Приводит u к float-вектору длины n, иначе DimensionMismatch."""
    if isinstance(u, MeasuredVector):
        u = u.values
    array = np.asarray(u, dtype=float)
    if array.ndim != 1 or array.shape[0] != form.n:
        raise DimensionMismatch(
            f"Ожидался вектор длины {form.n}, получена форма массива {array.shape}"
        )
    return array


def _as_sparse_weights(weights, n: int) -> sp.csr_matrix:
    if sp.issparse(weights):
        matrix = sp.csr_matrix(weights, dtype=float)
    else:
        dense = np.asarray(weights, dtype=float)
        if dense.size == 0 and n == 0:
            dense = np.zeros((0, 0))
        if dense.ndim != 2:
            raise DimensionMismatch(f"Матрица весов должна быть двумерной, получено ndim={dense.ndim}")
        matrix = sp.csr_matrix(dense)
    if matrix.shape != (n, n):
        raise DimensionMismatch(f"Матрица весов {matrix.shape} не согласована с n={n}")
    return matrix


def _spectral_core(weights: sp.csr_matrix, killing: np.ndarray, measure: np.ndarray) -> SpectralCore:
    n = len(measure)
    sqrt_measure = np.sqrt(measure)
    if n == 0:
        return SpectralCore(
            _readonly(np.zeros(0)), _readonly(np.zeros((0, 0))), _readonly(sqrt_measure)
        )

    dense = weights.toarray()
    laplacian = np.diag(dense.sum(axis=1) + killing) - dense
    symmetric = laplacian / np.outer(sqrt_measure, sqrt_measure)
    symmetric = 0.5 * (symmetric + symmetric.T)
    eigenvalues, basis = scipy.linalg.eigh(symmetric)

    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    lowest = float(eigenvalues[0])
    if lowest < -EIGEN_ERROR * scale:
        raise NonPSDForm(f"Форма не неотрицательна: λ_min = {lowest:.3e}")
    if lowest < -EIGEN_CLAMP * scale:
        print(f"⚠ Собственное значение {lowest:.3e} обнулено (шум округления)")
    eigenvalues = np.where(eigenvalues < 0.0, 0.0, eigenvalues)

    return SpectralCore(_readonly(eigenvalues), _readonly(basis), _readonly(sqrt_measure))


def build_form(
    weights,
    killing: Sequence[float],
    measure: Sequence[float],
    labels: Optional[Sequence[str]] = None,
) -> FiniteDirichletForm:
    """
    Проверяет данные и строит форму с закэшированным спектром.

    :param weights: Симметричная матрица весов (плотная или scipy.sparse)
    :param killing: Вектор убивания k_i ≥ 0
    :param measure: Вектор меры m_i > 0
    :param labels: Необязательные подписи вершин
    :return: FiniteDirichletForm
    :raises AsymmetricWeights, NegativeEntry, NonpositiveMeasure, DimensionMismatch
    """
    killing_arr = np.array(killing, dtype=float)
    measure_arr = np.array(measure, dtype=float)
    if measure_arr.ndim != 1:
        raise DimensionMismatch("Мера должна быть вектором")
    n = measure_arr.shape[0]
    if killing_arr.ndim != 1 or killing_arr.shape[0] != n:
        raise DimensionMismatch(f"Длина вектора убивания {killing_arr.shape} не равна n={n}")
    matrix = _as_sparse_weights(weights, n)
    if labels is not None and len(labels) != n:
        raise DimensionMismatch(f"Число подписей {len(labels)} не равно n={n}")

    if not (np.all(np.isfinite(matrix.data)) and np.all(np.isfinite(killing_arr))
            and np.all(np.isfinite(measure_arr))):
        raise NonFiniteEntry("Веса, убивание и мера должны быть конечными числами")
    if np.any(matrix.data < 0):
        raise NegativeEntry("Отрицательный вес ребра")
    if np.any(killing_arr < 0):
        raise NegativeEntry("Отрицательное убивание")
    if np.any(measure_arr <= 0):
        raise NonpositiveMeasure("Мера вершин должна быть строго положительной")

    if matrix.nnz:
        asymmetry = abs(matrix - matrix.T)
        largest = float(abs(matrix).max())
        if asymmetry.nnz and float(asymmetry.max()) > TOL_SYMMETRY * max(1.0, largest):
            raise AsymmetricWeights(
                f"Веса несимметричны: max|w_ij − w_ji| = {float(asymmetry.max()):.3e}"
            )
        matrix = sp.csr_matrix(0.5 * (matrix + matrix.T))
        diagonal = matrix.diagonal()
        if np.any(diagonal != 0):
            # петли не входят в энергию: (u_i − u_i)² = 0
            print("⚠ Диагональные веса w_ii отброшены")
            matrix = sp.csr_matrix(matrix - sp.diags(diagonal))
        matrix.eliminate_zeros()
    matrix.sort_indices()

    spectral = _spectral_core(matrix, killing_arr, measure_arr)
    return FiniteDirichletForm(
        weights=matrix,
        killing=_readonly(killing_arr),
        measure=_readonly(measure_arr),
        spectral=spectral,
        labels=tuple(str(label) for label in labels) if labels is not None else None,
    )


def zero_form(n: int = 0) -> FiniteDirichletForm:
    """Нулевая форма на n вершинах с единичной мерой (n = 0 — пустая часть)."""
    return build_form(sp.csr_matrix((n, n)), np.zeros(n), np.ones(n))


def energy_terms(form: FiniteDirichletForm, u) -> np.ndarray:
    """Слагаемые энергии: w_ij (u_i − u_j)² по ребрам i < j и k_i u_i²."""
    u = as_vector(form, u)
    rows, cols, data = form.edge_list()
    return np.concatenate([data * (u[rows] - u[cols]) ** 2, form.killing * u ** 2])


def energy(form: FiniteDirichletForm, u) -> float:
    """
    E[u]; сумма округляется точно (math.fsum), поэтому тождества
    аддитивности по инвариантным множествам выполняются без погрешности.
    """
    return math.fsum(energy_terms(form, u))


def exact_energy(form: FiniteDirichletForm, u) -> Fraction:
    """E[u] как точная рациональная сумма слагаемых (для проверок разложений)."""
    return sum((Fraction(float(term)) for term in energy_terms(form, u)), Fraction(0))


def clip_unit(u) -> np.ndarray:
    """Нормальное сжатие min(max(u, 0), 1)."""
    return np.clip(np.asarray(u, dtype=float), 0.0, 1.0)


def spectral_apply(form: FiniteDirichletForm, g: SpectralFunction, u) -> np.ndarray:
    """Функциональное исчисление g(A)u."""
    return form.spectral.apply(g, as_vector(form, u))


def operator_matrix(form: FiniteDirichletForm, g: SpectralFunction) -> np.ndarray:
    """Матрица оператора g(A) в стандартном базисе: (g(A)u)_i = Σ_j G_ij u_j."""
    core = form.spectral
    return core.symmetric_matrix(g) * (core.sqrt_measure[None, :] / core.sqrt_measure[:, None])


def _check_time(t: float, allow_zero: bool) -> float:
    t = float(t)
    if allow_zero:
        if not t >= 0:
            raise NegativeTime(f"Время должно быть ≥ 0, получено {t}")
    elif not t > 0:
        raise NonpositiveTime(f"Время должно быть > 0, получено {t}")
    return t


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not beta > 0:
        raise NonpositiveBeta(f"β должно быть > 0, получено {beta}")
    return beta


def semigroup_apply(form: FiniteDirichletForm, t: float, u) -> MeasuredVector:
    """T_t u = exp(−tA)u."""
    t = _check_time(t, allow_zero=True)
    return MeasuredVector(spectral_apply(form, lambda lam: np.exp(-t * lam), u), form.measure)


def resolvent_apply(form: FiniteDirichletForm, beta: float, u) -> MeasuredVector:
    """K_β u = (β + A)^{-1}u."""
    beta = _check_beta(beta)
    return MeasuredVector(spectral_apply(form, lambda lam: 1.0 / (beta + lam), u), form.measure)


def deny_yosida(form: FiniteDirichletForm, beta: float, u) -> float:
    """E^(β)[u] = β(u − βK_β u, u)_m = Σ βλ/(β+λ)·c²."""
    beta = _check_beta(beta)
    coefficients = form.spectral.coefficients(as_vector(form, u))
    lam = form.spectral.eigenvalues
    return math.fsum(beta * lam / (beta + lam) * coefficients ** 2)


def time_dependent(form: FiniteDirichletForm, t: float, u) -> float:
    """E^(t)[u] = (1/t)(u − T_t u, u)_m = Σ (1 − e^{−tλ})/t·c²."""
    t = _check_time(t, allow_zero=False)
    coefficients = form.spectral.coefficients(as_vector(form, u))
    lam = form.spectral.eigenvalues
    return math.fsum(-np.expm1(-t * lam) / t * coefficients ** 2)


def sigma_t(form: FiniteDirichletForm, t: float, u) -> MeasuredVector:
    """σ_t(u) = (1/t)(T_t u² − 2u·T_t u + u²·T_t 1)."""
    t = _check_time(t, allow_zero=False)
    u = as_vector(form, u)
    kernel = lambda lam: np.exp(-t * lam)
    values = (
        spectral_apply(form, kernel, u ** 2)
        - 2.0 * u * spectral_apply(form, kernel, u)
        + u ** 2 * spectral_apply(form, kernel, np.ones(form.n))
    ) / t
    return MeasuredVector(values, form.measure)


def kappa_beta(form: FiniteDirichletForm, beta: float, u) -> MeasuredVector:
    """κ_β(u) = β(K_β u² − 2u·K_β u + u²·K_β 1)."""
    beta = _check_beta(beta)
    u = as_vector(form, u)
    kernel = lambda lam: 1.0 / (beta + lam)
    values = beta * (
        spectral_apply(form, kernel, u ** 2)
        - 2.0 * u * spectral_apply(form, kernel, u)
        + u ** 2 * spectral_apply(form, kernel, np.ones(form.n))
    )
    return MeasuredVector(values, form.measure)


class RepresentationCheck(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def representation_check(
    form: FiniteDirichletForm,
    param: float,
    u,
    kind: str = "time",
) -> RepresentationCheck:
    """
    Сравнивает приближение с его интегральным представлением.

    kind="time":      E^(t)[u] = ½∫σ_t(u) dm + (1/t)∫(1 − T_t 1)u² dm
    kind="resolvent": E^(β)[u] = (β/2)∫κ_β(u) dm + β∫(1 − βK_β 1)u² dm

    :return: (lhs, rhs, residual = |lhs − rhs| / (1 + |lhs|))
    """
    u = as_vector(form, u)
    m = form.measure
    ones = np.ones(form.n)
    if kind == "time":
        lhs = time_dependent(form, param, u)
        sigma = sigma_t(form, param, u).values
        leak = ones - semigroup_apply(form, param, ones).values
        rhs = 0.5 * math.fsum(sigma * m) + math.fsum(leak * u ** 2 * m) / float(param)
    elif kind == "resolvent":
        beta = float(param)
        lhs = deny_yosida(form, beta, u)
        kappa = kappa_beta(form, beta, u).values
        leak = ones - beta * resolvent_apply(form, beta, ones).values
        rhs = 0.5 * beta * math.fsum(kappa * m) + beta * math.fsum(leak * u ** 2 * m)
    else:
        raise ValueError(f"Неизвестный вид приближения: {kind!r} (ожидается 'time' или 'resolvent')")
    return RepresentationCheck(lhs, rhs, abs(lhs - rhs) / (1.0 + abs(lhs)))


def _jump_form(form: FiniteDirichletForm, kernel: np.ndarray, leak: np.ndarray, scale: float) -> FiniteDirichletForm:
    """
    Форма с ядром переходов: w_ij = scale·m_i·P_ij (i ≠ j), k_i = scale·m_i·leak_i.

    Ядро между разными компонентами тождественно равно нулю; шум округления там
    обнуляется, чтобы компоненты оставались инвариантными.
    """
    m = form.measure
    weights = scale * m[:, None] * kernel
    weights = 0.5 * (weights + weights.T)
    labels = form.component_labels()
    weights[labels[:, None] != labels[None, :]] = 0.0
    np.fill_diagonal(weights, 0.0)
    negative = float(weights.min()) if weights.size else 0.0
    if negative < -TOL_ALGEBRAIC * max(1.0, float(np.abs(weights).max())):
        print(f"⚠ Отрицательные элементы ядра до {negative:.3e} обнулены")
    weights[weights < 0] = 0.0
    # на компонентах без убивания T_t 1 = 1 точно
    killed = np.bincount(labels, weights=form.killing, minlength=labels.max(initial=-1) + 1) > 0
    leak = np.where(killed[labels], leak, 0.0)
    killing = np.clip(scale * m * leak, 0.0, None)
    return build_form(sp.csr_matrix(weights), killing, m, labels=form.labels)


def time_dependent_form(form: FiniteDirichletForm, t: float) -> FiniteDirichletForm:
    """E^(t) как форма Дирихле: w_ij = m_i (T_t)_ij / t, k_i = m_i (1 − T_t 1)_i / t."""
    t = _check_time(t, allow_zero=False)
    kernel = operator_matrix(form, lambda lam: np.exp(-t * lam))
    leak = 1.0 - spectral_apply(form, lambda lam: np.exp(-t * lam), np.ones(form.n))
    return _jump_form(form, kernel, leak, 1.0 / t)


def deny_yosida_form(form: FiniteDirichletForm, beta: float) -> FiniteDirichletForm:
    """E^(β) как форма Дирихле: w_ij = β m_i (βK_β)_ij, k_i = β m_i (1 − βK_β 1)_i."""
    beta = _check_beta(beta)
    kernel = operator_matrix(form, lambda lam: beta / (beta + lam))
    leak = 1.0 - spectral_apply(form, lambda lam: beta / (beta + lam), np.ones(form.n))
    return _jump_form(form, kernel, leak, beta)


def approximation_symbol(kind: str, param: float, s: float) -> SpectralFunction:
    """
    Символ полугруппы приближающей формы:
    kind="time":      exp(−(s/t)(1 − e^{−tλ}))
    kind="resolvent": exp(sβ(β/(β+λ) − 1)) = exp(−sβλ/(β+λ))
    """
    param = float(param)
    if kind == "time":
        _check_time(param, allow_zero=False)
        return lambda lam: np.exp((s / param) * np.expm1(-param * lam))
    if kind == "resolvent":
        _check_beta(param)
        return lambda lam: np.exp(-s * param * lam / (param + lam))
    raise ValueError(f"Неизвестный вид приближения: {kind!r}")


def approximating_semigroup_apply(form: FiniteDirichletForm, kind: str, param: float, s: float, u) -> MeasuredVector:
    """Полугруппа exp(−s/t(1−T_t)) или exp(sβ(βK_β − 1)), примененная к u."""
    return MeasuredVector(spectral_apply(form, approximation_symbol(kind, param, s), u), form.measure)


def _check_grid(time_grid: Sequence[float], start_at_zero: bool) -> np.ndarray:
    grid = np.asarray(time_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise UnsortedGrid("Сетка времени должна быть непустым вектором")
    if start_at_zero and grid[0] != 0.0:
        raise UnsortedGrid(f"Сетка времени должна начинаться с 0, получено {grid[0]}")
    if np.any(grid < 0):
        raise UnsortedGrid("Времена должны быть неотрицательны")
    if np.any(np.diff(grid) <= 0):
        raise UnsortedGrid("Сетка времени должна строго возрастать")
    return grid


def heat_evolve(form: FiniteDirichletForm, u0, time_grid: Sequence[float]) -> List[MeasuredVector]:
    """
    Решение уравнения теплопроводности v(t) = T_t u0 на сетке времени.

    :param time_grid: Возрастающая сетка, начинающаяся с 0
    :return: Траектория [T_{t_j} u0]
    """
    grid = _check_grid(time_grid, start_at_zero=True)
    core = form.spectral
    coefficients = core.coefficients(as_vector(form, u0))
    return [
        MeasuredVector(core.synthesize(np.exp(-t * core.eigenvalues) * coefficients), form.measure)
        for t in grid
    ]


def is_excessive(form: FiniteDirichletForm, u, t_grid: Sequence[float], alpha: float = 0.0) -> bool:
    """
    Проверяет e^{−αt}T_t u ≤ u на сетке (α = 0 — обычная эксцессивность).

    Допуск 1e-12 масштабируется на max(1, max|u|).
    """
    u = as_vector(form, u)
    if np.any(u < 0):
        raise NegativeInput("Эксцессивность определена только для u ≥ 0")
    grid = _check_grid(t_grid, start_at_zero=False)
    tolerance = TOL_ALGEBRAIC * max(1.0, float(np.max(u, initial=0.0)))
    core = form.spectral
    coefficients = core.coefficients(u)
    for t in grid:
        evolved = math.exp(-alpha * t) * core.synthesize(np.exp(-t * core.eigenvalues) * coefficients)
        if np.any(evolved > u + tolerance):
            return False
    return True
