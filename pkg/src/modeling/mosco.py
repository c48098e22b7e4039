"""
Последовательности форм и сходимость по Моско.

Сходимость по Моско проверяется через сильную сходимость резольвент
(и полугрупп) на наборе тестовых векторов. Предел может быть формой в
широком смысле: область определения {u: u_i = 0 на множестве ограничений}.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from joblib import Parallel, delayed
import numpy as np
import scipy.sparse as sp

from src.constants import (
    APPROX_INVARIANCE_TIMES,
    APPROX_NONINVARIANCE_TOL,
    APPROX_SEMIGROUP_TIMES,
    CONSERVATIVE_TOL,
    COROLLARY_T_SEQUENCE,
    DEFAULT_BETA_GRID,
    DEFAULT_T_GRID,
    DEFAULT_TEST_VECTORS,
    DELTA_COUPLINGS,
    DELTA_GRID,
    DELTA_SPACING,
    EMERGENT_TERM_GAP,
    LIMIT_INVARIANCE_TOL,
    MANY_DELTA_COUPLINGS,
    MANY_DELTA_SPACING,
    MANY_DELTA_WINDOW,
    MONOTONE_SLACK,
    MOSCO_MIN_TERMS,
    MOSCO_TAIL,
    MOSCO_TOL,
    PRESERVATION_TIMES,
    VANISH_SCALINGS,
)
from src.errors import (
    DimensionMismatch,
    EmptySubset,
    EvenGrid,
    IndexOutOfRange,
    LimitNotInvariant,
    NegativeTime,
    NonpositiveBeta,
    NotMonotone,
    ParameterError,
    SequenceMismatch,
    TermNotInvariant,
    TooFewTerms,
)
from src.features.forms import (
    FiniteDirichletForm,
    SpectralFunction,
    approximating_semigroup_apply,
    approximation_symbol,
    as_vector,
    build_form,
    energy,
    operator_matrix,
    spectral_apply,
    time_dependent_form,
)
from src.features.graph_builder import cross_edges, path_graph_form
from src.features.invariance import (
    as_subset,
    commutator_norm,
    generator_commutator_norm,
    indicator,
    masked_commutator_norm,
    part_form,
    restrict_form,
    symmetric_generator,
)
from src.modeling.decomposition import classify
from src.utils.config import get_cached_config


@dataclass(frozen=True, eq=False)
class WideSenseForm:
    """
    Форма в широком смысле: base с ограничением u = 0 на constraint.

    Резольвента и полугруппа — операторы ограниченной подформы на свободных
    вершинах, продолженные нулем. Ребра к ограниченным вершинам дают
    свободным вершинам дополнительное убивание Σ_{j∈C} w_ij.
    """

    base: FiniteDirichletForm
    constraint: Tuple[int, ...]

    def __post_init__(self):
        for i in self.constraint:
            if i < 0 or i >= self.base.n:
                raise IndexOutOfRange(f"Ограничение на вершине {i} вне диапазона 0..{self.base.n - 1}")
        object.__setattr__(self, "constraint", tuple(sorted(set(int(i) for i in self.constraint))))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def measure(self) -> np.ndarray:
        return self.base.measure

    @cached_property
    def free(self) -> Tuple[int, ...]:
        blocked = set(self.constraint)
        return tuple(i for i in range(self.n) if i not in blocked)

    @cached_property
    def constrained_form(self) -> FiniteDirichletForm:
        free = list(self.free)
        if not free:
            return restrict_form(self.base, ())
        boundary = np.asarray(self.base.weights[free][:, list(self.constraint)].sum(axis=1)).ravel()
        return restrict_form(self.base, self.free, extra_killing=boundary)

    def spectral_apply(self, g: SpectralFunction, f) -> np.ndarray:
        f = as_vector(self.base, f)
        out = np.zeros(self.n)
        if self.free:
            out[list(self.free)] = spectral_apply(self.constrained_form, g, f[list(self.free)])
        return out

    def resolvent_apply(self, beta: float, f) -> np.ndarray:
        if not beta > 0:
            raise NonpositiveBeta(f"β должно быть > 0, получено {beta}")
        return self.spectral_apply(lambda lam: 1.0 / (beta + lam), f)

    def semigroup_apply(self, t: float, f) -> np.ndarray:
        """При t = 0 — проекция на свободные вершины."""
        if not t >= 0:
            raise NegativeTime(f"Время должно быть ≥ 0, получено {t}")
        return self.spectral_apply(lambda lam: np.exp(-t * lam), f)

    def energy(self, u) -> float:
        u = as_vector(self.base, u)
        if np.any(u[list(self.constraint)] != 0):
            return math.inf
        return energy(self.base, u)

    def symmetric_matrix(self, g: SpectralFunction) -> np.ndarray:
        full = np.zeros((self.n, self.n))
        if self.free:
            free = list(self.free)
            full[np.ix_(free, free)] = self.constrained_form.spectral.symmetric_matrix(g)
        return full

    def generator_matrix(self) -> np.ndarray:
        """Матрица генератора на свободных вершинах (нули на ограничении)."""
        full = np.zeros((self.n, self.n))
        if self.free:
            free = list(self.free)
            full[np.ix_(free, free)] = operator_matrix(self.constrained_form, lambda lam: lam)
        return full

    def free_cross_edges(self, subset: Sequence[int]) -> List[Tuple[int, int, float]]:
        blocked = set(self.constraint)
        return [e for e in cross_edges(self.base, subset) if e[0] not in blocked and e[1] not in blocked]

    def part(self, subset: Sequence[int]) -> "WideSenseForm":
        """
        Часть на Y: база, ограниченная на Y, с убиванием от ребер к
        ограниченным вершинам вне Y.

        :raises LimitNotInvariant: Если свободные вершины Y связаны со свободными вне Y
        """
        Y = as_subset(self.base, subset)
        if self.free_cross_edges(Y):
            raise LimitNotInvariant("Множество не инвариантно для предельной формы")
        inside = set(Y)
        outside_blocked = [j for j in self.constraint if j not in inside]
        extra = None
        if outside_blocked and Y:
            extra = np.asarray(self.base.weights[list(Y)][:, outside_blocked].sum(axis=1)).ravel()
        base = restrict_form(self.base, Y, extra_killing=extra)
        position = {v: k for k, v in enumerate(Y)}
        return WideSenseForm(base, tuple(position[i] for i in self.constraint if i in inside))


Limit = Union[FiniteDirichletForm, WideSenseForm]


def limit_apply(limit: Limit, g: SpectralFunction, f) -> np.ndarray:
    if isinstance(limit, WideSenseForm):
        return limit.spectral_apply(g, f)
    return spectral_apply(limit, g, f)


def limit_energy(limit: Limit, u) -> float:
    if isinstance(limit, WideSenseForm):
        return limit.energy(u)
    return energy(limit, u)


def limit_is_invariant(limit: Limit, subset: Sequence[int]) -> bool:
    if isinstance(limit, WideSenseForm):
        return not limit.free_cross_edges(subset)
    return not cross_edges(limit, subset)


def limit_part(limit: Limit, subset: Sequence[int]) -> Limit:
    if isinstance(limit, WideSenseForm):
        return limit.part(subset)
    return part_form(limit, subset).form


def limit_generator_commutator(limit: Limit, subset: Sequence[int]) -> float:
    if isinstance(limit, WideSenseForm):
        full = np.zeros((limit.n, limit.n))
        if limit.free:
            free = list(limit.free)
            full[np.ix_(free, free)] = symmetric_generator(limit.constrained_form)
        return masked_commutator_norm(full, as_subset(limit.base, subset))
    return generator_commutator_norm(limit, subset)


@dataclass(frozen=True, eq=False)
class FormSequence:
    """Семейство форм на одном пространстве с объявленным пределом."""

    terms: Tuple[FiniteDirichletForm, ...]
    limit: Limit
    monotone_tag: str = "none"
    parameters: Tuple[float, ...] = ()
    name: str = ""
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.terms[0].n

    @property
    def measure(self) -> np.ndarray:
        return self.terms[0].measure

    def __len__(self) -> int:
        return len(self.terms)


MONOTONE_TAGS = ("increasing", "decreasing", "none")


def _resolve_seed(seed: Optional[int]) -> int:
    return get_cached_config()["seed"] if seed is None else int(seed)


def _resolve_jobs(jobs: Optional[int]) -> int:
    return get_cached_config()["jobs"] if jobs is None else int(jobs)


def default_test_vectors(measure: np.ndarray, count: int = DEFAULT_TEST_VECTORS, seed: Optional[int] = None) -> np.ndarray:
    """Неотрицательные случайные векторы единичной m-нормы (строки массива)."""
    rng = np.random.default_rng(_resolve_seed(seed))
    vectors = rng.uniform(0.0, 1.0, size=(count, len(measure)))
    norms = np.sqrt((vectors ** 2 * measure[None, :]).sum(axis=1))
    norms[norms == 0] = 1.0
    return vectors / norms[:, None]


def build_sequence(
    terms: Sequence[FiniteDirichletForm],
    limit: Limit,
    monotone_tag: str = "none",
    parameters: Optional[Sequence[float]] = None,
    name: str = "",
    metadata: Optional[Dict[str, object]] = None,
    seed: Optional[int] = None,
) -> FormSequence:
    """
    Проверяет и собирает последовательность форм.

    Все члены и предел должны иметь одно n и одну меру. Для монотонных
    последовательностей монотонность энергий проверяется на случайных векторах.

    :raises SequenceMismatch, NotMonotone, TooFewTerms
    """
    terms = tuple(terms)
    if not terms:
        raise TooFewTerms("Последовательность должна содержать хотя бы один член")
    if monotone_tag not in MONOTONE_TAGS:
        raise ValueError(f"Неизвестная метка монотонности: {monotone_tag!r}")
    reference = terms[0]
    for k, term in enumerate(terms[1:] + (limit,), start=1):
        if term.n != reference.n or not np.array_equal(term.measure, reference.measure):
            where = "предел" if term is limit else f"член {k}"
            raise SequenceMismatch(f"{where}: размерность или мера не совпадают с членом 0")

    params = tuple(float(p) for p in (parameters if parameters is not None else range(1, len(terms) + 1)))
    if len(params) != len(terms):
        raise SequenceMismatch(f"Число параметров {len(params)} не равно числу членов {len(terms)}")

    if monotone_tag != "none" and len(terms) > 1:
        rng = np.random.default_rng(_resolve_seed(seed))
        samples = rng.standard_normal((DEFAULT_TEST_VECTORS, reference.n))
        for u in samples:
            energies = [energy(term, u) for term in terms]
            for k, (a, b) in enumerate(zip(energies, energies[1:])):
                slack = MONOTONE_SLACK * max(1.0, abs(a), abs(b))
                broken = b < a - slack if monotone_tag == "increasing" else b > a + slack
                if broken:
                    raise NotMonotone(f"Энергии членов {k} и {k + 1} нарушают метку {monotone_tag}: {a:.6g}, {b:.6g}")
    return FormSequence(terms, limit, monotone_tag, params, name, dict(metadata or {}))


@dataclass(frozen=True)
class MoscoReport:
    """Остатки ‖K^{(k)} f − K^∞ f‖_m (или для T_t) по тестовым векторам и членам."""

    kind: str
    param: float
    parameters: Tuple[float, ...]
    residuals: Tuple[Tuple[float, ...], ...]
    term_residuals: Tuple[float, ...]
    rate: Optional[float]
    converged: bool
    tol: float
    monotone_residuals: bool
    evidence: str = ""

    @property
    def verdict(self) -> str:
        return "Converged" if self.converged else "NotConverged"

    def to_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "param": self.param,
            "parameters": list(self.parameters),
            "residuals": [list(r) for r in self.residuals],
            "term_residuals": list(self.term_residuals),
            "rate": self.rate,
            "verdict": self.verdict,
            "tol": self.tol,
            "monotone_residuals": self.monotone_residuals,
            "evidence": self.evidence,
        }


def _operator_symbol(kind: str, param: float) -> SpectralFunction:
    if kind == "resolvent":
        return lambda lam: 1.0 / (param + lam)
    return lambda lam: np.exp(-param * lam)


def _term_residuals(term: FiniteDirichletForm, kind: str, param: float, vectors: np.ndarray, targets: np.ndarray) -> List[float]:
    g = _operator_symbol(kind, param)
    out = []
    for f, target in zip(vectors, targets):
        diff = spectral_apply(term, g, f) - target
        out.append(math.sqrt(math.fsum(diff ** 2 * term.measure)))
    return out


def fit_rate(parameters: Sequence[float], residuals: Sequence[float]) -> Optional[float]:
    """Наклон log остатка от log параметра по второй половине последовательности."""
    count = len(residuals)
    half = max(2, math.ceil(count / 2))
    tail = [(p, r) for p, r in list(zip(parameters, residuals))[-half:] if r > 0 and p > 0]
    if len(tail) < 2:
        return None
    x = np.log([p for p, _ in tail])
    y = np.log([r for _, r in tail])
    if np.ptp(x) == 0:
        return None
    return float(np.polyfit(x, y, 1)[0])


def _convergence_report(
    seq: FormSequence,
    kind: str,
    param: float,
    test_vectors,
    tol: float,
    jobs: Optional[int],
    seed: Optional[int],
) -> MoscoReport:
    if len(seq.terms) < MOSCO_MIN_TERMS:
        raise TooFewTerms(f"Нужно хотя бы {MOSCO_MIN_TERMS} члена, получено {len(seq.terms)}")
    if test_vectors is None:
        vectors = default_test_vectors(seq.measure, seed=seed)
    else:
        vectors = np.atleast_2d(np.asarray(test_vectors, dtype=float))
        if vectors.shape[1] != seq.n:
            raise DimensionMismatch(f"Тестовые векторы должны иметь длину {seq.n}")

    g = _operator_symbol(kind, param)
    targets = np.array([limit_apply(seq.limit, g, f) for f in vectors])
    per_term = Parallel(n_jobs=_resolve_jobs(jobs))(
        delayed(_term_residuals)(term, kind, param, vectors, targets) for term in seq.terms
    )
    residuals = tuple(tuple(float(per_term[k][v]) for k in range(len(seq.terms))) for v in range(len(vectors)))
    term_residuals = tuple(max(r[k] for r in residuals) for k in range(len(seq.terms)))

    monotone = all(
        b <= a + MONOTONE_SLACK for r in residuals for a, b in zip(r, r[1:])
    )
    tail = term_residuals[-MOSCO_TAIL:]
    tail_ok = all(b <= a + MONOTONE_SLACK for a, b in zip(tail, tail[1:]))
    last_ok = term_residuals[-1] <= tol
    rate = fit_rate(seq.parameters, term_residuals)

    evidence = []
    if not last_ok:
        evidence.append(f"последний остаток {term_residuals[-1]:.3e} > tol {tol:.0e}")
    if not tail_ok:
        evidence.append("остатки не убывают на последних членах: " + ", ".join(f"{r:.3e}" for r in tail))
    if seq.monotone_tag != "none" and not monotone:
        evidence.append("остатки монотонной последовательности не монотонны")
    return MoscoReport(
        kind=kind,
        param=float(param),
        parameters=seq.parameters,
        residuals=residuals,
        term_residuals=term_residuals,
        rate=rate,
        converged=last_ok and tail_ok,
        tol=tol,
        monotone_residuals=monotone,
        evidence="; ".join(evidence),
    )


def resolvent_convergence(
    seq: FormSequence,
    beta: float = 1.0,
    test_vectors=None,
    tol: float = MOSCO_TOL,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
) -> MoscoReport:
    """
    Сильная сходимость резольвент K_β^{(k)} → K_β^∞.

    :param seq: Последовательность форм (не менее трех членов)
    :param beta: β > 0
    :param test_vectors: Строки — тестовые векторы (по умолчанию случайные с seed)
    :param tol: Порог для последнего остатка
    :param jobs: Число процессов joblib
    :raises TooFewTerms, NonpositiveBeta
    """
    if not beta > 0:
        raise NonpositiveBeta(f"β должно быть > 0, получено {beta}")
    return _convergence_report(seq, "resolvent", float(beta), test_vectors, tol, jobs, seed)


def semigroup_convergence(
    seq: FormSequence,
    t: float = 1.0,
    test_vectors=None,
    tol: float = MOSCO_TOL,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
) -> MoscoReport:
    """Сильная сходимость полугрупп T_t^{(k)} → T_t^∞ (при t = 0 предел — проекция)."""
    if not t >= 0:
        raise NegativeTime(f"Время должно быть ≥ 0, получено {t}")
    return _convergence_report(seq, "semigroup", float(t), test_vectors, tol, jobs, seed)


class PreservationVerdict(NamedTuple):
    preserved: bool
    max_commutator: float


def invariance_preservation_check(seq: FormSequence, subset, seed: Optional[int] = None) -> PreservationVerdict:
    """
    Если Y инвариантно для всех членов, оно инвариантно и для предела:
    ‖1_Y T_t^∞ u − T_t^∞(1_Y u)‖_m ≤ 1e-9·‖u‖_m на случайных u.

    :raises TermNotInvariant: Если Y не инвариантно для какого-то члена
    """
    Y = as_subset(seq.terms[0], subset)
    for k, term in enumerate(seq.terms):
        edges = cross_edges(term, Y)
        if edges:
            raise TermNotInvariant(f"член {k}: ребро {edges[0][:2]} пересекает границу множества")
    mask = indicator(seq.n, Y)
    rng = np.random.default_rng(_resolve_seed(seed))
    worst = 0.0
    for u in rng.standard_normal((DEFAULT_TEST_VECTORS, seq.n)):
        norm = math.sqrt(math.fsum(u ** 2 * seq.measure)) or 1.0
        for t in PRESERVATION_TIMES:
            g = lambda lam, t=t: np.exp(-t * lam)
            diff = mask * limit_apply(seq.limit, g, u) - limit_apply(seq.limit, g, mask * u)
            worst = max(worst, math.sqrt(math.fsum(diff ** 2 * seq.measure)) / norm)
    return PreservationVerdict(worst <= LIMIT_INVARIANCE_TOL, worst)


class EmergentInvariance(NamedTuple):
    limit_commutator: float
    min_term_commutator: float
    term_commutators: Tuple[float, ...]
    gap: bool


def emergent_invariance(seq: FormSequence, subset) -> EmergentInvariance:
    """
    Коммутаторы генераторов ‖[1_Y, A]‖ для предела и для членов.

    gap — предел инвариантен (≤ 1e-9), а каждый член нет (≥ EMERGENT_TERM_GAP).
    """
    Y = as_subset(seq.terms[0], subset)
    limit_value = limit_generator_commutator(seq.limit, Y)
    term_values = tuple(generator_commutator_norm(term, Y) for term in seq.terms)
    smallest = min(term_values)
    gap = limit_value <= LIMIT_INVARIANCE_TOL and smallest >= EMERGENT_TERM_GAP
    return EmergentInvariance(limit_value, smallest, term_values, gap)


def part_convergence_check(
    seq: FormSequence,
    subset,
    beta: float = 1.0,
    tol: float = MOSCO_TOL,
    test_vectors=None,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
) -> MoscoReport:
    """
    Сходимость частей (E^k)^Y → (E^∞)^Y через резольвенты.

    Тестовые векторы по умолчанию — общие векторы последовательности,
    ограниченные на Y.

    :raises TermNotInvariant, LimitNotInvariant, EmptySubset
    """
    Y = as_subset(seq.terms[0], subset)
    if not Y:
        raise EmptySubset("Часть на пустом множестве не определена")
    for k, term in enumerate(seq.terms):
        if cross_edges(term, Y):
            raise TermNotInvariant(f"член {k}: множество не инвариантно")
    if not limit_is_invariant(seq.limit, Y):
        raise LimitNotInvariant("Множество не инвариантно для предельной формы")

    if test_vectors is None:
        vectors = default_test_vectors(seq.measure, seed=seed)[:, list(Y)]
    else:
        vectors = np.atleast_2d(np.asarray(test_vectors, dtype=float))
        if vectors.shape[1] == seq.n:
            vectors = vectors[:, list(Y)]

    parts = tuple(part_form(term, Y).form for term in seq.terms)
    limit = limit_part(seq.limit, Y)
    part_seq = FormSequence(parts, limit, seq.monotone_tag, seq.parameters, f"{seq.name}|part")
    return resolvent_convergence(part_seq, beta, vectors, tol, jobs, seed)


class M1Check(NamedTuple):
    passed: bool
    margins: Tuple[float, ...]


def m1_spot_check(seq: FormSequence, vectors=None, seed: Optional[int] = None) -> M1Check:
    """
    Проверка liminf E^k[u] ≥ E^∞[u] для возрастающих последовательностей на u_k ≡ u.

    Для предела в широком смысле векторы обнуляются на ограничении (иначе
    E^∞[u] = ∞). Запас — E^K[u] − E^∞[u] для последнего члена.

    :raises NotMonotone: Если последовательность не помечена как возрастающая
    """
    if seq.monotone_tag != "increasing":
        raise NotMonotone("Проверка (M1) реализована только для возрастающих последовательностей")
    if vectors is None:
        rng = np.random.default_rng(_resolve_seed(seed))
        vectors = rng.standard_normal((DEFAULT_TEST_VECTORS, seq.n))
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float)).copy()
    if isinstance(seq.limit, WideSenseForm):
        vectors[:, list(seq.limit.constraint)] = 0.0
    margins = []
    for u in vectors:
        target = limit_energy(seq.limit, u)
        margins.append(energy(seq.terms[-1], u) - target)
    passed = all(m >= -LIMIT_INVARIANCE_TOL * max(1.0, abs(limit_energy(seq.limit, u))) for m, u in zip(margins, vectors))
    return M1Check(passed, tuple(margins))


@dataclass(frozen=True)
class ApproxInvarianceVerdict:
    invariant: bool
    time_commutators: Dict[float, float]
    beta_commutators: Dict[float, float]
    consistent: bool

    def __bool__(self) -> bool:
        return self.invariant and self.consistent


def approx_invariance_check(
    form: FiniteDirichletForm,
    subset,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    beta_grid: Sequence[float] = DEFAULT_BETA_GRID,
) -> ApproxInvarianceVerdict:
    """
    Инвариантность Y для E, E^(t) и E^(β) одновременно.

    Коммутаторы 1_Y с exp(−s/t(1−T_t)) и exp(−sβ(1−βK_β)), s из
    APPROX_INVARIANCE_TIMES. Для инвариантного Y все ≤ 1e-9, для
    неинвариантного каждый параметр дает коммутатор > 1e-6.
    """
    Y = as_subset(form, subset)
    invariant = not cross_edges(form, Y)

    def worst(kind: str, param: float) -> float:
        return max(commutator_norm(form, Y, approximation_symbol(kind, param, s)) for s in APPROX_INVARIANCE_TIMES)

    time_values = {float(t): worst("time", t) for t in t_grid}
    beta_values = {float(b): worst("resolvent", b) for b in beta_grid}
    values = list(time_values.values()) + list(beta_values.values())
    if invariant:
        consistent = all(v <= LIMIT_INVARIANCE_TOL for v in values)
    else:
        consistent = all(v > APPROX_NONINVARIANCE_TOL for v in values)
    return ApproxInvarianceVerdict(invariant, time_values, beta_values, consistent)


@dataclass(frozen=True)
class ApproxSpacesReport:
    x_cons: Tuple[int, ...]
    time_spaces: Dict[float, Tuple[int, ...]]
    beta_spaces: Dict[float, Tuple[int, ...]]
    equal: bool
    cons_drift: float
    diss_gap: float
    corollary: Dict[str, MoscoReport] = field(default_factory=dict)


def _approx_conservative_space(form: FiniteDirichletForm, kind: str, param: float) -> Tuple[Tuple[int, ...], np.ndarray]:
    ones = np.ones(form.n)
    deviation = np.zeros(form.n)
    for s in APPROX_SEMIGROUP_TIMES:
        values = approximating_semigroup_apply(form, kind, param, s, ones).values
        deviation = np.maximum(deviation, np.abs(1.0 - values))
    return tuple(int(i) for i in np.flatnonzero(deviation <= CONSERVATIVE_TOL)), deviation


def approx_conservative_spaces(
    form: FiniteDirichletForm,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    beta_grid: Sequence[float] = DEFAULT_BETA_GRID,
    corollary: bool = True,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
) -> ApproxSpacesReport:
    """
    Консервативные пространства полугрупп приближений E^(t) и E^(β).

    Все они должны совпадать с X_cons исходной формы. При corollary=True
    дополнительно проверяется сходимость частей E^(t) на X_cons и X_diss
    при t ↓ 0.
    """
    report = classify(form)
    x_cons = report.x_cons
    x_diss = report.x_diss

    time_spaces, beta_spaces = {}, {}
    drift, gap = 0.0, math.inf
    for kind, grid, store in (("time", t_grid, time_spaces), ("resolvent", beta_grid, beta_spaces)):
        for param in grid:
            space, deviation = _approx_conservative_space(form, kind, float(param))
            store[float(param)] = space
            if x_cons:
                drift = max(drift, float(deviation[list(x_cons)].max()))
            if x_diss:
                gap = min(gap, float(deviation[list(x_diss)].min()))
    equal = all(space == x_cons for space in list(time_spaces.values()) + list(beta_spaces.values()))

    corollary_reports: Dict[str, MoscoReport] = {}
    if corollary and form.n:
        terms = [time_dependent_form(form, t) for t in COROLLARY_T_SEQUENCE]
        seq = build_sequence(terms, form, "increasing", COROLLARY_T_SEQUENCE, name="time-dependent", seed=seed)
        for name, subset in (("cons", x_cons), ("diss", x_diss)):
            if subset:
                corollary_reports[name] = part_convergence_check(seq, subset, jobs=jobs, seed=seed)
    return ApproxSpacesReport(
        x_cons=x_cons,
        time_spaces=time_spaces,
        beta_spaces=beta_spaces,
        equal=equal,
        cons_drift=drift,
        diss_gap=gap if x_diss else math.inf,
        corollary=corollary_reports,
    )


def _check_odd_grid(grid_n: int) -> int:
    grid_n = int(grid_n)
    if grid_n < 3 or grid_n % 2 == 0:
        raise EvenGrid(f"Нужна нечетная сетка (≥ 3 узлов), чтобы узел попал в 0; получено {grid_n}")
    return grid_n


def _grid_labels(grid_n: int, spacing_h: float, origin: float) -> List[str]:
    return [f"{origin + i * spacing_h:.6g}" for i in range(grid_n)]


def delta_example_sequence(
    grid_n: int = DELTA_GRID,
    spacing_h: float = DELTA_SPACING,
    couplings: Sequence[float] = DELTA_COUPLINGS,
) -> FormSequence:
    """
    ∫(u′)² dx + k·u(0)² на сетке: веса 1/h, мера h, убивание k в центре.

    Предел — форма в широком смысле с ограничением u(0) = 0; левая и правая
    половины становятся инвариантными.

    :raises EvenGrid, NotMonotone
    """
    grid_n = _check_odd_grid(grid_n)
    couplings = tuple(float(k) for k in couplings)
    if any(k <= 0 for k in couplings) or any(b <= a for a, b in zip(couplings, couplings[1:])):
        raise NotMonotone("Константы связи должны быть положительными и строго возрастать")
    center = grid_n // 2
    labels = _grid_labels(grid_n, spacing_h, -center * spacing_h)
    terms = [path_graph_form(grid_n, 1.0 / spacing_h, spacing_h, {center: k}, labels) for k in couplings]
    limit = WideSenseForm(path_graph_form(grid_n, 1.0 / spacing_h, spacing_h, None, labels), (center,))
    metadata = {"center": center, "left": tuple(range(center)), "right": tuple(range(center + 1, grid_n))}
    return build_sequence(terms, limit, "increasing", couplings, name="delta1", metadata=metadata)


def many_delta_sequence(
    window: Tuple[float, float] = MANY_DELTA_WINDOW,
    spacing_h: float = MANY_DELTA_SPACING,
    couplings: Sequence[float] = MANY_DELTA_COUPLINGS,
) -> FormSequence:
    """
    Убивание k в каждом целом узле окна; предел ограничивает все целые узлы,
    и каждый блок между соседними целыми становится инвариантным.

    :raises ParameterError: Если шаг не делит окно или целых узлов меньше двух
    """
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise ParameterError(f"Окно должно быть непустым, получено {window}")
    steps = int(round((b - a) / spacing_h))
    if steps < 2 or abs(steps * spacing_h - (b - a)) > 1e-9 * max(1.0, b - a):
        raise ParameterError(f"Шаг {spacing_h} не делит окно [{a}, {b}]")
    couplings = tuple(float(k) for k in couplings)
    if any(k <= 0 for k in couplings) or any(y <= x for x, y in zip(couplings, couplings[1:])):
        raise NotMonotone("Константы связи должны быть положительными и строго возрастать")

    grid_n = steps + 1
    coordinates = a + spacing_h * np.arange(grid_n)
    integer_nodes = [i for i, x in enumerate(coordinates) if abs(x - round(x)) < 1e-9]
    if len(integer_nodes) < 2:
        raise ParameterError("Окно должно содержать хотя бы два целых узла")
    blocks = tuple(
        tuple(range(left + 1, right)) for left, right in zip(integer_nodes, integer_nodes[1:]) if right - left > 1
    )
    labels = [f"{x:.6g}" for x in coordinates]
    terms = [
        path_graph_form(grid_n, 1.0 / spacing_h, spacing_h, {i: k for i in integer_nodes}, labels) for k in couplings
    ]
    limit = WideSenseForm(path_graph_form(grid_n, 1.0 / spacing_h, spacing_h, None, labels), tuple(integer_nodes))
    metadata = {"integer_nodes": tuple(integer_nodes), "blocks": blocks}
    return build_sequence(terms, limit, "increasing", couplings, name="deltaZ", metadata=metadata)


def vanishing_sequence(
    grid_n: int = DELTA_GRID,
    spacing_h: float = DELTA_SPACING,
    scalings: Sequence[float] = VANISH_SCALINGS,
) -> FormSequence:
    """
    s·∫(u′)² dx + u(0)²: веса s/h, убивание 1 в центре, s ↓ 0.

    На конечной сетке предел — точечная форма u(center)² (она замкнута);
    при постоянных s предел совпадает с членами.

    :raises EvenGrid, NotMonotone
    """
    grid_n = _check_odd_grid(grid_n)
    scalings = tuple(float(s) for s in scalings)
    if any(s <= 0 for s in scalings) or any(b > a for a, b in zip(scalings, scalings[1:])):
        raise NotMonotone("Масштабы должны быть положительными и не возрастать")
    center = grid_n // 2
    labels = _grid_labels(grid_n, spacing_h, -center * spacing_h)
    terms = [path_graph_form(grid_n, s / spacing_h, spacing_h, {center: 1.0}, labels) for s in scalings]
    if len(set(scalings)) == 1:
        limit = path_graph_form(grid_n, scalings[0] / spacing_h, spacing_h, {center: 1.0}, labels)
    else:
        killing = np.zeros(grid_n)
        killing[center] = 1.0
        limit = build_form(sp.csr_matrix((grid_n, grid_n)), killing, np.full(grid_n, spacing_h), labels=labels)
    return build_sequence(terms, limit, "decreasing", scalings, name="vanish", metadata={"center": center})
