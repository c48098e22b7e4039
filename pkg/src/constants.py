"""
Константы проекта.

Все допуски, сетки параметров и значения по умолчанию собраны здесь,
чтобы отчеты могли явно перечислять использованные допуски.
"""

# Допуски
TOL_ALGEBRAIC = 1e-12      # алгебраические тождества в замкнутой форме
TOL_SPECTRAL = 1e-10       # тождества через одно спектральное преобразование
TOL_LIMIT = 1e-6           # приближения предела при конечном параметре
TOL_SYMMETRY = 1e-12       # симметрия весов (относительно max|w|)

# Собственные значения: ниже -EIGEN_CLAMP обнуляем, ниже -EIGEN_ERROR ошибка
# (оба порога умножаются на max(1, ||S||))
EIGEN_CLAMP = 1e-12
EIGEN_ERROR = 1e-10

# Инвариантность
INVARIANCE_TIMES = (0.1, 1.0)
INVARIANCE_BETA = 1.0
INVARIANCE_TOL = 1e-10
LIMIT_INVARIANCE_TOL = 1e-9
PRESERVATION_TIMES = (0.5, 1.0)

# След (trace) формы: регуляризация λ ↓ 0
TRACE_LAMBDAS = (1e-6, 1e-9, 1e-12)
TRACE_STABILIZATION_TOL = 1e-8

# Оператор Грина
GREEN_CHECKPOINTS = tuple(10.0 ** j for j in range(0, 11))
GREEN_GROWTH_FACTOR = 2.0
GREEN_DIVERGENCE_SCALE = 1e6
GREEN_ORACLE_TOL = 1e-8

# Консервативность
CONSERVATIVE_TOL = 1e-9
CONSERVATIVE_TIMES = (1.0, 10.0)
DISSIPATIVE_PROBE_TIME = 1.0

# Приближения Деньи–Иосиды и по времени
DEFAULT_T_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)
DEFAULT_BETA_GRID = (1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3)
APPROX_SEMIGROUP_TIMES = (1.0, 10.0)
APPROX_INVARIANCE_TIMES = (0.5, 1.0)
APPROX_NONINVARIANCE_TOL = 1e-6
COROLLARY_T_SEQUENCE = tuple(10.0 ** -j for j in range(0, 7))

# Mosco
MOSCO_TOL = 1e-3
MOSCO_CONSTANT_TOL = 1e-8
MOSCO_MIN_TERMS = 3
MOSCO_TAIL = 3
MONOTONE_SLACK = 1e-12
DEFAULT_TEST_VECTORS = 5
EMERGENT_TERM_GAP = 1e-3

# Примеры последовательностей по умолчанию
DELTA_GRID = 201
DELTA_SPACING = 0.05
DELTA_COUPLINGS = (1.0, 10.0, 100.0, 1000.0, 1e4)
MANY_DELTA_WINDOW = (0.0, 3.0)
MANY_DELTA_SPACING = 0.1
MANY_DELTA_COUPLINGS = (1.0, 10.0, 100.0)
VANISH_SCALINGS = tuple(10.0 ** -j for j in range(0, 8))

# Несобственные интегралы
INTEGRAL_STAGES = 8
INTEGRAL_FACTOR = 10.0
INTEGRAL_CAP = 1e6
INTEGRAL_REL_TOL = 1e-6
INTEGRAL_SHRINK_RATIO = 0.9
INTEGRAL_GROWTH_WINDOW = 4

# Шкала: экстраполяция предела и расхождение с объявленным значением
SCALE_APPROACH_STEPS = 9
SCALE_INFINITY_THRESHOLD = 1e6
SCALE_CONFLICT_TOL = 1e-3
SPEC_SAMPLE_POINTS = 64

# Цепи рождения–гибели
BIRTH_DEATH_CHECKPOINTS = (100, 1000, 10_000, 100_000)
SERIES_GROWTH_RATIO = 0.9
SERIES_SHRINK_RATIO = 0.5

# CLI и отчеты
SCHEMA_VERSION = "1.0"
DEFAULT_SEED = 20240611
DEFAULT_JOBS = 1
REPORTS_DIR = "reports"
