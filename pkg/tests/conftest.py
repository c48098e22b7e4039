"""Общие фикстуры тестов."""

import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.features.forms import build_form
from src.utils.config import reset_cached_config

DATA_DIR = Path(__file__).parent.parent / "data" / "examples"


def random_form(rng: np.random.Generator, n: int, density: float = 0.4, killing_rate: float = 0.3):
    """Случайная форма: разреженные веса, случайное убивание, мера в [0.5, 2]."""
    weights = np.triu(rng.uniform(0.1, 2.0, size=(n, n)) * (rng.random((n, n)) < density), k=1)
    weights = weights + weights.T
    killing = rng.uniform(0.1, 1.0, size=n) * (rng.random(n) < killing_rate)
    measure = rng.uniform(0.5, 2.0, size=n)
    return build_form(sp.csr_matrix(weights), killing, measure)


def mixed_random_form(rng: np.random.Generator, sizes=(3, 4)):
    """Две связные компоненты-пути: первая без убивания, вторая с убиванием на последней вершине."""
    n = sum(sizes)
    weights = np.zeros((n, n))
    killing = np.zeros(n)
    offset = 0
    for index, size in enumerate(sizes):
        for i in range(offset, offset + size - 1):
            weights[i, i + 1] = weights[i + 1, i] = rng.uniform(0.2, 2.0)
        if index > 0:
            killing[offset + size - 1] = rng.uniform(0.2, 1.0)
        offset += size
    measure = rng.uniform(0.5, 2.0, size=n)
    return build_form(sp.csr_matrix(weights), killing, measure)


@pytest.fixture
def two_node():
    """w = 1, k = 0, m = 1: собственные значения 0 и 2."""
    return build_form(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.0, 0.0], [1.0, 1.0])


@pytest.fixture
def two_node_killed():
    """w = 1, k = (0, 1), m = 1: Kf = (3, 2) для f = 1."""
    return build_form(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.0, 1.0], [1.0, 1.0])


@pytest.fixture
def mixed_form():
    """Компонента A = {0, 1} без убивания и B = {2, 3, 4} с убиванием на 4."""
    weights = np.zeros((5, 5))
    for i, j, w in ((0, 1, 2.0), (2, 3, 1.0), (3, 4, 0.5)):
        weights[i, j] = weights[j, i] = w
    return build_form(weights, [0.0, 0.0, 0.0, 0.0, 0.25], [1.0, 0.5, 1.0, 2.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def form_factory(rng):
    def make(n: int, **kwargs):
        return random_form(rng, n, **kwargs)

    return make


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture(autouse=True)
def clean_config(monkeypatch):
    for name in ("DIRICHLET_SEED", "DIRICHLET_JOBS", "DIRICHLET_REPORTS_DIR"):
        monkeypatch.delenv(name, raising=False)
    reset_cached_config()
    yield
    reset_cached_config()
