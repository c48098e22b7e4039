"""
Модуль для загрузки спецификаций из локальных файлов.

JSON-файлы форм, последовательностей, диффузий и векторов. Поле edges
формы может ссылаться на таблицу ребер (CSV или Parquet с колонками
i, j, weight), которая читается через polars.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
import polars as pl

from src.errors import SpecFileError
from src.features.forms import FiniteDirichletForm
from src.data.spec_parser import (
    parse_diffusion,
    parse_form,
    parse_json_text,
    parse_rho,
    parse_sequence,
    parse_vectors,
)
from src.modeling.diffusion import BirthDeathSpec, DiffusionSpec
from src.modeling.mosco import FormSequence

EDGE_COLUMNS = ("i", "j", "weight")


def read_text(path: str) -> str:
    file_path = Path(path)
    if not file_path.exists():
        raise SpecFileError(f"файл не найден: {file_path}", field=str(file_path))
    return file_path.read_text(encoding="utf-8")


def file_digest(path: str) -> str:
    """sha256 содержимого входного файла."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_json(path: str) -> Any:
    """
    Загружает JSON-файл.

    :param path: Путь к файлу
    :return: Разобранный объект
    :raises SpecFileError: Если файла нет или JSON некорректен (с номером строки)
    """
    data = parse_json_text(read_text(path), source=Path(path).name)
    print(f"📁 Загружен {path}")
    return data


def load_edge_table(path: str, base_dir: Optional[Path] = None) -> list:
    """
    Читает таблицу ребер через polars.

    :param path: CSV или Parquet с колонками i, j, weight
    :param base_dir: Каталог, относительно которого разрешается путь
    :return: Список [i, j, weight]
    """
    table_path = Path(path)
    if base_dir is not None and not table_path.is_absolute():
        table_path = base_dir / table_path
    if not table_path.exists():
        raise SpecFileError(f"таблица ребер не найдена: {table_path}", field="edges")
    try:
        if table_path.suffix in (".pq", ".parquet"):
            df = pl.read_parquet(table_path)
        else:
            df = pl.read_csv(table_path)
    except Exception as e:
        raise SpecFileError(f"не удалось прочитать таблицу ребер: {e}", field="edges") from e

    missing = [c for c in EDGE_COLUMNS if c not in df.columns]
    if missing:
        raise SpecFileError(f"нет колонок {missing}, доступны {df.columns}", field="edges")
    df = df.select(
        pl.col("i").cast(pl.Int64),
        pl.col("j").cast(pl.Int64),
        pl.col("weight").cast(pl.Float64),
    )
    print(f"📊 Таблица ребер {table_path.name}: {df.height} строк")
    return [[int(i), int(j), float(w)] for i, j, w in df.iter_rows()]


def _resolve_edges(data: Dict, base_dir: Path) -> Dict:
    if isinstance(data, dict) and isinstance(data.get("edges"), str):
        data = dict(data)
        data["edges"] = load_edge_table(data["edges"], base_dir)
    return data


def load_form(path: str) -> FiniteDirichletForm:
    """Загружает и проверяет форму из JSON-файла."""
    data = _resolve_edges(load_json(path), Path(path).parent)
    form = parse_form(data)
    print(f"✅ Форма: {form.n} вершин, {len(form.edge_list()[2])} ребер")
    return form


def load_sequence(path: str, seed: Optional[int] = None) -> FormSequence:
    data = load_json(path)
    if isinstance(data, dict):
        base_dir = Path(path).parent
        data = dict(data)
        data["terms"] = [_resolve_edges(term, base_dir) for term in data.get("terms", [])]
    seq = parse_sequence(data, seed=seed)
    print(f"✅ Последовательность '{seq.name}': {len(seq)} членов, n = {seq.n}")
    return seq


def load_diffusion(path: str) -> Tuple[DiffusionSpec, Optional[BirthDeathSpec]]:
    spec, chain = parse_diffusion(load_json(path))
    print(f"✅ Диффузия '{spec.name}': {len(spec.intervals)} интервал(ов)")
    return spec, chain


def load_vectors(path: str, n: int) -> np.ndarray:
    return parse_vectors(load_json(path), n)


def load_rho(path: str, n: int) -> np.ndarray:
    return parse_rho(load_json(path), n)


def save_json(path: str, payload: Any) -> Path:
    """Сохраняет объект в JSON (отступ 2, ключи по порядку вставки, UTF-8)."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)
        f.write("\n")
    return file_path
