"""
Разбор и проверка JSON-спецификаций.

Каждая ошибка превращается в SpecFileError с путем к полю (edges[3],
terms[1].measure) и, для синтаксических ошибок JSON, номером строки.
"""

import json
import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from src.errors import DiffusionError, FormError, SpecFileError
from src.features.forms import FiniteDirichletForm, build_form
from src.modeling.diffusion import (
    BirthDeathSpec,
    DiffusionSpec,
    Interval,
    custom_atoms,
    power_atoms,
)
from src.modeling.mosco import MONOTONE_TAGS, FormSequence, WideSenseForm, build_sequence
from src.utils.expressions import Expression

SPEC_KINDS = ("form", "sequence", "diffusion", "vectors")


def parse_json_text(text: str, source: str = "") -> Any:
    """
    :raises SpecFileError: С номером строки при синтаксической ошибке
    """
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecFileError(f"некорректный JSON ({e.msg})", field=source, line=e.lineno) from e


def _require(data: Dict, key: str, path: str) -> Any:
    if not isinstance(data, dict):
        raise SpecFileError("ожидается объект", field=path or "$")
    if key not in data:
        raise SpecFileError("обязательное поле отсутствует", field=_join(path, key))
    return data[key]


def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _number(value: Any, path: str, allow_infinite: bool = False) -> float:
    if isinstance(value, str) and allow_infinite and value.strip() in ("inf", "+inf", "-inf"):
        return float(value.strip())
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecFileError(f"ожидается число, получено {value!r}", field=path)
    value = float(value)
    if not allow_infinite and not math.isfinite(value):
        raise SpecFileError("значение должно быть конечным", field=path)
    return value


def _number_list(value: Any, path: str, length: Optional[int] = None) -> np.ndarray:
    if not isinstance(value, list):
        raise SpecFileError("ожидается список чисел", field=path)
    if length is not None and len(value) != length:
        raise SpecFileError(f"ожидается {length} значений, получено {len(value)}", field=path)
    return np.array([_number(v, _join(path, i)) for i, v in enumerate(value)], dtype=float)


def parse_edges(edges: Any, n: int, path: str = "edges") -> List[Tuple[int, int, float]]:
    """Список [i, j, w]: индексы в диапазоне, w ≥ 0, каждое ребро один раз."""
    if not isinstance(edges, list):
        raise SpecFileError("ожидается список ребер [i, j, weight]", field=path)
    seen = set()
    parsed = []
    for k, edge in enumerate(edges):
        where = _join(path, k)
        if not isinstance(edge, list) or len(edge) != 3:
            raise SpecFileError("ребро должно быть тройкой [i, j, weight]", field=where)
        i, j = edge[0], edge[1]
        if isinstance(i, bool) or isinstance(j, bool) or not isinstance(i, int) or not isinstance(j, int):
            raise SpecFileError("индексы ребра должны быть целыми", field=where)
        if not (0 <= i < n and 0 <= j < n):
            raise SpecFileError(f"индекс вне диапазона 0..{n - 1}: ({i}, {j})", field=where)
        if i == j:
            raise SpecFileError("петли не допускаются", field=where)
        weight = _number(edge[2], _join(where, 2))
        if weight < 0:
            raise SpecFileError(f"отрицательный вес {weight:g}", field=where)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise SpecFileError(f"ребро {key} указано повторно", field=where)
        seen.add(key)
        parsed.append((i, j, weight))
    return parsed


def parse_form(data: Any, path: str = "") -> FiniteDirichletForm:
    """
    Форма из объекта {n, edges, killing, measure, labels?}.

    :raises SpecFileError: Нарушение схемы или проверок build_form
    """
    n = _require(data, "n", path)
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise SpecFileError("n должно быть неотрицательным целым", field=_join(path, "n"))
    edges = parse_edges(_require(data, "edges", path), n, _join(path, "edges"))
    killing = _number_list(_require(data, "killing", path), _join(path, "killing"), n)
    measure = _number_list(_require(data, "measure", path), _join(path, "measure"), n)
    labels = data.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != n:
            raise SpecFileError(f"ожидается {n} подписей", field=_join(path, "labels"))
        labels = [str(label) for label in labels]

    weights = sp.lil_matrix((n, n))
    for i, j, w in edges:
        weights[i, j] = w
        weights[j, i] = w
    try:
        return build_form(weights.tocsr(), killing, measure, labels=labels)
    except FormError as e:
        raise SpecFileError(str(e), field=path or "$") from e


def form_to_spec(form: FiniteDirichletForm) -> Dict[str, Any]:
    """Обратное преобразование: объект, который снова проходит parse_form."""
    rows, cols, data = form.edge_list()
    spec = {
        "kind": "form",
        "n": form.n,
        "edges": [[int(i), int(j), float(w)] for i, j, w in zip(rows, cols, data) if w > 0],
        "killing": [float(k) for k in form.killing],
        "measure": [float(m) for m in form.measure],
    }
    if form.labels:
        spec["labels"] = list(form.labels)
    return spec


def parse_vectors(data: Any, n: int, path: str = "vectors") -> np.ndarray:
    """Один вектор (список) или список векторов; объект с полем vectors тоже допустим."""
    if isinstance(data, dict):
        data = _require(data, "vectors", "")
    if not isinstance(data, list) or not data:
        raise SpecFileError("ожидается непустой список", field=path)
    rows = data if isinstance(data[0], list) else [data]
    return np.vstack([_number_list(row, _join(path, k), n) for k, row in enumerate(rows)])


def parse_rho(data: Any, n: int) -> np.ndarray:
    if isinstance(data, dict):
        data = _require(data, "rho", "")
    rho = _number_list(data, "rho", n)
    if np.any(rho <= 0):
        raise SpecFileError("плотность ρ должна быть строго положительной", field="rho")
    return rho


def parse_sequence(data: Any, seed: Optional[int] = None) -> FormSequence:
    """
    Последовательность {terms, limit, monotone?, parameters?, name?}.

    limit — форма или {"base": форма, "constraint": [индексы]} (форма в широком смысле).
    """
    terms_data = _require(data, "terms", "")
    if not isinstance(terms_data, list) or not terms_data:
        raise SpecFileError("ожидается непустой список форм", field="terms")
    terms = [parse_form(term, _join("terms", k)) for k, term in enumerate(terms_data)]

    limit_data = _require(data, "limit", "")
    if isinstance(limit_data, dict) and "base" in limit_data:
        base = parse_form(limit_data["base"], "limit.base")
        constraint = limit_data.get("constraint", [])
        if not isinstance(constraint, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in constraint):
            raise SpecFileError("ожидается список индексов", field="limit.constraint")
        try:
            limit = WideSenseForm(base, tuple(constraint))
        except ValueError as e:
            raise SpecFileError(str(e), field="limit.constraint") from e
    else:
        limit = parse_form(limit_data, "limit")

    monotone = data.get("monotone", "none")
    if monotone not in MONOTONE_TAGS:
        raise SpecFileError(f"допустимо: {', '.join(MONOTONE_TAGS)}", field="monotone")
    parameters = data.get("parameters")
    if parameters is not None:
        parameters = _number_list(parameters, "parameters", len(terms)).tolist()
    try:
        return build_sequence(terms, limit, monotone, parameters, name=str(data.get("name", "")), seed=seed)
    except ValueError as e:
        raise SpecFileError(str(e), field="terms") from e


def _parse_expression(value: Any, path: str, variable: str = "x") -> Expression:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = repr(float(value))
    if not isinstance(value, str):
        raise SpecFileError("ожидается выражение-строка", field=path)
    try:
        return Expression(value, variable=variable)
    except DiffusionError as e:
        raise SpecFileError(str(e), field=path) from e


def parse_interval(data: Any, path: str) -> Interval:
    name = str(_require(data, "name", path))
    lower = _number(_require(data, "lower", path), _join(path, "lower"), allow_infinite=True)
    upper = _number(_require(data, "upper", path), _join(path, "upper"), allow_infinite=True)
    include_lower = bool(data.get("include_lower", not math.isinf(lower)))
    include_upper = bool(data.get("include_upper", not math.isinf(upper)))
    reference = _number(_require(data, "reference", path), _join(path, "reference"))
    try:
        return Interval(name, lower, upper, include_lower, include_upper, reference)
    except DiffusionError as e:
        raise SpecFileError(str(e), field=path) from e


def parse_birth_death(data: Any, path: str = "birth_death") -> BirthDeathSpec:
    """{"start"?, "atoms": {"family": "power", "p", "coefficient"?} | {"family": "custom", "expression", "mass_infinite"?}}."""
    start = data.get("start", 2) if isinstance(data, dict) else 2
    atoms = _require(data, "atoms", path)
    family = _require(atoms, "family", _join(path, "atoms"))
    where = _join(path, "atoms")
    try:
        if family == "power":
            p = _number(_require(atoms, "p", where), _join(where, "p"))
            coefficient = _number(atoms.get("coefficient", 1.0), _join(where, "coefficient"))
            return power_atoms(p, coefficient, int(start))
        if family == "custom":
            expression = _require(atoms, "expression", where)
            mass_infinite = atoms.get("mass_infinite")
            return custom_atoms(str(expression), int(start), None if mass_infinite is None else bool(mass_infinite))
    except DiffusionError as e:
        raise SpecFileError(str(e), field=where) from e
    raise SpecFileError("допустимо: power, custom", field=_join(where, "family"))


def parse_diffusion(data: Any) -> Tuple[DiffusionSpec, Optional[BirthDeathSpec]]:
    """
    Спецификация диффузии и, если задан раздел birth_death, цепи.

    :raises SpecFileError: Нарушение схемы или проверок DiffusionSpec
    """
    scale = _parse_expression(_require(data, "scale", ""), "scale")
    density = _parse_expression(_require(data, "speed_density", ""), "speed_density")
    intervals_data = _require(data, "intervals", "")
    if not isinstance(intervals_data, list) or not intervals_data:
        raise SpecFileError("ожидается непустой список интервалов", field="intervals")
    intervals = tuple(parse_interval(item, _join("intervals", k)) for k, item in enumerate(intervals_data))

    atoms = []
    for k, atom in enumerate(data.get("atoms", [])):
        if not isinstance(atom, list) or len(atom) != 2:
            raise SpecFileError("атом должен быть парой [x, mass]", field=_join("atoms", k))
        atoms.append((_number(atom[0], _join("atoms", k)), _number(atom[1], _join("atoms", k))))

    declared = {}
    for key, value in (data.get("limits") or {}).items():
        if ":" not in key:
            raise SpecFileError("ключ предела имеет вид 'interval:lower|upper'", field=_join("limits", key))
        interval_name, which = key.split(":", 1)
        declared[(interval_name, which)] = _number(value, _join("limits", key), allow_infinite=True)

    try:
        spec = DiffusionSpec(
            name=str(data.get("name", "diffusion")),
            scale=scale,
            speed_density=density,
            intervals=intervals,
            atoms=tuple(atoms),
            declared_limits=declared,
        )
    except DiffusionError as e:
        raise SpecFileError(str(e), field="intervals") from e
    chain = parse_birth_death(data["birth_death"]) if "birth_death" in data else None
    return spec, chain


def detect_kind(data: Any) -> str:
    """Тип спецификации по полю kind или по набору полей."""
    if isinstance(data, dict):
        kind = data.get("kind")
        if kind is not None:
            if kind not in SPEC_KINDS:
                raise SpecFileError(f"допустимо: {', '.join(SPEC_KINDS)}", field="kind")
            return kind
        if "terms" in data:
            return "sequence"
        if "scale" in data:
            return "diffusion"
        if "edges" in data:
            return "form"
    if isinstance(data, list):
        return "vectors"
    raise SpecFileError("не удалось определить тип спецификации", field="kind")


def subset_from_text(text: str, n: int) -> Tuple[int, ...]:
    """'0,2,5' -> (0, 2, 5)."""
    items = [item.strip() for item in text.split(",") if item.strip()]
    try:
        subset = tuple(sorted({int(item) for item in items}))
    except ValueError as e:
        raise SpecFileError(f"некорректное множество '{text}'", field="--subset") from e
    for i in subset:
        if not 0 <= i < n:
            raise SpecFileError(f"индекс {i} вне диапазона 0..{n - 1}", field="--subset")
    return subset


def floats_from_text(text: str, field: str) -> List[float]:
    """'1,10,1e2' -> [1.0, 10.0, 100.0]."""
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise SpecFileError(f"некорректный список чисел '{text}'", field=field) from e
