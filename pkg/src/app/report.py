"""
Сборка отчетов CLI.

Отчет детерминирован: одинаковые входы и флаги дают побайтно одинаковый
JSON. Время работы добавляется только по явному запросу (--timing).
"""

import hashlib
import json
import math
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from src.constants import SCHEMA_VERSION


def to_jsonable(value: Any) -> Any:
    """Рекурсивно приводит numpy-типы, кортежи и ±inf/nan к строгому JSON."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def input_digest(parts: Iterable[str]) -> str:
    """sha256 по содержимому входов и нормализованным флагам."""
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


def build_report(
    command: str,
    argv: List[str],
    digest: str,
    payload: Dict[str, Any],
    checks: Dict[str, bool],
    tolerances: Dict[str, float],
    diagnostics: Optional[List[str]] = None,
    tables: Optional[Dict[str, List[Dict[str, Any]]]] = None,
    wall_time: Optional[float] = None,
) -> Dict[str, Any]:
    """
    Собирает словарь отчета.

    :param command: Имя подкоманды
    :param argv: Аргументы командной строки (эхо)
    :param digest: Дайджест входов
    :param payload: Результат вычисления
    :param checks: Проверки pass/fail
    :param tolerances: Использованные допуски
    :param diagnostics: Численные предупреждения
    :param tables: Строки текстовых таблиц (рендеринг тех же данных)
    :param wall_time: Время работы в секундах (только с --timing)
    :return: JSON-совместимый словарь
    """
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "argv": list(argv),
        "input_digest": digest,
        "payload": payload,
        "checks": {name: bool(ok) for name, ok in checks.items()},
        "tolerances": tolerances,
        "diagnostics": list(diagnostics or []),
        "tables": tables or {},
    }
    if wall_time is not None:
        report["wall_time_seconds"] = round(float(wall_time), 6)
    return to_jsonable(report)


def report_passed(report: Dict[str, Any]) -> bool:
    return all(report.get("checks", {}).values())


def dumps(report: Dict[str, Any]) -> str:
    return json.dumps(report, ensure_ascii=False, indent=2)
