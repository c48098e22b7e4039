"""
Текстовое представление отчетов.

Таблицы строятся из раздела tables отчета, то есть из того же JSON, и
печатаются через polars.
"""

from typing import Any, Dict, List

import polars as pl


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return "{" + ", ".join(_cell(v) for v in value) + "}"
    if value is None:
        return "—"
    return str(value)


def rows_to_frame(rows: List[Dict[str, Any]]) -> pl.DataFrame:
    """Строки отчета в DataFrame со строковыми колонками (порядок колонок по первой строке)."""
    if not rows:
        return pl.DataFrame()
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return pl.DataFrame({c: [_cell(row.get(c)) for row in rows] for c in columns})


def render_table(title: str, rows: List[Dict[str, Any]]) -> str:
    frame = rows_to_frame(rows)
    if frame.height == 0:
        return f"{title}: (пусто)"
    with pl.Config(
        tbl_rows=-1,
        tbl_cols=-1,
        tbl_width_chars=240,
        fmt_str_lengths=120,
        tbl_hide_dataframe_shape=True,
        tbl_hide_column_data_types=True,
        tbl_formatting="ASCII_MARKDOWN",
    ):
        return f"{title}\n{frame}"


def render_report(report: Dict[str, Any]) -> str:
    """
    Текстовая сводка отчета: заголовок, таблицы, проверки и диагностика.

    :param report: Словарь из build_report
    :return: Многострочный текст
    """
    lines = [f"📊 {report['command']} (schema {report['schema_version']}, digest {report['input_digest'][:12]})"]
    for title, rows in report.get("tables", {}).items():
        lines.append("")
        lines.append(render_table(title, rows))

    checks = report.get("checks", {})
    if checks:
        lines.append("")
        lines.append(render_table("checks", [{"check": k, "passed": "✅" if v else "❌"} for k, v in checks.items()]))
    diagnostics = report.get("diagnostics", [])
    if diagnostics:
        lines.append("")
        lines.extend(f"⚠ {d}" for d in diagnostics)
    if "wall_time_seconds" in report:
        lines.append(f"\nВремя: {report['wall_time_seconds']:.3f} с")
    return "\n".join(lines)
