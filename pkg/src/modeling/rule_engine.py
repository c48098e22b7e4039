"""
Таблица правил для классов граничных точек.

Сопоставляет паре классов концов интервала (reflecting, exit,
non_approachable) вердикт о возвратности.
"""

import json
from pathlib import Path
from typing import Dict, List, Optional

BOUNDARY_CLASSES = ("reflecting", "exit", "non_approachable")

RECURRENT = "Recurrent"
TRANSIENT = "Transient"
UNCLASSIFIED = "Unclassified"


def _default_rules() -> Dict[str, Dict[str, str]]:
    rules = {}
    for lower in BOUNDARY_CLASSES:
        for upper in BOUNDARY_CLASSES:
            if "exit" in (lower, upper):
                verdict, reason = TRANSIENT, "процесс может покинуть интервал через достижимый нерегулярный конец"
            else:
                verdict, reason = RECURRENT, "каждый конец отражающий или недостижимый"
            rules[f"{lower}|{upper}"] = {"verdict": verdict, "reason": reason}
    return rules


class BoundaryRuleEngine:
    """
    Движок правил: (класс нижнего конца, класс верхнего конца) -> вердикт.
    """

    def __init__(self, rules_path: Optional[str] = None):
        """
        :param rules_path: JSON-файл, переопределяющий встроенную таблицу
        """
        self.rules_path = rules_path
        self.rules: Dict[str, Dict[str, str]] = _default_rules()
        self.load_rules()

    def load_rules(self) -> None:
        """Загружает переопределения из файла, если он задан и существует."""
        if not self.rules_path:
            return
        rules_file = Path(self.rules_path)
        if not rules_file.exists():
            print(f"⚠ Файл правил {rules_file} не найден, используется встроенная таблица")
            return
        try:
            with open(rules_file, "r", encoding="utf-8") as f:
                overrides = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            print(f"❌ Ошибка загрузки правил: {e}")
            return
        for pattern, rule in overrides.items():
            self.add_rule(pattern, rule.get("verdict", UNCLASSIFIED), rule.get("reason", ""))

    def save_rules(self, path: Optional[str] = None) -> None:
        """Сохраняет текущую таблицу в JSON."""
        rules_file = Path(path or self.rules_path)
        rules_file.parent.mkdir(parents=True, exist_ok=True)
        with open(rules_file, "w", encoding="utf-8") as f:
            json.dump(self.rules, f, ensure_ascii=False, indent=2)

    def add_rule(self, pattern: str, verdict: str, reason: str) -> None:
        """
        Добавляет или заменяет правило.

        :param pattern: Строка вида "lower|upper"
        :param verdict: Recurrent, Transient или Unclassified
        :param reason: Пояснение для отчета
        """
        if verdict not in (RECURRENT, TRANSIENT, UNCLASSIFIED):
            raise ValueError(f"Неизвестный вердикт правила: {verdict}")
        self.rules[pattern] = {"verdict": verdict, "reason": reason}

    def match_pattern(self, lower: str, upper: str) -> Dict[str, str]:
        """
        Находит правило для пары классов концов.

        :return: Словарь pattern/verdict/reason; Unclassified, если правила нет
        """
        pattern = f"{lower}|{upper}"
        if pattern in self.rules:
            return {"pattern": pattern, **self.rules[pattern]}
        return {"pattern": pattern, "verdict": UNCLASSIFIED, "reason": "нет правила для этой конфигурации"}

    def patterns(self) -> List[str]:
        return sorted(self.rules)
