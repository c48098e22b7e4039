"""Тесты таблицы граничных правил."""

import json

import pytest

from src.modeling.rule_engine import (
    BOUNDARY_CLASSES,
    RECURRENT,
    TRANSIENT,
    UNCLASSIFIED,
    BoundaryRuleEngine,
)


class TestDefaultRules:
    def test_table_is_complete(self):
        engine = BoundaryRuleEngine()
        assert len(engine.patterns()) == len(BOUNDARY_CLASSES) ** 2

    @pytest.mark.parametrize(
        "lower,upper,verdict",
        [
            ("reflecting", "reflecting", RECURRENT),
            ("reflecting", "non_approachable", RECURRENT),
            ("non_approachable", "non_approachable", RECURRENT),
            ("non_approachable", "exit", TRANSIENT),
            ("exit", "reflecting", TRANSIENT),
            ("exit", "exit", TRANSIENT),
        ],
    )
    def test_verdicts(self, lower, upper, verdict):
        rule = BoundaryRuleEngine().match_pattern(lower, upper)
        assert rule["verdict"] == verdict
        assert rule["pattern"] == f"{lower}|{upper}"

    def test_unknown_pattern(self):
        assert BoundaryRuleEngine().match_pattern("sticky", "exit")["verdict"] == UNCLASSIFIED


class TestOverrides:
    def test_file_overrides_rule(self, tmp_path):
        path = tmp_path / "rules.json"
        path.write_text(json.dumps({"exit|exit": {"verdict": "Unclassified", "reason": "вручную"}}), encoding="utf-8")
        engine = BoundaryRuleEngine(str(path))
        assert engine.match_pattern("exit", "exit")["reason"] == "вручную"
        assert engine.match_pattern("exit", "reflecting")["verdict"] == TRANSIENT

    def test_missing_file_keeps_defaults(self, tmp_path, capsys):
        engine = BoundaryRuleEngine(str(tmp_path / "absent.json"))
        assert engine.match_pattern("reflecting", "reflecting")["verdict"] == RECURRENT
        assert "⚠" in capsys.readouterr().out

    def test_broken_file_keeps_defaults(self, tmp_path):
        path = tmp_path / "rules.json"
        path.write_text("{not json", encoding="utf-8")
        assert BoundaryRuleEngine(str(path)).match_pattern("exit", "exit")["verdict"] == TRANSIENT

    def test_invalid_verdict(self):
        with pytest.raises(ValueError):
            BoundaryRuleEngine().add_rule("exit|exit", "Recurrentish", "")

    def test_saved_table_loads_back(self, tmp_path):
        engine = BoundaryRuleEngine()
        engine.add_rule("reflecting|exit", RECURRENT, "для проверки")
        path = tmp_path / "nested" / "rules.json"
        engine.save_rules(str(path))
        assert BoundaryRuleEngine(str(path)).match_pattern("reflecting", "exit")["verdict"] == RECURRENT
