"""Утилиты: конфигурация и символьные выражения."""

from src.utils.config import get_cached_config, get_config, reset_cached_config

# Expression импортируется напрямую из src.utils.expressions (sympy грузится долго)

__all__ = [
    "get_config",
    "get_cached_config",
    "reset_cached_config",
]
