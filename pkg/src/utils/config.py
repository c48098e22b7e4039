"""
Конфигурация времени выполнения.

Читает настройки из переменных окружения (.env файл).
Создайте .env на основе .env.example, если нужно поменять значения по умолчанию.
"""

from typing import Any, Dict, Optional
import os
from pathlib import Path

from src.constants import DEFAULT_JOBS, DEFAULT_SEED, REPORTS_DIR

# Пытаемся загрузить переменные окружения из .env файла
try:
    from dotenv import load_dotenv
    # Загружаем .env из корня проекта
    env_path = Path(__file__).parent.parent.parent / ".env"
    if env_path.exists():
        load_dotenv(env_path)
    else:
        # Пробуем загрузить из текущей директории
        load_dotenv()
except ImportError:
    # python-dotenv не установлен, используем только переменные окружения системы
    pass


def _read_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"Переменная окружения {name} должна быть целым числом, получено: {raw!r}")


def get_config() -> Dict[str, Any]:
    """
    Собирает конфигурацию из переменных окружения.

    :return: Словарь с ключами seed, jobs, reports_dir
    :raises ValueError: Если значение переменной не парсится
    """
    jobs = _read_int("DIRICHLET_JOBS", DEFAULT_JOBS)
    if jobs == 0:
        raise ValueError("DIRICHLET_JOBS не может быть равен 0")
    return {
        "seed": _read_int("DIRICHLET_SEED", DEFAULT_SEED),
        "jobs": jobs,
        "reports_dir": os.getenv("DIRICHLET_REPORTS_DIR", REPORTS_DIR),
    }


# Глобальный кэш конфигурации (инициализируется при первом вызове)
_cached_config: Optional[Dict[str, Any]] = None


def get_cached_config() -> Dict[str, Any]:
    """
    Получает конфигурацию с кэшированием.

    :return: Словарь с конфигурацией
    """
    global _cached_config
    if _cached_config is None:
        _cached_config = get_config()
    return _cached_config


def reset_cached_config() -> None:
    """Сбрасывает кэш (нужно тестам, которые меняют окружение)."""
    global _cached_config
    _cached_config = None
