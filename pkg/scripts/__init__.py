"""Скрипты для проверки готовых примеров."""
