"""Сборка и отображение отчетов."""
