"""Конечные формы Дирихле, инвариантность, квадратуры."""
