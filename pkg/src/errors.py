"""
Исключения проекта.

Все ошибки предметной области наследуются от ValueError, поэтому
вызывающий код может ловить их как обычные ошибки валидации.
"""

from typing import Optional, Sequence


class FormError(ValueError):
    """Некорректные данные формы Дирихле."""


class AsymmetricWeights(FormError):
    pass


class NegativeEntry(FormError):
    pass


class NonFiniteEntry(FormError):
    pass


class NonpositiveMeasure(FormError):
    pass


class DimensionMismatch(FormError):
    pass


class NonPSDForm(FormError):
    pass


class ParameterError(ValueError):
    """Некорректный числовой параметр (время, β, сетка, плотность)."""


class NegativeTime(ParameterError):
    pass


class NonpositiveTime(ParameterError):
    pass


class NonpositiveBeta(ParameterError):
    pass


class UnsortedGrid(ParameterError):
    pass


class NegativeInput(ParameterError):
    pass


class NonpositiveRho(ParameterError):
    pass


class InvarianceError(ValueError):
    """Ошибки работы с инвариантными множествами и разложениями."""


class IndexOutOfRange(InvarianceError):
    pass


class NotInvariant(InvarianceError):
    pass


class EmptySubset(InvarianceError):
    pass


class NonStabilizingLimit(InvarianceError):
    pass


class NotExcessive(InvarianceError):
    pass


class Reducible(InvarianceError):
    pass


class SequenceError(ValueError):
    """Ошибки последовательностей форм (Mosco)."""


class TooFewTerms(SequenceError):
    pass


class TermNotInvariant(SequenceError):
    pass


class LimitNotInvariant(SequenceError):
    pass


class EvenGrid(SequenceError):
    pass


class NotMonotone(SequenceError):
    pass


class SequenceMismatch(SequenceError):
    pass


class DiffusionError(ValueError):
    """Ошибки одномерных диффузий и цепей рождения–гибели."""


class ExpressionError(DiffusionError):
    pass


class InvalidDiffusionSpec(DiffusionError):
    pass


class EvaluationFailure(DiffusionError):
    pass


class AmbiguousTail(DiffusionError):
    """Ни критерий сходимости, ни критерий расходимости не выполнен."""

    def __init__(self, message: str, stage_values: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.stage_values = list(stage_values or [])


class NonpositiveAtom(DiffusionError):
    pass


class FiniteSpeedMass(DiffusionError):
    pass


class SpecFileError(ValueError):
    """Ошибка входного файла CLI с указанием поля и строки."""

    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        location = field
        if line is not None:
            location = f"{location} (строка {line})" if location else f"строка {line}"
        super().__init__(f"{location}: {message}" if location else message)
        self.field = field
        self.line = line
