"""Exception hierarchy shared across the package."""

from __future__ import annotations


class WeakauditError(Exception):
    """Base class for all errors raised by this package."""


# -- dataset / store format -------------------------------------------


class StoreFormatError(WeakauditError):
    """Embedding store file does not conform to the binary format."""


class BadMagic(StoreFormatError):
    pass


class BadVersion(StoreFormatError):
    pass


class TruncatedPayload(StoreFormatError):
    pass


class NonFiniteValue(WeakauditError):
    """An embedding contains NaN or infinity."""


class IoFailure(WeakauditError):
    pass


class InvalidRecord(WeakauditError):
    """A record violates the metadata schema."""


class LengthMismatch(WeakauditError):
    pass


class DuplicateId(WeakauditError):
    pass


class DimMismatch(WeakauditError):
    pass


class ZeroBase(WeakauditError):
    pass


# -- audit -------------------------------------------------------------


class NoNeighbors(WeakauditError):
    pass


class MissingPrediction(WeakauditError):
    pass


# -- association review -----------------------------------------------


class UnknownObjectId(WeakauditError):
    pass


class MissingObjects(WeakauditError):
    pass


class UnknownKey(WeakauditError):
    pass


# -- prompt construction ----------------------------------------------


class EmptyLabel(WeakauditError):
    pass


class MissingCaption(WeakauditError):
    pass


# -- procurement -------------------------------------------------------


class ProviderUnavailable(WeakauditError):
    pass


class EmbedderUnavailable(WeakauditError):
    pass


# -- training / metrics -------------------------------------------------


class EmptyClass(WeakauditError):
    pass


class DivergedLoss(WeakauditError):
    pass


class VocabularyMismatch(WeakauditError):
    pass


class UnknownGroup(WeakauditError):
    pass


class ZeroBaseline(WeakauditError):
    pass


# -- orchestration -------------------------------------------------------


class InvalidSpec(WeakauditError):
    pass


class BindFailure(WeakauditError):
    pass


class StageError(WeakauditError):
    """Wraps a module error with the pipeline stage where it occurred."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
