"""Domain errors shared by every engine module.

Each error carries a stable machine-readable ``code`` string. The CLI prints
``code: message`` and exits 1; the HTTP gateway maps codes onto status codes
and returns them in the response body. Codes never change once released.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all domain errors."""

    code = "EngineError"

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


# --- vocabulary ---------------------------------------------------------


class DuplicateClass(EngineError):
    code = "DuplicateClass"


class EmptyName(EngineError):
    code = "EmptyName"


class UnknownClass(EngineError):
    code = "UnknownClass"


class DuplicateAttribute(EngineError):
    code = "DuplicateAttribute"


class UnknownTargetClass(EngineError):
    code = "UnknownTargetClass"


class ArityTooSmall(EngineError):
    code = "ArityTooSmall"


class InvalidVocabulary(EngineError):
    code = "InvalidVocabulary"


# --- store ---------------------------------------------------------------


class UnknownObject(EngineError):
    code = "UnknownObject"


class UnknownAttribute(EngineError):
    code = "UnknownAttribute"


class KindMismatch(EngineError):
    code = "KindMismatch"


class MissingRequired(EngineError):
    code = "MissingRequired"


class DanglingLink(EngineError):
    code = "DanglingLink"


class DuplicateKey(EngineError):
    code = "DuplicateKey"


class HasIncomingLinks(EngineError):
    code = "HasIncomingLinks"


class RequiredLinkWouldDangle(EngineError):
    code = "RequiredLinkWouldDangle"


class CorruptStore(EngineError):
    code = "CorruptStore"


# --- traversal -----------------------------------------------------------


class PredicateKindMismatch(EngineError):
    code = "PredicateKindMismatch"


class ClassMismatch(EngineError):
    code = "ClassMismatch"


class UnpopulatedLink(EngineError):
    code = "UnpopulatedLink"


class StaleFocus(EngineError):
    """Raised when following from an object that is not the current focus."""

    code = "StaleFocus"


# --- recognition ---------------------------------------------------------


class EmptyPerception(EngineError):
    code = "EmptyPerception"


# --- ingest --------------------------------------------------------------


class EmptySource(EngineError):
    code = "EmptySource"


class NoHeaderRow(EngineError):
    code = "NoHeaderRow"


class NoCandidateClass(EngineError):
    code = "NoCandidateClass"


class InvalidMapping(EngineError):
    code = "InvalidMapping"


# --- reports -------------------------------------------------------------


class UnsupportedFormat(EngineError):
    code = "UnsupportedFormat"


# --- gateway -------------------------------------------------------------


class UnknownSession(EngineError):
    code = "UnknownSession"


class CorruptStoreAtStartup(EngineError):
    code = "CorruptStoreAtStartup"


class BindFailure(EngineError):
    code = "BindFailure"
