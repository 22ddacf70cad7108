"""Engine exception types.

Every error carries a stable ``code`` token (the closed set surfaced by the
HTTP API and the CLI) and an HTTP status used by the service layer.
"""
from __future__ import annotations

from typing import Any


class LataError(Exception):
    code = "internal-error"
    http_status = 500

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class UnknownProjectError(LataError):
    code = "unknown-project"
    http_status = 404


class UnknownLinkError(LataError):
    code = "unknown-link"
    http_status = 404


class AmbiguousLinkError(LataError):
    code = "ambiguous-link"
    http_status = 409


class UnknownParagraphError(LataError):
    code = "unknown-paragraph"
    http_status = 404


class DuplicateRoleImportError(LataError):
    code = "duplicate-role-import"
    http_status = 409


class ValidationRejection(LataError):
    """A command or project state failed invariant validation."""

    code = "validation-rejected"
    http_status = 422

    def __init__(self, message: str, violations=()):
        super().__init__(message, {"violations": [v.to_dict() for v in violations]})
        self.violations = tuple(violations)


class EmptyUndoStackError(LataError):
    code = "empty-undo-stack"
    http_status = 409


class EmptyRedoStackError(LataError):
    code = "empty-redo-stack"
    http_status = 409


class CoverageError(LataError):
    """Sentence texts do not tile the paragraph; offset is in collapsed text."""

    code = "coverage-violation"
    http_status = 422

    def __init__(self, message: str, offset: int):
        super().__init__(message, {"offset": offset})
        self.offset = offset


class MissingBindingError(LataError):
    code = "missing-binding"
    http_status = 422

    def __init__(self, missing):
        names = sorted(missing)
        super().__init__(
            "missing bindings: " + ", ".join(names), {"missing": names}
        )
        self.missing = names


class MalformedPlaceholderError(LataError):
    code = "malformed-placeholder"
    http_status = 422


class SpanBoundsError(LataError):
    code = "span-out-of-bounds"
    http_status = 422


class NotSegmentedError(LataError):
    code = "not-segmented"
    http_status = 409


class WrongMemberSetError(LataError):
    code = "wrong-member-set"
    http_status = 422


class MalformedXmlError(LataError):
    code = "malformed-xml"
    http_status = 422

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message, {"line": line, "column": column})
        self.line = line
        self.column = column


class DanglingIdError(LataError):
    code = "dangling-reference"
    http_status = 422


class InvalidXmlTextError(LataError):
    """Text contains code points XML 1.0 cannot carry even escaped."""

    code = "invalid-xml-char"
    http_status = 422


class BundleValidationError(LataError):
    code = "invalid-bundle"
    http_status = 422


class StaleRevisionError(LataError):
    code = "stale-revision"
    http_status = 409


class MissingTokenError(LataError):
    code = "missing-request-token"
    http_status = 400


class ProviderUnreachableError(LataError):
    code = "provider-unreachable"
    http_status = 502


class StorageError(LataError):
    code = "storage-error"
    http_status = 500
