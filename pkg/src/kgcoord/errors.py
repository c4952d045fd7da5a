"""Error type shared by all modules; ``code`` carries the diagnostic tag."""
from __future__ import annotations


class KgError(Exception):
    """A failed precondition or a failed runtime verification.

    ``code`` is one of the stable tags (``NOT_DOMINANT``, ``SINGULAR_SYSTEM``,
    ``BASIS_SPAN_MISMATCH``, ...). ``details`` is a JSON-serializable dump.
    """

    def __init__(self, code: str, message: str = "", details=None):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message
        self.details = details or {}


class VerificationError(KgError):
    """A theorem-level assertion failed at runtime."""
