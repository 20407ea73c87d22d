"""Error types shared across the package.

Every contract violation raises :class:`SzegoError` carrying a short
machine-readable ``code`` (e.g. ``"untrusted-window"``) next to the human
explanation.  The CLI maps :class:`ConfigError` to exit status 1 and every
other :class:`SzegoError` to exit status 2.
"""

from __future__ import annotations


class SzegoError(Exception):
    """Numerical or contract failure with a stable error code."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class ConfigError(SzegoError):
    """Invalid experiment configuration; ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__("invalid-config", f"field '{field}': {message}")
