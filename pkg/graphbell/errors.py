"""Exception hierarchy shared by every graphbell module.

Each class carries the process exit code the CLI reports for it:
0 success, 1 property/certificate failure, 2 input validation,
3 resource guard.
"""

from __future__ import annotations


class GraphBellError(Exception):
    exit_code = 1
    reason = "error"

    def __init__(self, message: str, reason: str | None = None) -> None:
        super().__init__(message)
        if reason is not None:
            self.reason = reason

    def to_dict(self) -> dict:
        return {
            "error": {
                "type": type(self).__name__,
                "reason": self.reason,
                "message": str(self),
            }
        }


class InputError(GraphBellError):
    exit_code = 2
    reason = "invalid_input"


class GraphError(InputError):
    """Graph parse failure or invariant violation; `reason` names which."""


class NoClosedFormError(InputError):
    reason = "no_closed_form"


class ResourceGuardError(GraphBellError):
    exit_code = 3
    reason = "resource_guard"


class ConvergenceError(GraphBellError):
    reason = "no_convergence"


class CheckFailure(GraphBellError):
    reason = "check_failed"


def guard(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise ResourceGuardError(f"{what}: N={n} exceeds limit {limit}")
