"""
Exceptions raised by the kg-damp package.

Every exception derives from :class:`KGDampError`; most also derive from the builtin
exception a caller would naturally catch (``ValueError`` for bad input, ``RuntimeError``
for solver failures).
"""

from __future__ import annotations

import typing


class KGDampError(Exception):
    """Base class for all kg-damp errors."""


class ModelRangeError(KGDampError, ValueError):
    """An exponential nonlinearity overflowed at ``u``."""

    def __init__(self, u: float, kind: str = ""):
        self.u = float(u)
        self.kind = kind
        super().__init__(f"magnitude exceeds model range: u={self.u!r} ({kind})")


class ConditionViolation(KGDampError, ValueError):
    """The coercivity condition ``g(u) >= 0`` fails at the listed samples."""

    def __init__(self, violating: typing.Sequence[float]):
        self.violating = [float(u) for u in violating]
        shown = ", ".join(f"{u:.6g}" for u in self.violating[:10])
        more = "" if len(self.violating) <= 10 else f" (+{len(self.violating) - 10} more)"
        super().__init__(f"g(u) < 0 at u = {shown}{more}")


class QuadratureError(KGDampError, RuntimeError):
    """Adaptive quadrature did not converge on ``interval``."""

    def __init__(self, interval: typing.Tuple[float, float], detail: str = ""):
        self.interval = (float(interval[0]), float(interval[1]))
        super().__init__(
            f"quadrature non-convergence on [{self.interval[0]:.6g}, "
            f"{self.interval[1]:.6g}] {detail}".rstrip()
        )


class GridError(KGDampError, ValueError):
    """Invalid geometry or array sized for another grid."""


class NewtonDivergence(KGDampError, RuntimeError):
    """The implicit solve failed to reach the tolerance."""

    def __init__(self, node: int, residual: float, t: float):
        self.node = int(node)
        self.residual = float(residual)
        self.t = float(t)
        super().__init__(
            f"newton divergence at t={self.t:.6g}: node {self.node}, "
            f"residual {self.residual:.3e}"
        )


class BlowupDetected(KGDampError):
    """The solution left every bounded set in finite time."""

    def __init__(self, t: float, max_u: float, reason: str = "threshold"):
        self.t = float(t)
        self.max_u = float(max_u)
        self.reason = reason
        super().__init__(
            f"blowup detected at t={self.t:.6g} (max|u|={self.max_u:.3e}, {reason})"
        )


class NumericalInstability(KGDampError, RuntimeError):
    """max|u| crossed the threshold without the finite-time growth signature."""


class BracketNotFound(KGDampError, RuntimeError):
    """The ground-state shooting could not bracket the central value."""


class NoDecayError(KGDampError, RuntimeError):
    """The ground state does not decay within the computational domain."""


class HistoryRangeError(KGDampError, ValueError):
    """A time, window or sample requirement is not met by the run history."""


class ConfigError(KGDampError, ValueError):
    """Parse, schema or cross-field error in a configuration file."""
