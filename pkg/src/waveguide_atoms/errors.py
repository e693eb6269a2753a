"""Exception types raised by the simulator."""

from __future__ import annotations


class SingularSystemError(ArithmeticError):
    """The steady-state linear system is numerically singular.

    This happens only when a zero-linewidth collective mode is driven exactly
    on resonance (e.g. a lossless half-wavelength lattice at ``delta = 0``).
    The condition is reported, never regularized.
    """

    def __init__(self, message: str, delta: float | None = None, rcond: float | None = None):
        super().__init__(message)
        self.delta = delta
        self.rcond = rcond


class TotalReflection(ArithmeticError):
    """A single atom reflects all light (``eta == -1``), so its transfer matrix diverges.

    Carries the detuning and, when known, the lattice spacing and atom number
    of the configuration that produced it.
    """

    def __init__(self, delta: float, spacing: float | None = None, n_atoms: int | None = None):
        super().__init__(f"total reflection at delta={delta!r}")
        self.delta = delta
        self.spacing = spacing
        self.n_atoms = n_atoms


class PoleError(ArithmeticError):
    """A closed-form amplitude has a vanishing denominator."""


class IntegrationError(RuntimeError):
    """The adaptive integrator failed (typically step-size underflow)."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time!r})")
        self.time = time


class ConfigError(ValueError):
    """One or more configuration problems; ``errors`` lists all of them."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
