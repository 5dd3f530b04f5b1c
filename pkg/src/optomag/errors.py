"""Exception types shared across the package."""


class OptomagError(Exception):
    """Base class for all package errors."""


class DimensionError(OptomagError, ValueError):
    """Lattice dimensions are not positive integers."""


class ConfigurationError(OptomagError, ValueError):
    """A model is missing data it needs (phases, damping, ...)."""


class ContractError(OptomagError, ValueError):
    """An input violates a documented precondition (e.g. non-Hermitian matrix)."""


class DegenerateDenominatorError(OptomagError, ZeroDivisionError):
    """Perturbative elimination hit a zero energy denominator."""


class ResonantDivergenceError(OptomagError, ZeroDivisionError):
    """Adiabatic elimination of a resonant mode (zero detuning) is undefined."""


class SolverError(OptomagError, RuntimeError):
    """A linear solve or decomposition failed."""


class ConfigError(OptomagError, ValueError):
    """Experiment configuration failed validation.

    ``problems`` holds one ``(key_path, message)`` pair per violation.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{path}: {msg}" for path, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class CoverageWarning(UserWarning):
    """Frequency grid does not capture the full spectral weight."""


class FoldingWarning(UserWarning):
    """A quasienergy sits on the Floquet zone edge within tolerance."""


class DomainError(OptomagError, ValueError):
    """Argument outside the domain where a formula is defined."""
