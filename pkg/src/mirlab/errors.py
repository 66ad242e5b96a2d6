"""Exception hierarchy shared by every mirlab module."""


class MirlabError(Exception):
    """Base class for all library errors."""


class ShapeError(MirlabError, ValueError):
    """Array or index dimensions do not match the owning instance."""


class UnsupportedVariableDomain(MirlabError):
    """A variable has a lower bound other than zero (free or shifted)."""


class EnumerationTooLarge(MirlabError):
    """An oracle enumeration box exceeds the configured lattice-point cap."""


class Infeasible(MirlabError):
    """No feasible point exists."""


class ConfigError(MirlabError, ValueError):
    """A configuration object violates its invariants."""


class SolverError(MirlabError, RuntimeError):
    """The LP engine failed to converge (iteration limit or singular basis)."""


class InfeasibleSolution(MirlabError):
    """A separation solution violates one of the separation-model constraints."""


class ContractViolation(MirlabError, ValueError):
    """Inputs fall outside an operation's documented domain."""


class SchemaMismatch(MirlabError):
    """A model or dataset was produced under a different feature schema."""


class SingleClassDataset(UserWarning):
    """Training labels are constant; a constant-probability model was returned."""


class ExhaustedDraws(MirlabError):
    """Instance family generation hit its draw cap before reaching the requested size."""


class ParseError(MirlabError):
    """Malformed MPS input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedFeature(ParseError):
    """MPS input uses a construct outside the supported subset (RANGES, free variables)."""
