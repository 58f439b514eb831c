"""Exception types shared by the library and the CLI."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class StructureError(ValueError):
    """A relation expression is malformed."""


class CapacityError(RuntimeError):
    """An exhaustive search was requested beyond its supported size."""


class InvariantError(RuntimeError):
    """An internal consistency check failed (indicates a bug)."""
