"""Exception types shared across the package."""


class LatsumError(Exception):
    """Base class for all package-specific errors."""


class DegenerateBasisError(LatsumError):
    """Lattice vectors are linearly dependent or numerically singular."""


class NeutralityError(LatsumError):
    """Cell charges do not sum to zero."""


class GeometryError(LatsumError):
    """Site positions are invalid (coincident or non-finite)."""


class ArgumentError(LatsumError):
    """An argument violates a documented precondition."""


class DomainError(LatsumError):
    """A numeric parameter lies outside the supported domain."""


class ConfigError(LatsumError):
    """A run configuration file is malformed or inconsistent."""
