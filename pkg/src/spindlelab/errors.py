"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class SpindleLabError(Exception):
    """Base class for every error raised by spindlelab."""

    exit_code = 5


class GeometryError(SpindleLabError, ValueError):
    exit_code = 3


class DegenerateChordError(GeometryError):
    """Two points coincide or are too far apart to span a radius-r chord."""


class NotSpindleRepresentableError(GeometryError):
    """Some pairwise distance exceeds the spindle diameter 2r."""


class DomainError(SpindleLabError, ValueError):
    """A parameter lies outside the regime where the model is defined (e.g. r <= r_M)."""

    exit_code = 4


class ConfigError(SpindleLabError, ValueError):
    exit_code = 2


class InvariantError(SpindleLabError, RuntimeError):
    """An internal consistency check failed."""

    exit_code = 5
