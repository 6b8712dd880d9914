"""Random r-spindle hulls of points in smooth convex discs.

The package is split into plane geometry of disc-polygons
(:mod:`spindlelab.geom_core`), smooth convex bodies (:mod:`spindlelab.bodies`),
caps and floating bodies (:mod:`spindlelab.caps`), the Monte Carlo engine
(:mod:`spindlelab.statistics`) and a command line (:mod:`spindlelab.cli`).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .bodies import (
    ConvexBody,
    CurvatureSummary,
    Disc,
    Ellipse,
    body_from_spec,
    boundary_integral,
    curvature_summary,
    expected_area_constant,
    make_ellipse,
    make_unit_disc,
    sample_uniform,
)
from .errors import (
    ConfigError,
    DegenerateChordError,
    DomainError,
    GeometryError,
    InvariantError,
    NotSpindleRepresentableError,
    SpindleLabError,
)
from .geom_core import (
    Arc,
    DiscPolygon,
    Point,
    arc_centers,
    hull_membership_oracle,
    spindle,
    spindle_hull,
)

__all__ = [
    "Arc",
    "ConfigError",
    "ConvexBody",
    "CurvatureSummary",
    "DegenerateChordError",
    "Disc",
    "DiscPolygon",
    "DomainError",
    "Ellipse",
    "GeometryError",
    "InvariantError",
    "NotSpindleRepresentableError",
    "Point",
    "SpindleLabError",
    "arc_centers",
    "body_from_spec",
    "boundary_integral",
    "curvature_summary",
    "expected_area_constant",
    "hull_membership_oracle",
    "make_ellipse",
    "make_unit_disc",
    "sample_uniform",
    "spindle",
    "spindle_hull",
]
