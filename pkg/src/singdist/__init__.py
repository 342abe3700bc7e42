"""Intrinsic singularity distances for planar 3-RPR parallel manipulators.

The package computes, for each pose of a one-parameter motion, the
strain-energy-density distance to the closest singular configuration
under nine framework interpretations, using an embedded polynomial
homotopy-continuation solver.
"""

from .model import (
    ALL_INTERPRETATIONS,
    ConfigurationVector,
    InnerMetric,
    Interpretation,
    ManipulatorDesign,
    MotionSpec,
    SideKind,
    anchor_positions,
    discretize_motion,
    example_motion,
    inner_metric,
    invert_interpretation,
)
from .model import EXAMPLE_DESIGN

__all__ = [
    "ALL_INTERPRETATIONS",
    "ConfigurationVector",
    "InnerMetric",
    "Interpretation",
    "ManipulatorDesign",
    "MotionSpec",
    "SideKind",
    "anchor_positions",
    "discretize_motion",
    "example_motion",
    "inner_metric",
    "invert_interpretation",
    "EXAMPLE_DESIGN",
]

__version__ = "0.1.0"
