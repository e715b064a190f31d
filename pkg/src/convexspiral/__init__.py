"""Convex function on the plane whose gradient orbits spiral forever.

The level sets are ellipses that rotate as they grow; see the README for the
module map.
"""
from __future__ import annotations

from .foliation import CANONICAL, ChartPoint, FoliationParams, PlanePoint, chart_to_plane, plane_to_chart
from .function import DEFAULT_TAU, FunctionParams, f_gradient, f_value

__all__ = [
    "CANONICAL",
    "ChartPoint",
    "DEFAULT_TAU",
    "FoliationParams",
    "FunctionParams",
    "PlanePoint",
    "chart_to_plane",
    "f_gradient",
    "f_value",
    "plane_to_chart",
]
__version__ = "0.1.0"
