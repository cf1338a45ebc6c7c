"""fracvrp: exact solver for vehicle routing with fractional objectives."""

from .core import Ratio, Route, Solution, route_from_sequence, solution_value
from .instance import (
    CvrpInstance,
    Instance,
    Objective,
    euclid2d_cost,
    make_class_ca,
    make_class_pa,
    parse_tsplib,
)

__all__ = [
    "CvrpInstance",
    "Instance",
    "Objective",
    "Ratio",
    "Route",
    "Solution",
    "euclid2d_cost",
    "make_class_ca",
    "make_class_pa",
    "parse_tsplib",
    "route_from_sequence",
    "solution_value",
]

__version__ = "0.1.0"
