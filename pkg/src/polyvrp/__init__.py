"""Polynomial-size CVRP formulations, exact MILP solving, and benchmarking."""

from .config import Formulation, FormulationConfig, MinNv, Vi2Mode
from .instances import Instance, Rounding, parse_instance, space_diameter, tightness
from .model import MilpModel, Sense, VarKind
from .registry import BksRegistry

__all__ = [
    "BksRegistry",
    "Formulation",
    "FormulationConfig",
    "Instance",
    "MilpModel",
    "MinNv",
    "Rounding",
    "Sense",
    "VarKind",
    "Vi2Mode",
    "parse_instance",
    "space_diameter",
    "tightness",
]

__version__ = "0.1.0"
