"""Pseudo-spectral Leray-alpha reactive flow on the periodic torus, with
spectral-flux, defect, Littlewood-Paley and structure-function diagnostics."""

__version__ = "0.1.0"

from .grid import Grid, PhysicalField, SpectralField  # noqa: E402
from .mollifier import MollifierSpec  # noqa: E402
from .model import ModelParams, ModelState, initial_condition, simulate  # noqa: E402

__all__ = [
    "Grid",
    "PhysicalField",
    "SpectralField",
    "MollifierSpec",
    "ModelParams",
    "ModelState",
    "initial_condition",
    "simulate",
]
