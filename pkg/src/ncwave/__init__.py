"""Soliton solutions of the matrix higher-order NLS equation via Darboux transformations."""

from .darboux import (
    SolitonScenario,
    field_grid,
    gramian_solution,
    one_soliton_closed_form,
    quasi_gramian_solution,
)
from .lax import FieldGrid, ModelParams, eom_residual

__version__ = "0.1.0"

__all__ = [
    "FieldGrid",
    "ModelParams",
    "SolitonScenario",
    "eom_residual",
    "field_grid",
    "gramian_solution",
    "one_soliton_closed_form",
    "quasi_gramian_solution",
]
