"""Data-Driven inelasticity for trusses: Python front end to the C++ core."""

from ._core import (
    lattice,
    nearest_point,
    oracle_check,
    plastic_return_map,
    relaxation,
    sls_relaxation_exact,
    sls_stress_update,
    study,
)

__all__ = [
    "lattice",
    "nearest_point",
    "oracle_check",
    "plastic_return_map",
    "relaxation",
    "sls_relaxation_exact",
    "sls_stress_update",
    "study",
]
