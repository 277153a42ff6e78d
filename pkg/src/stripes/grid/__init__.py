"""Desk-scale d-dimensional grid realisation of the functional."""

from .core import (
    GridSet,
    make_checkerboard,
    make_disc,
    make_full,
    make_half_and_half,
    make_random,
    make_stripes,
)
from .energy import (
    DecompositionReport,
    decomposition_terms,
    f_bar_field,
    f_bar_local,
    grid_energy,
    grid_energy_report,
    kernel_table,
)
from .anneal import AnnealResult, Schedule, anneal, stripe_period
from .distance import (
    RegionLabels,
    RegionParams,
    box_distance,
    classify_regions,
    d_eta,
    distance_field,
    lipschitz_probe,
    stripe_distance,
)
from .io import grid_from_bytes, grid_from_json, grid_to_bytes, grid_to_json, load_grid, save_grid

__all__ = [
    "AnnealResult",
    "DecompositionReport",
    "GridSet",
    "RegionLabels",
    "RegionParams",
    "Schedule",
    "anneal",
    "box_distance",
    "classify_regions",
    "d_eta",
    "decomposition_terms",
    "distance_field",
    "f_bar_field",
    "f_bar_local",
    "grid_energy",
    "grid_energy_report",
    "grid_from_bytes",
    "grid_from_json",
    "grid_to_bytes",
    "grid_to_json",
    "kernel_table",
    "lipschitz_probe",
    "load_grid",
    "make_checkerboard",
    "make_disc",
    "make_full",
    "make_half_and_half",
    "make_random",
    "make_stripes",
    "save_grid",
    "stripe_distance",
    "stripe_period",
]
