"""Simulation and verification lab for the one-dimensional long-range Ising
chain with coupling J(n) = n^(alpha-2) and all-plus boundary conditions."""

from .params import ALPHA_PLUS, ModelParams, provisional_exponents, validate_exponents
from .kernel import Kernel, build_kernel
from .spins import (
    SpinConfig,
    empirical_magnetization,
    hamiltonian,
    interval_family_energy,
    minus_set_energy,
)
from .triangles import (
    DropletReport,
    Triangle,
    TriangleFamily,
    build_triangles,
    count_external_families,
    droplet_stats,
    external_large,
    ground_state_of,
    reconstruct_spins,
    rho_targets,
    roundtrip_ok,
)
from .contours import (
    Contour,
    ContourFamily,
    contour_counting_check,
    group_contours,
    min_separation_constant,
    verify_peierls,
)
from .backend import backend_name

__version__ = "0.1.0"

__all__ = [
    "ALPHA_PLUS",
    "ModelParams",
    "Kernel",
    "SpinConfig",
    "Triangle",
    "TriangleFamily",
    "Contour",
    "ContourFamily",
    "DropletReport",
    "backend_name",
    "build_kernel",
    "build_triangles",
    "contour_counting_check",
    "count_external_families",
    "droplet_stats",
    "empirical_magnetization",
    "external_large",
    "ground_state_of",
    "group_contours",
    "hamiltonian",
    "interval_family_energy",
    "min_separation_constant",
    "minus_set_energy",
    "provisional_exponents",
    "reconstruct_spins",
    "rho_targets",
    "roundtrip_ok",
    "validate_exponents",
    "verify_peierls",
]
