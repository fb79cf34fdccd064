"""Radial random walks on p-adic groups, their heat kernels and scaling limits."""
from .criticality import (
    DiffusionReport,
    diffusion_report,
    endpoint_scan,
    gap_report,
    sigma_components,
    sigma_from_p0,
)
from .groups import K_MAX_DEFAULT, EmbeddingScheme, GroupElem, ShellOverflowError, embed, quotient_map
from .kernels import KernelSpec, fdd_prob, heat_kernel, heat_kernel_shell, kernel_mass, kernel_moment
from .laws import AnisoLaw2D, IsoLaw2D, WalkLaw1D, law_from_dict, law_from_json, make_law
from .montecarlo import ENGINE, EmpiricalHistogram, SimConfig, empirical_moment, simulate_embedded, simulate_primitive
from .padic import PAdicApprox, ShellIndex, character, padic_abs, padic_valuation
from .scaling import PreLimitLaw, convergence_table, fdd_compare, l1_dual, sup_distance

__all__ = [
    "AnisoLaw2D", "DiffusionReport", "ENGINE", "EmbeddingScheme", "EmpiricalHistogram", "GroupElem",
    "IsoLaw2D", "K_MAX_DEFAULT", "KernelSpec", "PAdicApprox", "PreLimitLaw", "ShellIndex",
    "ShellOverflowError", "SimConfig", "WalkLaw1D", "character", "convergence_table", "diffusion_report",
    "embed", "empirical_moment", "endpoint_scan", "fdd_compare", "fdd_prob", "gap_report", "heat_kernel",
    "heat_kernel_shell", "kernel_mass", "kernel_moment", "l1_dual", "law_from_dict", "law_from_json",
    "make_law", "padic_abs", "padic_valuation", "quotient_map", "sigma_components", "sigma_from_p0",
    "simulate_embedded", "simulate_primitive", "sup_distance",
]
