"""Ground states of the planar Schrodinger-Poisson equation with logarithmic kernel."""

from .grid import (GridFunction, GridSpec, dilate, gaussian, h1_seminorm_sq, integrate,
                   lp_norm_p, make_grid, read_field, sample_function, scale, star_norm_sq,
                   write_field)
from .potential import (PotentialModel, builtin_constant, builtin_well1, builtin_well2,
                        check_conditions)
from .kernel import KernelTables, b_form, build_kernel_tables, convolve, n_functional
from .energy import (EnergyReport, ProblemParams, augmented_phi, energy, limit_energy,
                     residual)

__all__ = [
    "GridFunction", "GridSpec", "dilate", "gaussian", "h1_seminorm_sq", "integrate",
    "lp_norm_p", "make_grid", "read_field", "sample_function", "scale", "star_norm_sq",
    "write_field", "PotentialModel", "builtin_constant", "builtin_well1", "builtin_well2",
    "check_conditions", "KernelTables", "b_form", "build_kernel_tables", "convolve",
    "n_functional", "EnergyReport", "ProblemParams", "augmented_phi", "energy",
    "limit_energy", "residual",
]
