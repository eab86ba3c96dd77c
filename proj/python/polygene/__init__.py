"""Polygenic adaptation toolkit: Wright-Fisher simulation, mean-field solvers
and stationary analysis, backed by the C++ core in ``polygene._core``."""

from ._core import (
    FitnessSpec,
    MutationRates,
    RecombinationModel,
    StationaryDensity,
    SymmetricSelection,
    __version__,
    bifurcation_scan,
    chi,
    chi_derivative,
    derive_seed,
    evolve_density,
    evolve_particles,
    fixed_points,
    kappa_c,
    lande_residual,
    le_projection,
    marginal,
    mutator,
    recombinator,
    selector,
    simulate,
    verify,
)

__all__ = [
    "FitnessSpec",
    "MutationRates",
    "RecombinationModel",
    "StationaryDensity",
    "SymmetricSelection",
    "__version__",
    "bifurcation_scan",
    "chi",
    "chi_derivative",
    "derive_seed",
    "evolve_density",
    "evolve_particles",
    "fixed_points",
    "kappa_c",
    "lande_residual",
    "le_projection",
    "marginal",
    "mutator",
    "recombinator",
    "selector",
    "simulate",
    "verify",
]
