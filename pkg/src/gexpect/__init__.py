"""Lattice g-expectations, g-capacities and Choquet expectations."""

from .bsde import (
    BsdeSolution,
    GuardError,
    StabilityReport,
    comonotonic_additivity_gap,
    conditional_g_expectation,
    g_expectation,
    g_probability,
    min_steps,
    solve_bsde,
    solve_paths,
    stability_gap,
    substitution_check,
)
from .choquet import (
    CapacityCurve,
    ChoquetResult,
    PropertyReport,
    capacity_curve,
    choquet_expectation,
    choquet_property_suite,
    choquet_quadrature,
)
from .claims import (
    Band,
    Claim,
    Combination,
    Constant,
    Event,
    FunctionClaim,
    LinearForm,
    TableClaim,
    combine,
    coord,
    indicator,
    is_comonotonic,
    band_witness,
    cross_witness,
    parse_claim,
)
from .generators import (
    Generator,
    check_hypotheses,
    parse_generator,
    probe_additivity,
    probe_positive_homogeneity,
    restrict_to_direction,
)
from .lattice import LatticeModel, TimeGrid, build_lattice, one_step_expectation
from .oracles import (
    DriftSpec,
    drift_shift_monotone_expectation,
    linear_girsanov_expectation,
    normal_cdf,
    closed_form_z,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
