"""Pseudo-spectral inviscid Hall-MHD on the 3-torus around a Diophantine background."""

from .config import ConfigError, RunConfig, format_config, parse_config, validate
from .diagnostics import (
    DecayFit,
    EnergyReport,
    basic_energy_law,
    choose_A,
    decay_fit,
    dissipation_D,
    energy_E,
    identity_suite,
    lyapunov_monitor,
    predicted_alpha,
    read_csv,
    write_csv,
)
from .diophantine import (
    ConditionReport,
    DiophantineVector,
    certify,
    check_condition,
    lattice_search_radius,
    min_product,
    suggest_background,
    verify_poincare,
)
from .integrator import (
    BlowUpError,
    RunResult,
    SimState,
    StepControl,
    choose_dt,
    load_checkpoint,
    make_initial_data,
    save_checkpoint,
    simulate,
    step,
)
from .operators import (
    Tendency,
    advect,
    curl,
    directional_derivative,
    hall_term,
    hall_term_expanded,
    induction_term,
    lorentz,
    pressure_from_state,
    rhs_original,
    rhs_perturbed,
)
from .spectral import (
    SpectralScalarField,
    SpectralVectorField,
    WaveLattice,
    alias_free_product,
    derivative,
    divergence,
    from_physical,
    gradient,
    leray_project,
    make_lattice,
    scalar_field,
    sobolev_norm,
    to_physical,
    vector_field,
)

__version__ = "0.1.0"
