"""loopqed: geometric phases of an atom in a two-mode cavity.

Simulates an effective three-level atom coupled to two polarization modes
of a cavity, driven around slow closed loops on the polarization sphere,
and the Ramsey interferometry that reads the resulting geometric phases
out.  Highlights: the vacuum produces a quarter-solid-angle phase shift,
coherent fields cross over to the semiclassical half-solid-angle shift,
and dressed photon doublets transport equal and opposite phases.

Subpackage map:
    hilbert        truncated two-mode + three-level state space
    model          effective Hamiltonian and coupling weights
    poincare_path  polarization loops, schedules, solid angles
    dynamics       time-dependent Schrodinger propagation
    phases         Pancharatnam / adiabatic-transport phase extraction
    ramsey         interferometry protocol, fringe fits, closed forms
    cli            command-line front end ("loopqed" executable)
"""

__version__ = "0.1.0"

from .hilbert import (
    SpaceConfig,
    StateVector,
    OperatorMatrix,
    TruncationError,
    SpaceMismatchError,
    make_space,
    fock_state,
    coherent_state,
    annihilation,
    inner_product,
    expectation,
)
from .model import (
    ModelParams,
    Polarization,
    HamiltonianFactory,
    default_params,
    coupling_weights,
    build_hamiltonian,
)
from .poincare_path import (
    PathSpec,
    Schedule,
    ClosureError,
    lasso_path,
    piecewise_path,
    reversed_path,
    concatenated_path,
    rescaled_path,
    make_schedule,
    frozen_schedule,
    solid_angle,
)
from .dynamics import (
    Trajectory,
    IntegrationError,
    ConvergenceReport,
    evolve,
    convergence_check,
    brute_force_evolve,
)
from .phases import (
    PhaseReading,
    OverlapReading,
    NonCyclicWarning,
    DegeneracyError,
    wrap_phase,
    pancharatnam_phase,
    dynamical_phase_reference,
    analytic_dressed_phase,
    adiabatic_eigenstate_transport,
    dressed_phase_pair,
    ideal_phase_map,
)
from .ramsey import (
    CavityInput,
    RamseyConfig,
    RamseyResult,
    FringeFit,
    prepare,
    close_and_detect,
    fit_fringe,
    run_experiment,
    p2_vacuum_formula,
    p2_coherent_formula,
    formula_fringe_shift,
    effective_shift_vs_alpha,
    adiabaticity_study,
)

__all__ = [
    "__version__",
    "SpaceConfig",
    "StateVector",
    "OperatorMatrix",
    "TruncationError",
    "SpaceMismatchError",
    "make_space",
    "fock_state",
    "coherent_state",
    "annihilation",
    "inner_product",
    "expectation",
    "ModelParams",
    "Polarization",
    "HamiltonianFactory",
    "default_params",
    "coupling_weights",
    "build_hamiltonian",
    "PathSpec",
    "Schedule",
    "ClosureError",
    "lasso_path",
    "piecewise_path",
    "reversed_path",
    "concatenated_path",
    "rescaled_path",
    "make_schedule",
    "frozen_schedule",
    "solid_angle",
    "Trajectory",
    "IntegrationError",
    "ConvergenceReport",
    "evolve",
    "convergence_check",
    "brute_force_evolve",
    "PhaseReading",
    "OverlapReading",
    "NonCyclicWarning",
    "DegeneracyError",
    "wrap_phase",
    "pancharatnam_phase",
    "dynamical_phase_reference",
    "analytic_dressed_phase",
    "adiabatic_eigenstate_transport",
    "dressed_phase_pair",
    "ideal_phase_map",
    "CavityInput",
    "RamseyConfig",
    "RamseyResult",
    "FringeFit",
    "prepare",
    "close_and_detect",
    "fit_fringe",
    "run_experiment",
    "p2_vacuum_formula",
    "p2_coherent_formula",
    "formula_fringe_shift",
    "effective_shift_vs_alpha",
    "adiabaticity_study",
]
