"""Ramsey interferometry over polarization loops: preparation, interaction,
closing pulse, detection, fringe fitting, and the closed-form predictions.

Protocol.  The atom starts in the symmetric superposition (|1> + |2>)/sqrt 2,
mode "+" carries the chosen cavity field, mode "-" starts in vacuum.  The
system then either evolves under a slow polarization loop (full-dynamics
mode) or receives the idealized per-state loop phases (ideal-phase mode).
A second pulse with adjustable relative phase xi closes the interferometer
and the probability of finding the atom in level 2 is recorded.

Reference arm.  Fringe phases by themselves depend on pulse conventions and
on dynamical phases; every reported shift is therefore the difference
between the loop arm's fitted fringe phase and a caliber arm's.  In
full-dynamics mode the caliber arm evolves the same state for the same time
with the polarization frozen at the loop's starting point; in ideal-phase
mode it is the prepared state unchanged.

Closing pulse convention (fixed; all shifts are caliber-relative so physics
does not depend on it):

    |1> -> (|1> + e^{+i xi} |2>)/sqrt 2
    |2> -> (-e^{-i xi} |1> + |2>)/sqrt 2

which gives the caliber fringe P2(xi) = (1 + cos xi)/2, and a state whose
|2> component carries an extra phase chi the fringe (1 + cos(xi - chi))/2.
Fringes are fitted to offset + amplitude * cos(xi - phase) by linear least
squares, so a positive fitted shift equals the phase advance chi of the
|2> component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .hilbert import (
    DEFAULT_TAIL_TOL,
    SpaceConfig,
    StateVector,
    coherent_mode_coefficients,
    make_space,
    state_index,
)
from .model import ModelParams, HamiltonianFactory, default_params
from .poincare_path import (
    PathSpec,
    frozen_schedule,
    lasso_path,
    make_schedule,
    rescaled_path,
    solid_angle,
)
from .dynamics import evolve
from .phases import ideal_phase_map, wrap_phase

__all__ = [
    "CavityInput",
    "RamseyConfig",
    "FringeFit",
    "RamseyResult",
    "prepare",
    "close_and_detect",
    "fit_fringe",
    "run_experiment",
    "p2_vacuum_formula",
    "p2_coherent_formula",
    "formula_fringe_shift",
    "effective_shift_vs_alpha",
    "adiabaticity_study",
    "default_xi_grid",
]

TWO_PI = 2.0 * math.pi
ADIABATICITY_FLAG_RATIO = 0.1
FIT_RESIDUAL_FLAG = 0.02
CYCLICITY_FLOOR = 0.99


@dataclass(frozen=True)
class CavityInput:
    """Initial field of mode "+" (mode "-" always starts in vacuum).

    kind "fock" places photon_number photons; kind "coherent" places a
    truncated coherent state of amplitude alpha, renormalized, failing
    loudly when the Poisson tail beyond the cutoff reaches tail_tol.
    """

    kind: str = "fock"
    photon_number: int = 0
    alpha: complex = 0.0
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if self.kind not in ("fock", "coherent"):
            raise ValueError(f"cavity kind must be 'fock' or 'coherent', got {self.kind!r}")
        if self.kind == "fock" and self.photon_number < 0:
            raise ValueError(f"photon_number must be >= 0, got {self.photon_number}")
        if self.tail_tol <= 0:
            raise ValueError(f"tail_tol must be positive, got {self.tail_tol}")


def default_xi_grid(points: int = 33) -> np.ndarray:
    """Evenly spaced Ramsey phases covering [0, 2 pi)."""
    if points < 3:
        raise ValueError(f"need at least 3 xi points, got {points}")
    return np.linspace(0.0, TWO_PI, points, endpoint=False)


@dataclass(frozen=True)
class RamseyConfig:
    """Complete description of one interferometry run."""

    space: SpaceConfig
    params: ModelParams
    loop: PathSpec
    cavity: CavityInput = field(default_factory=CavityInput)
    tau_ms: float | None = None
    round_to_flips: bool = True
    xi_grid: np.ndarray = field(default_factory=default_xi_grid)
    mode: str = "full"
    scheme: str = "reference-arm"
    dt: float | None = None
    samples_per_leg: int = 256

    def __post_init__(self):
        tau = self.tau_ms if self.tau_ms is not None else self.loop.total_time
        if tau <= 0:
            raise ValueError(f"interaction time must be positive, got {tau}")
        object.__setattr__(self, "tau_ms", float(tau))
        xi = np.asarray(self.xi_grid, dtype=float)
        if xi.size == 0:
            raise ValueError("xi_grid must be non-empty")
        object.__setattr__(self, "xi_grid", xi)
        if self.mode not in ("full", "ideal"):
            raise ValueError(f"mode must be 'full' or 'ideal', got {self.mode!r}")
        if self.scheme != "reference-arm":
            raise ValueError(
                "only the reference-arm scheme supports superposition inputs; "
                f"got scheme {self.scheme!r}"
            )


@dataclass(frozen=True)
class FringeFit:
    """Least-squares fit P2(xi) = offset + amplitude * cos(xi - phase)."""

    offset: float
    amplitude: float
    phase: float
    residual: float


@dataclass(frozen=True)
class RamseyResult:
    """Fringe curves, fits, and the caliber-referenced shift of one run."""

    xi_grid: np.ndarray
    p2_loop: np.ndarray
    p2_caliber: np.ndarray
    loop_fit: FringeFit
    caliber_fit: FringeFit
    fitted_shift: float
    fit_residual: float
    metadata: dict = field(default_factory=dict)


def prepare(space: SpaceConfig, cavity: CavityInput) -> StateVector:
    """(|1> + |2>)/sqrt 2 on the atom, the chosen field in mode "+", vacuum in "-"."""
    if cavity.kind == "fock":
        if cavity.photon_number > space.nmax_plus:
            raise ValueError(
                f"photon_number {cavity.photon_number} exceeds nmax_plus {space.nmax_plus}"
            )
        coeffs = np.zeros(space.nmax_plus + 1, dtype=complex)
        coeffs[cavity.photon_number] = 1.0
    else:
        coeffs = coherent_mode_coefficients(
            cavity.alpha, space.nmax_plus, cavity.tail_tol
        )
    amps = np.zeros(space.dim, dtype=complex)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for k in range(space.nmax_plus + 1):
        amps[state_index(space, 1, k, 0)] = coeffs[k] * inv_sqrt2
        amps[state_index(space, 2, k, 0)] = coeffs[k] * inv_sqrt2
    return StateVector(amps, space)


def close_and_detect(state: StateVector, xi: float) -> float:
    """Apply the closing pulse with relative phase xi; return P(level 2).

    The pulse acts on the atom only (identity on both modes) with the
    convention in the module docstring; the detection sums |amplitude|^2
    over every photon sector of level 2.
    """
    half = state.space.dim // 2
    a1 = state.amplitudes[:half]
    a2 = state.amplitudes[half:]
    phase = complex(math.cos(xi), math.sin(xi))
    new2 = (phase * a1 + a2) / math.sqrt(2.0)
    p2 = float(np.sum(np.abs(new2) ** 2))
    return min(1.0, max(0.0, p2))


def _p2_curve(state: StateVector, xi_grid: np.ndarray) -> np.ndarray:
    return np.array([close_and_detect(state, float(xi)) for xi in xi_grid])


def fit_fringe(xi: np.ndarray, p2: np.ndarray) -> FringeFit:
    """Fit offset + amplitude cos(xi - phase) by linear least squares.

    The cosine is expanded over the basis {1, cos xi, sin xi}, making the
    fit a linear problem; amplitude is reported nonnegative and residual is
    the largest absolute deviation of the fit from the data.
    """
    xi = np.asarray(xi, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if xi.size < 3 or xi.size != p2.size:
        raise ValueError("fringe fit needs matching xi/p2 arrays of length >= 3")
    design = np.column_stack([np.ones_like(xi), np.cos(xi), np.sin(xi)])
    coef, *_ = np.linalg.lstsq(design, p2, rcond=None)
    offset, c_cos, c_sin = (float(c) for c in coef)
    amplitude = math.hypot(c_cos, c_sin)
    phase = math.atan2(c_sin, c_cos) if amplitude > 0 else 0.0
    model = design @ coef
    residual = float(np.max(np.abs(model - p2))) if xi.size else 0.0
    return FringeFit(offset=offset, amplitude=amplitude, phase=phase, residual=residual)


def _round_to_flips(tau: float, params: ModelParams) -> tuple[float, int]:
    period = params.flip_period
    k = max(1, int(round(tau / period)))
    return k * period, k


def run_experiment(config: RamseyConfig) -> RamseyResult:
    """Run the interferometer over the configured xi grid.

    Returns fitted fringes for the loop and caliber arms; fitted_shift is
    the wrapped difference of their fringe phases, the convention-free
    observable.  Result metadata records the solid angle, the interaction
    time actually used (after integer-flip rounding), the adiabaticity
    ratio, arm cyclicities, and any quality flags.
    """
    params = config.params
    gamma = solid_angle(config.loop)
    tau = config.tau_ms
    flips = None
    if config.round_to_flips:
        tau, flips = _round_to_flips(tau, params)
    loop = rescaled_path(config.loop, tau)
    schedule = make_schedule(
        loop, samples_per_leg=config.samples_per_leg, effective_coupling=params.lam
    )
    prep = prepare(config.space, config.cavity)

    flags: list[str] = []
    if config.mode == "full":
        factory = HamiltonianFactory(config.space, params)
        loop_traj = evolve(prep, schedule, params, dt=config.dt, factory=factory)
        state_loop = loop_traj.final_state
        caliber_sched = frozen_schedule(
            float(schedule.thetas[0]), float(schedule.phis[0]), tau
        )
        caliber_traj = evolve(prep, caliber_sched, params, dt=config.dt, factory=factory)
        state_caliber = caliber_traj.final_state
    else:
        state_loop = ideal_phase_map(prep, gamma)
        state_caliber = prep

    # Phase-insensitive return fidelity: the loop is supposed to imprint
    # phases on the prepared components, so the cyclicity diagnostic compares
    # only the magnitude profiles (1 exactly when no population moved).
    cyc_loop = float(
        np.sum(np.abs(prep.amplitudes) * np.abs(state_loop.amplitudes))
    )
    cyc_caliber = float(
        np.sum(np.abs(prep.amplitudes) * np.abs(state_caliber.amplitudes))
    )

    p2_loop = _p2_curve(state_loop, config.xi_grid)
    p2_caliber = _p2_curve(state_caliber, config.xi_grid)
    loop_fit = fit_fringe(config.xi_grid, p2_loop)
    caliber_fit = fit_fringe(config.xi_grid, p2_caliber)
    fitted_shift = wrap_phase(loop_fit.phase - caliber_fit.phase)
    fit_residual = max(loop_fit.residual, caliber_fit.residual)

    ratio = schedule.metadata.get("adiabaticity_ratio")
    if config.mode == "full" and ratio is not None and ratio > ADIABATICITY_FLAG_RATIO:
        flags.append("non-adiabatic")
    if fit_residual > FIT_RESIDUAL_FLAG:
        flags.append("poor-fit")
    if config.mode == "full" and cyc_loop < CYCLICITY_FLOOR:
        flags.append("non-cyclic")

    metadata = {
        "gamma": gamma,
        "tau_used_ms": tau,
        "rabi_flips": flips,
        "mode": config.mode,
        "cavity_kind": config.cavity.kind,
        "alpha": config.cavity.alpha if config.cavity.kind == "coherent" else None,
        "photon_number": (
            config.cavity.photon_number if config.cavity.kind == "fock" else None
        ),
        "adiabaticity_ratio": ratio,
        "cyclicity_loop": cyc_loop,
        "cyclicity_caliber": cyc_caliber,
        "flags": flags,
    }
    return RamseyResult(
        xi_grid=config.xi_grid,
        p2_loop=p2_loop,
        p2_caliber=p2_caliber,
        loop_fit=loop_fit,
        caliber_fit=caliber_fit,
        fitted_shift=fitted_shift,
        fit_residual=fit_residual,
        metadata=metadata,
    )


def p2_vacuum_formula(gamma: float) -> float:
    """Dark-point detection probability for vacuum input: (1 - cos(gamma/4))/2."""
    return 0.5 * (1.0 - math.cos(0.25 * gamma))


def p2_coherent_formula(alpha: complex, gamma: float) -> float:
    """Dark-point detection probability for coherent input.

    P2 = [(1 - e^{-|alpha|^2})(1 - cos(gamma/2))
          + e^{-|alpha|^2} (1 - cos(gamma/4))] / 2.
    Reduces to the vacuum formula at alpha = 0 and approaches
    (1 - cos(gamma/2))/2 for large |alpha|.
    """
    p_vac = math.exp(-abs(alpha) ** 2)
    return 0.5 * (
        (1.0 - p_vac) * (1.0 - math.cos(0.5 * gamma))
        + p_vac * (1.0 - math.cos(0.25 * gamma))
    )


def formula_fringe_shift(alpha: complex, gamma: float) -> float:
    """Fringe phase implied by the coherent closed form.

    The idealized fringe is the Poisson mixture
    P2(xi) = [p0 (1 + cos(xi - gamma/4)) + (1 - p0)(1 + cos(xi - gamma/2))]/2
    with p0 = e^{-|alpha|^2}; fitting a single cosine to it gives the phase
    of the complex sum p0 e^{i gamma/4} + (1 - p0) e^{i gamma/2}.
    """
    p_vac = math.exp(-abs(alpha) ** 2)
    z = p_vac * complex(math.cos(0.25 * gamma), math.sin(0.25 * gamma)) + (
        1.0 - p_vac
    ) * complex(math.cos(0.5 * gamma), math.sin(0.5 * gamma))
    return math.atan2(z.imag, z.real)


@dataclass(frozen=True)
class AlphaSweepRow:
    """One coherent-amplitude point of the crossover sweep."""

    alpha: float
    shift_sim: float
    shift_formula: float
    p2_dark_sim: float
    p2_dark_formula: float
    fit_residual: float


def effective_shift_vs_alpha(
    alpha_grid,
    gamma: float,
    mode: str = "ideal",
    base: RamseyConfig | None = None,
) -> list[AlphaSweepRow]:
    """Fringe shift versus coherent amplitude on a common lasso loop.

    Each amplitude runs one experiment with a coherent cavity input; the
    formula columns come from the closed forms.  The dark-point simulation
    column evaluates the loop curve at the caliber fringe's dark point
    (xi = caliber phase + pi), where the closed forms apply.

    base supplies the space, model parameters, loop timing, and grids; when
    omitted, a default wide space (nmax 16 on the driven mode) and a slow
    default-parameter lasso are used.  The base's loop is replaced by a
    lasso of the requested solid angle, and its mode by the requested one.
    """
    if base is None:
        params = default_params()
        base = RamseyConfig(
            space=make_space(16, 2),
            params=params,
            loop=lasso_path(gamma, 120.0 * params.flip_period),
            mode=mode,
        )
    loop = base.loop
    if abs(solid_angle(loop) - gamma) > 1e-12:
        loop = lasso_path(gamma, base.loop.total_time)
    rows = []
    for alpha in alpha_grid:
        cfg = replace(
            base,
            loop=loop,
            mode=mode,
            cavity=CavityInput(
                kind="coherent", alpha=alpha, tail_tol=base.cavity.tail_tol
            ),
        )
        result = run_experiment(cfg)
        dark_xi = float(result.caliber_fit.phase + math.pi)
        p2_dark = close_and_detect_curve_value(result, dark_xi)
        rows.append(
            AlphaSweepRow(
                alpha=float(abs(alpha)),
                shift_sim=result.fitted_shift,
                shift_formula=formula_fringe_shift(alpha, gamma),
                p2_dark_sim=p2_dark,
                p2_dark_formula=p2_coherent_formula(alpha, gamma),
                fit_residual=result.fit_residual,
            )
        )
    return rows


def close_and_detect_curve_value(result: RamseyResult, xi: float) -> float:
    """Evaluate the fitted loop fringe of a result at one xi."""
    fit = result.loop_fit
    return fit.offset + fit.amplitude * math.cos(xi - fit.phase)


@dataclass(frozen=True)
class AdiabaticityRow:
    """One loop-duration rung of the error ladder."""

    loop_time_ms: float
    max_abs_p2_error: float
    adiabaticity_ratio: float | None


def adiabaticity_study(
    config: RamseyConfig, time_ladder_ms: list[float]
) -> list[AdiabaticityRow]:
    """Full-dynamics versus ideal-phase fringe error across loop durations.

    For each duration, both the full and the ideal experiment run on the
    same xi grid and the maximum pointwise |P2_full - P2_ideal| over the
    grid is reported together with the loop's adiabaticity ratio.
    """
    rows = []
    for T in time_ladder_ms:
        cfg_full = replace(config, tau_ms=float(T), mode="full")
        full = run_experiment(cfg_full)
        cfg_ideal = replace(config, tau_ms=float(T), mode="ideal")
        ideal = run_experiment(cfg_ideal)
        err = float(np.max(np.abs(full.p2_loop - ideal.p2_loop)))
        rows.append(
            AdiabaticityRow(
                loop_time_ms=full.metadata["tau_used_ms"],
                max_abs_p2_error=err,
                adiabaticity_ratio=full.metadata["adiabaticity_ratio"],
            )
        )
    return rows
