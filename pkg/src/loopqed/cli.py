"""Command-line front end: config parsing, scenario subcommands, CSV output.

Subcommands
    fringe          one Ramsey fringe scan (loop arm + caliber arm)
    alpha-sweep     fringe shift versus coherent amplitude
    adiabaticity    full-dynamics vs ideal-phase fringe error versus loop time
    dressed-phases  adiabatic transport phases for chosen photon doublets

Global flags: --config PATH (key = value file), --out DIR (overrides the
config's out_dir), --threads N (parallel sweep points; output order and
bytes are independent of N).

Exit codes: 0 success, 1 validation failure (bad flags, bad config fields,
inadequate truncation), 2 numerical failure (integration, degeneracy).

Config file format: one `key = value` per line, `#` starts a comment,
blank lines ignored.  Unknown keys are rejected.  Keys and defaults:

    g_khz = 50.0              atom-cavity coupling g/2pi in kHz
    omega_khz = 50.0          drive Rabi frequency Omega/2pi in kHz
    delta_ratio = 3.0         detuning delta as a multiple of Omega
    nmax_plus = 4             photon cutoff, driven mode "+"
    nmax_minus = 2            photon cutoff, mode "-"
    tail_tol = 1e-3           coherent-state truncation tail tolerance
    gamma = 3.141592653589793 lasso solid angle in steradians
    loop_knots =              optional explicit path "theta:phi;..." (rad)
    loop_leg_times =          leg durations "t1;t2;..." in ms (with knots)
    loop_time_ms = 6.0        total loop time in ms
    samples_per_leg = 256     schedule samples per path leg
    cavity = fock:0           initial "+" field: fock:N or coherent:ALPHA
    xi_points = 33            Ramsey phase grid size (>= 16)
    mode = full               "full" dynamics or "ideal" phase map
    dt_ms =                   integrator step in ms (empty: duration/20000)
    round_flips = true        round interaction time to whole Rabi flips
    out_dir = runs            output directory
    seed = 0                  reserved; all computations are deterministic
    alphas = 0,0.5            alpha-sweep amplitudes
    time_ladder_ms = 0.6,1.2,2.4   adiabaticity loop times
    doublets = 0,0            dressed-phase doublets "n,m;n,m;..."
    branch = both             dressed-phase branch: upper, lower, or both

Frequencies are entered in kHz and converted to angular units internally:
a frequency of f kHz corresponds to 2*pi*f rad/ms.  The conversion is
echoed in every output header.

All outputs are CSV with '#'-prefixed header lines echoing the complete
resolved configuration and the package version, '.' decimal separator,
fixed column order, and 12 significant digits.  Identical configs produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .hilbert import SpaceConfig, TruncationError, make_space
from .model import ModelParams
from .poincare_path import PathSpec, lasso_path, piecewise_path, solid_angle
from .dynamics import IntegrationError
from .phases import DegeneracyError, analytic_dressed_phase, dressed_phase_pair
from .ramsey import (
    CavityInput,
    RamseyConfig,
    adiabaticity_study,
    default_xi_grid,
    effective_shift_vs_alpha,
    run_experiment,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "cmd_fringe",
    "cmd_alpha_sweep",
    "cmd_adiabaticity",
    "cmd_dressed_phases",
    "main",
]

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """A configuration or usage problem; maps to exit code 1."""


_DEFAULTS: dict[str, str] = {
    "g_khz": "50.0",
    "omega_khz": "50.0",
    "delta_ratio": "3.0",
    "nmax_plus": "4",
    "nmax_minus": "2",
    "tail_tol": "1e-3",
    "gamma": repr(math.pi),
    "loop_knots": "",
    "loop_leg_times": "",
    "loop_time_ms": "6.0",
    "samples_per_leg": "256",
    "cavity": "fock:0",
    "xi_points": "33",
    "mode": "full",
    "dt_ms": "",
    "round_flips": "true",
    "out_dir": "runs",
    "seed": "0",
    "alphas": "0,0.5",
    "time_ladder_ms": "0.6,1.2,2.4",
    "doublets": "0,0",
    "branch": "both",
}


def _to_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"field {key!r}: expected a number, got {raw!r}") from None


def _to_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"field {key!r}: expected an integer, got {raw!r}") from None


def _to_bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"field {key!r}: expected true/false, got {raw!r}")


def _float_list(key: str, raw: str, sep: str = ",") -> tuple[float, ...]:
    items = [s.strip() for s in raw.split(sep) if s.strip()]
    if not items:
        raise ConfigError(f"field {key!r}: expected a {sep!r}-separated list, got {raw!r}")
    return tuple(_to_float(key, s) for s in items)


@dataclass(frozen=True)
class RunConfig:
    """Fully parsed and validated run configuration."""

    g_khz: float = 50.0
    omega_khz: float = 50.0
    delta_ratio: float = 3.0
    nmax_plus: int = 4
    nmax_minus: int = 2
    tail_tol: float = 1e-3
    gamma: float = math.pi
    loop_knots: tuple[tuple[float, float], ...] = ()
    loop_leg_times: tuple[float, ...] = ()
    loop_time_ms: float = 6.0
    samples_per_leg: int = 256
    cavity_kind: str = "fock"
    cavity_photons: int = 0
    cavity_alpha: float = 0.0
    xi_points: int = 33
    mode: str = "full"
    dt_ms: float | None = None
    round_flips: bool = True
    out_dir: str = "runs"
    seed: int = 0
    alphas: tuple[float, ...] = (0.0, 0.5)
    time_ladder_ms: tuple[float, ...] = (0.6, 1.2, 2.4)
    doublets: tuple[tuple[int, int], ...] = ((0, 0),)
    branch: str = "both"
    raw: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.g_khz <= 0 or self.omega_khz <= 0:
            raise ConfigError(
                "field 'g_khz'/'omega_khz': couplings must be positive "
                "(the protocol needs a finite Rabi-flip period)"
            )
        if self.delta_ratio <= 0:
            raise ConfigError(
                f"field 'delta_ratio': must be positive, got {self.delta_ratio}"
            )
        if self.nmax_plus < 1 or self.nmax_minus < 0:
            raise ConfigError(
                "field 'nmax_plus'/'nmax_minus': need nmax_plus >= 1, nmax_minus >= 0"
            )
        if self.tail_tol <= 0:
            raise ConfigError(f"field 'tail_tol': must be positive, got {self.tail_tol}")
        if not (0.0 <= self.gamma < 2.0 * TWO_PI):
            raise ConfigError(
                f"field 'gamma': must lie in [0, 4*pi), got {self.gamma}"
            )
        if self.loop_time_ms <= 0:
            raise ConfigError(
                f"field 'loop_time_ms': must be positive, got {self.loop_time_ms}"
            )
        if self.samples_per_leg < 2:
            raise ConfigError(
                f"field 'samples_per_leg': must be >= 2, got {self.samples_per_leg}"
            )
        if self.xi_points < 16:
            raise ConfigError(
                f"field 'xi_points': fringe fit needs >= 16 samples, got {self.xi_points}"
            )
        if self.mode not in ("full", "ideal"):
            raise ConfigError(f"field 'mode': must be 'full' or 'ideal', got {self.mode!r}")
        if self.dt_ms is not None and self.dt_ms <= 0:
            raise ConfigError(f"field 'dt_ms': must be positive, got {self.dt_ms}")
        if self.branch not in ("upper", "lower", "both"):
            raise ConfigError(
                f"field 'branch': must be upper, lower, or both, got {self.branch!r}"
            )
        if self.cavity_kind == "fock" and self.cavity_photons > self.nmax_plus:
            raise ConfigError(
                f"field 'cavity': fock photon number {self.cavity_photons} "
                f"exceeds nmax_plus {self.nmax_plus}"
            )
        for n, m in self.doublets:
            if n < 0 or m < 0:
                raise ConfigError(f"field 'doublets': labels must be >= 0, got ({n},{m})")
            if n + 1 > self.nmax_plus or m > self.nmax_minus:
                raise ConfigError(
                    f"field 'doublets': doublet ({n},{m}) needs nmax_plus >= {n + 1} "
                    f"and nmax_minus >= {m}"
                )
        if not self.time_ladder_ms or any(t <= 0 for t in self.time_ladder_ms):
            raise ConfigError("field 'time_ladder_ms': need positive loop times")
        if any(a < 0 for a in self.alphas):
            raise ConfigError("field 'alphas': amplitudes must be >= 0")

    # ---- derived quantities -------------------------------------------------

    @property
    def g(self) -> float:
        """Coupling in rad/ms."""
        return TWO_PI * self.g_khz

    @property
    def omega(self) -> float:
        """Drive Rabi frequency in rad/ms."""
        return TWO_PI * self.omega_khz

    @property
    def delta(self) -> float:
        """Detuning in rad/ms."""
        return self.delta_ratio * self.omega

    def model_params(self) -> ModelParams:
        return ModelParams(g=self.g, omega_drive=self.omega, delta=self.delta)

    def space(self) -> SpaceConfig:
        return make_space(self.nmax_plus, self.nmax_minus)

    def loop(self) -> PathSpec:
        if self.loop_knots:
            return piecewise_path(self.loop_knots, self.loop_leg_times)
        return lasso_path(self.gamma, self.loop_time_ms)

    def cavity(self) -> CavityInput:
        if self.cavity_kind == "fock":
            return CavityInput(
                kind="fock", photon_number=self.cavity_photons, tail_tol=self.tail_tol
            )
        return CavityInput(
            kind="coherent", alpha=self.cavity_alpha, tail_tol=self.tail_tol
        )

    def ramsey_config(self) -> RamseyConfig:
        return RamseyConfig(
            space=self.space(),
            params=self.model_params(),
            loop=self.loop(),
            cavity=self.cavity(),
            round_to_flips=self.round_flips,
            xi_grid=default_xi_grid(self.xi_points),
            mode=self.mode,
            dt=self.dt_ms,
            samples_per_leg=self.samples_per_leg,
        )

    def echo_items(self) -> list[tuple[str, str]]:
        """Resolved config as (key, formatted value) pairs in fixed order."""
        cavity = (
            f"fock:{self.cavity_photons}"
            if self.cavity_kind == "fock"
            else f"coherent:{_fmt(self.cavity_alpha)}"
        )
        items: list[tuple[str, str]] = [
            ("g_khz", _fmt(self.g_khz)),
            ("omega_khz", _fmt(self.omega_khz)),
            ("delta_ratio", _fmt(self.delta_ratio)),
            ("nmax_plus", str(self.nmax_plus)),
            ("nmax_minus", str(self.nmax_minus)),
            ("tail_tol", _fmt(self.tail_tol)),
            ("gamma", _fmt(self.gamma)),
            (
                "loop_knots",
                ";".join(f"{_fmt(t)}:{_fmt(p)}" for t, p in self.loop_knots) or "none",
            ),
            (
                "loop_leg_times",
                ";".join(_fmt(t) for t in self.loop_leg_times) or "none",
            ),
            ("loop_time_ms", _fmt(self.loop_time_ms)),
            ("samples_per_leg", str(self.samples_per_leg)),
            ("cavity", cavity),
            ("xi_points", str(self.xi_points)),
            ("mode", self.mode),
            ("dt_ms", _fmt(self.dt_ms) if self.dt_ms is not None else "auto"),
            ("round_flips", "true" if self.round_flips else "false"),
            ("out_dir", self.out_dir),
            ("seed", str(self.seed)),
            ("alphas", ",".join(_fmt(a) for a in self.alphas)),
            ("time_ladder_ms", ",".join(_fmt(t) for t in self.time_ladder_ms)),
            ("doublets", ";".join(f"{n},{m}" for n, m in self.doublets)),
            ("branch", self.branch),
            ("g_rad_per_ms", _fmt(self.g)),
            ("omega_rad_per_ms", _fmt(self.omega)),
            ("delta_rad_per_ms", _fmt(self.delta)),
            ("lambda_rad_per_ms", _fmt(self.model_params().lam)),
            ("flip_period_ms", _fmt(self.model_params().flip_period)),
        ]
        return items


def _parse_cavity(raw: str) -> tuple[str, int, float]:
    parts = raw.strip().split(":")
    kind = parts[0].strip().lower()
    if kind == "fock":
        n = _to_int("cavity", parts[1]) if len(parts) > 1 and parts[1].strip() else 0
        return "fock", n, 0.0
    if kind == "coherent":
        if len(parts) < 2 or not parts[1].strip():
            raise ConfigError("field 'cavity': coherent input needs an amplitude, e.g. coherent:1.5")
        return "coherent", 0, _to_float("cavity", parts[1])
    raise ConfigError(f"field 'cavity': expected fock:N or coherent:ALPHA, got {raw!r}")


def _parse_knots(raw: str) -> tuple[tuple[float, float], ...]:
    knots = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ConfigError(
                f"field 'loop_knots': expected theta:phi entries, got {chunk!r}"
            )
        knots.append((_to_float("loop_knots", parts[0]), _to_float("loop_knots", parts[1])))
    return tuple(knots)


def _parse_doublets(raw: str) -> tuple[tuple[int, int], ...]:
    doublets = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(f"field 'doublets': expected n,m entries, got {chunk!r}")
        doublets.append((_to_int("doublets", parts[0]), _to_int("doublets", parts[1])))
    if not doublets:
        raise ConfigError("field 'doublets': need at least one n,m entry")
    return tuple(doublets)


def _mode_alias(raw: str) -> str:
    low = raw.strip().lower()
    if low in ("full", "full-dynamics"):
        return "full"
    if low in ("ideal", "ideal-phase"):
        return "ideal"
    return low


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse `key = value` lines into a validated RunConfig."""
    values = dict(_DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {line.strip()!r}")
        key, _, raw_value = stripped.partition("=")
        key = key.strip()
        if key not in values:
            raise ConfigError(f"{source}:{lineno}: unknown field {key!r}")
        values[key] = raw_value.strip()
    return _build_config(values)


def _build_config(values: dict[str, str]) -> RunConfig:
    cavity_kind, cavity_photons, cavity_alpha = _parse_cavity(values["cavity"])
    knots = _parse_knots(values["loop_knots"]) if values["loop_knots"].strip() else ()
    leg_times = (
        _float_list("loop_leg_times", values["loop_leg_times"], sep=";")
        if values["loop_leg_times"].strip()
        else ()
    )
    if knots and not leg_times:
        raise ConfigError("field 'loop_leg_times': required when loop_knots is set")
    dt_raw = values["dt_ms"].strip()
    return RunConfig(
        g_khz=_to_float("g_khz", values["g_khz"]),
        omega_khz=_to_float("omega_khz", values["omega_khz"]),
        delta_ratio=_to_float("delta_ratio", values["delta_ratio"]),
        nmax_plus=_to_int("nmax_plus", values["nmax_plus"]),
        nmax_minus=_to_int("nmax_minus", values["nmax_minus"]),
        tail_tol=_to_float("tail_tol", values["tail_tol"]),
        gamma=_to_float("gamma", values["gamma"]),
        loop_knots=knots,
        loop_leg_times=leg_times,
        loop_time_ms=_to_float("loop_time_ms", values["loop_time_ms"]),
        samples_per_leg=_to_int("samples_per_leg", values["samples_per_leg"]),
        cavity_kind=cavity_kind,
        cavity_photons=cavity_photons,
        cavity_alpha=cavity_alpha,
        xi_points=_to_int("xi_points", values["xi_points"]),
        mode=_mode_alias(values["mode"]),
        dt_ms=_to_float("dt_ms", dt_raw) if dt_raw else None,
        round_flips=_to_bool("round_flips", values["round_flips"]),
        out_dir=values["out_dir"].strip() or "runs",
        seed=_to_int("seed", values["seed"]),
        alphas=_float_list("alphas", values["alphas"]),
        time_ladder_ms=_float_list("time_ladder_ms", values["time_ladder_ms"]),
        doublets=_parse_doublets(values["doublets"]),
        branch=values["branch"].strip().lower(),
        raw=dict(values),
    )


def load_config(path: str | None) -> RunConfig:
    """Load a config file, or the built-in defaults when path is None."""
    if path is None:
        return _build_config(dict(_DEFAULTS))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return parse_config_text(text, source=path)


# ---- output helpers ---------------------------------------------------------


def _fmt(x) -> str:
    """12-significant-digit scientific notation for floats."""
    if x is None:
        return "nan"
    return f"{float(x):.11e}"


def _header_lines(config: RunConfig, subcommand: str, extra: list[tuple[str, str]]) -> list[str]:
    lines = [f"# loopqed {__version__}"]
    lines.append(f"# subcommand = {subcommand}")
    for key, value in config.echo_items():
        lines.append(f"# {key} = {value}")
    lines.append("# units: frequencies entered in kHz; angular frequency = 2*pi*f_khz rad/ms")
    for key, value in extra:
        lines.append(f"# {key} = {value}")
    return lines


def _write_csv(
    out_dir: str,
    filename: str,
    header: list[str],
    columns: list[str],
    rows: list[list[str]],
) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, filename)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return path


# ---- subcommands ------------------------------------------------------------


def cmd_fringe(config: RunConfig, out_dir: str | None = None, threads: int = 1) -> list[str]:
    """Run one fringe scan; write fringe.csv."""
    result = run_experiment(config.ramsey_config())
    md = result.metadata
    extra = [
        ("gamma_solid_angle", _fmt(md["gamma"])),
        ("tau_used_ms", _fmt(md["tau_used_ms"])),
        ("rabi_flips", str(md["rabi_flips"]) if md["rabi_flips"] is not None else "none"),
        ("fitted_shift_rad", _fmt(result.fitted_shift)),
        ("fit_residual", _fmt(result.fit_residual)),
        ("loop_fit_offset", _fmt(result.loop_fit.offset)),
        ("loop_fit_amplitude", _fmt(result.loop_fit.amplitude)),
        ("loop_fit_phase_rad", _fmt(result.loop_fit.phase)),
        ("caliber_fit_phase_rad", _fmt(result.caliber_fit.phase)),
        ("adiabaticity_ratio", _fmt(md["adiabaticity_ratio"])),
        ("cyclicity_loop", _fmt(md["cyclicity_loop"])),
        ("cyclicity_caliber", _fmt(md["cyclicity_caliber"])),
        ("flags", ";".join(md["flags"]) or "none"),
    ]
    rows = [
        [_fmt(xi), _fmt(p_loop), _fmt(p_cal)]
        for xi, p_loop, p_cal in zip(result.xi_grid, result.p2_loop, result.p2_caliber)
    ]
    path = _write_csv(
        out_dir or config.out_dir,
        "fringe.csv",
        _header_lines(config, "fringe", extra),
        ["xi_rad", "p2_loop", "p2_caliber"],
        rows,
    )
    print(
        f"fringe: shift = {result.fitted_shift:.6f} rad, "
        f"residual = {result.fit_residual:.2e}, "
        f"adiabaticity ratio = {md['adiabaticity_ratio']:.3e}, "
        f"cyclicity = {md['cyclicity_loop']:.6f} -> {path}"
    )
    return [path]


def cmd_alpha_sweep(
    config: RunConfig,
    alphas: tuple[float, ...] | None = None,
    out_dir: str | None = None,
    threads: int = 1,
) -> list[str]:
    """Sweep coherent amplitudes; write alpha_sweep.csv."""
    alpha_list = alphas if alphas is not None else config.alphas
    base = config.ramsey_config()
    gamma = solid_angle(base.loop)

    def one(alpha: float):
        try:
            return effective_shift_vs_alpha([alpha], gamma, config.mode, base)[0]
        except TruncationError as exc:
            raise ConfigError(
                f"alpha-sweep: truncation inadequate for alpha = {alpha}: {exc}"
            ) from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, alpha_list))
    else:
        results = [one(a) for a in alpha_list]

    rows = [
        [
            _fmt(r.alpha),
            _fmt(r.shift_sim),
            _fmt(r.shift_formula),
            _fmt(r.p2_dark_sim),
            _fmt(r.p2_dark_formula),
            _fmt(r.fit_residual),
        ]
        for r in results
    ]
    extra = [("gamma_solid_angle", _fmt(gamma))]
    path = _write_csv(
        out_dir or config.out_dir,
        "alpha_sweep.csv",
        _header_lines(config, "alpha-sweep", extra),
        [
            "alpha",
            "shift_sim_rad",
            "shift_formula_rad",
            "p2_dark_sim",
            "p2_dark_formula",
            "fit_residual",
        ],
        rows,
    )
    for r in results:
        print(
            f"alpha-sweep: alpha = {r.alpha:g}, shift = {r.shift_sim:.6f} rad "
            f"(formula {r.shift_formula:.6f})"
        )
    print(f"alpha-sweep: -> {path}")
    return [path]


def cmd_adiabaticity(
    config: RunConfig,
    time_ladder_ms: tuple[float, ...] | None = None,
    out_dir: str | None = None,
    threads: int = 1,
) -> list[str]:
    """Fringe error versus loop time; write adiabaticity.csv."""
    ladder = time_ladder_ms if time_ladder_ms is not None else config.time_ladder_ms
    base = config.ramsey_config()

    def one(T: float):
        return adiabaticity_study(base, [T])[0]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, ladder))
    else:
        results = [one(T) for T in ladder]

    monotone = all(
        results[i + 1].max_abs_p2_error < results[i].max_abs_p2_error
        for i in range(len(results) - 1)
    )
    rows = [
        [_fmt(r.loop_time_ms), _fmt(r.max_abs_p2_error), _fmt(r.adiabaticity_ratio)]
        for r in results
    ]
    extra = [("monotone_decreasing", "yes" if monotone else "no")]
    path = _write_csv(
        out_dir or config.out_dir,
        "adiabaticity.csv",
        _header_lines(config, "adiabaticity", extra),
        ["loop_time_ms", "max_abs_p2_error", "adiabaticity_ratio"],
        rows,
    )
    for r in results:
        print(
            f"adiabaticity: T = {r.loop_time_ms:g} ms, "
            f"max |P2 error| = {r.max_abs_p2_error:.4e}"
        )
    print(f"adiabaticity: monotone decreasing = {'yes' if monotone else 'no'} -> {path}")
    return [path]


def cmd_dressed_phases(
    config: RunConfig,
    doublets: tuple[tuple[int, int], ...] | None = None,
    out_dir: str | None = None,
    threads: int = 1,
) -> list[str]:
    """Adiabatic transport phases per doublet; write dressed_phases.csv.

    The analytic column is the resonant-doublet law (branch sign times
    gamma/2*(n - m + 1/2)); a doublet is resonant exactly when
    omega^2 = g^2 * (n + 1 + m).  The resonant column records whether that
    holds for the configured couplings; off resonance the transported
    phases straddle the law and the pairing is only approximate.
    """
    wanted = doublets if doublets is not None else config.doublets
    space = config.space()
    params = config.model_params()
    loop = config.loop()
    gamma = solid_angle(loop)

    def one(doublet: tuple[int, int]):
        n, m = doublet
        try:
            pair = dressed_phase_pair(
                space,
                params,
                loop,
                doublet,
                samples_per_leg=config.samples_per_leg,
                dt=config.dt_ms,
            )
            return doublet, pair, None
        except DegeneracyError as exc:
            return doublet, None, str(exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, wanted))
    else:
        results = [one(d) for d in wanted]

    branches = ("upper", "lower") if config.branch == "both" else (config.branch,)
    rows = []
    failed = []
    for (n, m), pair, error in results:
        resonant = (
            abs(params.omega_drive**2 - params.g**2 * (n + 1 + m))
            <= 1e-9 * max(params.omega_drive**2, params.g**2)
        )
        for branch in branches:
            analytic = analytic_dressed_phase(n, m, gamma, branch)
            if error is not None:
                rows.append(
                    [str(n), str(m), branch, "nan", _fmt(analytic),
                     "yes" if resonant else "no", "nan", "nan", "degenerate"]
                )
                continue
            reading = pair[branch]
            rows.append(
                [
                    str(n),
                    str(m),
                    branch,
                    _fmt(reading.geometric_phase),
                    _fmt(analytic),
                    "yes" if resonant else "no",
                    _fmt(reading.cyclicity),
                    _fmt(reading.metadata.get("min_gap")),
                    "ok",
                ]
            )
        if error is not None:
            failed.append(((n, m), error))

    extra = [("gamma_solid_angle", _fmt(gamma))]
    path = _write_csv(
        out_dir or config.out_dir,
        "dressed_phases.csv",
        _header_lines(config, "dressed-phases", extra),
        [
            "n",
            "m",
            "branch",
            "numeric_phase_rad",
            "analytic_phase_rad",
            "resonant",
            "cyclicity",
            "min_gap_rad_per_ms",
            "status",
        ],
        rows,
    )
    for row in rows:
        print(
            f"dressed-phases: (n,m) = ({row[0]},{row[1]}) {row[2]}: "
            f"numeric = {row[3]}, analytic = {row[4]}, status = {row[8]}"
        )
    print(f"dressed-phases: -> {path}")
    if failed:
        for (n, m), error in failed:
            print(f"dressed-phases: doublet ({n},{m}) failed: {error}", file=sys.stderr)
        raise DegeneracyError(
            f"{len(failed)} doublet(s) hit a degeneracy; see dressed_phases.csv"
        )
    return [path]


# ---- entry point ------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems as ConfigError (exit 1)."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="loopqed",
        description=(
            "Simulate Ramsey interferometry of geometric phases produced by "
            "adiabatic polarization loops in a two-mode cavity."
        ),
    )
    parser.add_argument("--version", action="version", version=f"loopqed {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="path to key = value config file")
        p.add_argument("--out", default=None, help="output directory (overrides out_dir)")
        p.add_argument("--threads", type=int, default=1, help="parallel sweep workers")

    p_fringe = sub.add_parser("fringe", help="one Ramsey fringe scan")
    common(p_fringe)

    p_alpha = sub.add_parser("alpha-sweep", help="fringe shift vs coherent amplitude")
    common(p_alpha)
    p_alpha.add_argument(
        "--alphas", default=None, help="comma-separated amplitudes (overrides config)"
    )

    p_adia = sub.add_parser("adiabaticity", help="fringe error vs loop time")
    common(p_adia)
    p_adia.add_argument(
        "--times", default=None, help="comma-separated loop times in ms (overrides config)"
    )

    p_dressed = sub.add_parser("dressed-phases", help="adiabatic transport phases")
    common(p_dressed)
    p_dressed.add_argument(
        "--doublets", default=None, help="semicolon-separated n,m pairs (overrides config)"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    """CLI entry point; returns the process exit code."""
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        config = load_config(args.config)
        if args.subcommand == "fringe":
            cmd_fringe(config, out_dir=args.out, threads=args.threads)
        elif args.subcommand == "alpha-sweep":
            alphas = _float_list("--alphas", args.alphas) if args.alphas else None
            cmd_alpha_sweep(config, alphas=alphas, out_dir=args.out, threads=args.threads)
        elif args.subcommand == "adiabaticity":
            ladder = _float_list("--times", args.times) if args.times else None
            cmd_adiabaticity(
                config, time_ladder_ms=ladder, out_dir=args.out, threads=args.threads
            )
        elif args.subcommand == "dressed-phases":
            wanted = _parse_doublets(args.doublets) if args.doublets else None
            cmd_dressed_phases(
                config, doublets=wanted, out_dir=args.out, threads=args.threads
            )
        else:  # pragma: no cover - argparse enforces the subcommand set
            raise ConfigError(f"unknown subcommand {args.subcommand!r}")
        return 0
    except (ConfigError, TruncationError) as exc:
        print(f"loopqed: validation error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationError, DegeneracyError) as exc:
        print(f"loopqed: numerical error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"loopqed: validation error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
