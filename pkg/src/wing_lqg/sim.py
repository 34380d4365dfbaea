"""Fixed-step simulation of open-loop, full-state and LQG closed loops.

Dynamics are advanced with classical fourth-order Runge-Kutta.  Because every
loop here is linear and autonomous, one RK4 step is exactly multiplication by
the degree-four Taylor polynomial of ``h A``, which is precomputed once.
Process and measurement noise are added after each deterministic step as
Euler-Maruyama increments ``sqrt(dt) * G @ xi`` with ``xi ~ N(0, I)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DivergenceError, ParameterError
from .kalman import Compensator, NoiseSpec
from .riccati import RiccatiSolution

DIVERGENCE_FACTOR = 1e6
INITIAL_CONDITIONS = ("mode1-bend", "mode1-twist", "mixed")


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    Parameters
    ----------
    t_final : float
    dt : float, optional
        Step size.  Defaults to ``0.05 / max|eig|``; values above
        ``0.1 / max|eig|`` are rejected.
    seed : int
    noise : bool
        Inject process and measurement noise (LQG loops only).
    initial : str or array_like
        Named initial condition or an explicit plant state.
    amplitude : float
        Scale of a named initial condition.
    y_grid : int
        Number of span stations for reconstructed fields.
    record_every : int
        Keep every k-th step; ``0`` picks a stride giving about 2000 samples.
    """

    t_final: float = 30.0
    dt: float | None = None
    seed: int = 0
    noise: bool = False
    initial: object = "mixed"
    amplitude: float = 1.0
    y_grid: int = 21
    record_every: int = 0


@dataclass(frozen=True)
class SimModel:
    """A linear autonomous loop ready for integration.

    ``x' = A x`` plus noise ``G xi``.  ``plant`` selects the beam (or beam + aero)
    state, ``estimate`` the filter state if present.  ``control`` maps ``x`` to
    ``u``; ``innovation`` maps ``x`` to ``C (zeta - zhat)`` and ``innovation_noise``
    maps the noise sample to ``D w``.
    """

    A: np.ndarray
    n_plant: int
    plant_labels: list
    control: np.ndarray
    G: np.ndarray | None = None
    estimate: bool = False
    innovation: np.ndarray | None = None
    innovation_noise: np.ndarray | None = None
    beam_system: object = None

    @property
    def n(self) -> int:
        return self.A.shape[0]


def open_loop_model(system) -> SimModel:
    n = system.A.shape[0]
    return SimModel(np.asarray(system.A), n, list(system.labels), np.zeros((2, n)), beam_system=_beam(system))


def full_state_model(system, regulator: RiccatiSolution) -> SimModel:
    A = np.asarray(system.A) - np.asarray(system.B) @ regulator.K
    return SimModel(A, A.shape[0], list(system.labels), -np.asarray(regulator.K), beam_system=_beam(system))


def lqg_model(system, comp: Compensator, noise: bool = True) -> SimModel:
    n = comp.n_plant
    control = np.hstack([np.zeros((2, n)), -comp.K_reg])
    innov = np.hstack([comp.C, -comp.C])
    q = comp.noise_input.shape[1] - 2
    innov_noise = np.hstack([np.zeros((2, q)), comp.D])
    G = comp.noise_input if noise else None
    return SimModel(comp.A, n, list(system.labels), control, G, True, innov, innov_noise, _beam(system))


def _beam(system):
    return getattr(system, "beam", system)


def named_initial(name: str, n_plant: int, N: int, amplitude: float = 1.0) -> np.ndarray:
    """Plant initial state.

    ``mode1-bend``: unit first bending displacement; ``mode1-twist``: unit
    first twist angle; ``mixed``: both, plus a half-unit second bending mode.
    Aerodynamic states (if any) start at zero.
    """
    x = np.zeros(n_plant)
    if name == "mode1-bend":
        x[0] = 1.0
    elif name == "mode1-twist":
        x[2 * N] = 1.0
    elif name == "mixed":
        x[0] = 1.0
        x[2 * N] = 1.0
        if N > 1:
            x[1] = 0.5
    else:
        raise ParameterError(f"unknown initial condition {name!r}; choose from {INITIAL_CONDITIONS}")
    return amplitude * x


def rk4_step(f: Callable, x: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``x' = f(x)``."""
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_transition(A: np.ndarray, h: float) -> np.ndarray:
    """Matrix of one RK4 step for ``x' = A x``: ``I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24``."""
    hA = h * A
    T = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, 5):
        term = term @ hA / k
        T = T + term
    return T


def spectral_radius(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A)))) if np.size(A) else 0.0


def default_dt(A, t_final: float) -> float:
    rho = spectral_radius(A)
    return 0.05 / rho if rho > 0 else t_final / 1000.0


@dataclass
class SimulationTrace:
    """Recorded samples.  ``states`` holds the plant state; ``estimates`` the filter state."""

    times: np.ndarray
    states: np.ndarray
    estimates: np.ndarray | None
    controls: np.ndarray
    innovations: np.ndarray | None
    labels: list
    dt: float
    beam_system: object = field(repr=False, default=None)

    def fields(self, y, which: str = "plant") -> dict:
        """Reconstructed ``w, w_t, theta, theta_t`` at span stations ``y``."""
        from .statespace import reconstruct_fields

        beam = self.beam_system
        nb = beam.n_states
        if which == "plant":
            z = self.states[:, :nb]
        elif which == "error":
            if self.estimates is None:
                raise ParameterError("trace has no estimates")
            z = self.states[:, :nb] - self.estimates[:, :nb]
        else:
            raise ParameterError(f"unknown field source {which!r}")
        return reconstruct_fields(beam, z, y)


def integrate(model: SimModel, config: SimConfig, x0=None) -> SimulationTrace:
    """Integrate a loop from ``x0`` (plant state; estimate starts at zero).

    Raises
    ------
    ParameterError
        If ``dt`` exceeds the RK4 stability guard ``0.1 / max|eig(A)|``.
    DivergenceError
        If the state norm grows past ``1e6`` times its initial value.
    """
    if not (config.t_final > 0):
        raise ParameterError("t_final must be positive")
    A = np.asarray(model.A, dtype=float)
    rho = spectral_radius(A)
    dt = config.dt if config.dt else default_dt(A, config.t_final)
    if dt <= 0:
        raise ParameterError("dt must be positive")
    if rho > 0 and dt > 0.1 / rho * (1 + 1e-12):
        raise ParameterError(f"dt={dt:.3g} exceeds stability guard 0.1/max|eig| = {0.1 / rho:.3g}")
    steps = int(math.ceil(config.t_final / dt - 1e-9))
    stride = config.record_every or max(1, steps // 2000)

    N = model.beam_system.N
    if x0 is None:
        init = config.initial
        if isinstance(init, str):
            plant0 = named_initial(init, model.n_plant, N, config.amplitude)
        else:
            plant0 = np.asarray(init, dtype=float)
    else:
        plant0 = np.asarray(x0, dtype=float)
    if plant0.shape != (model.n_plant,):
        raise ParameterError(f"initial state must have {model.n_plant} entries")
    x = np.zeros(model.n)
    x[:model.n_plant] = plant0

    T = rk4_transition(A, dt)
    G = model.G if config.noise else None
    rng = np.random.default_rng(config.seed)
    sq = math.sqrt(dt)
    limit = DIVERGENCE_FACTOR * np.linalg.norm(x) if np.linalg.norm(x) > 0 else math.inf

    n_rec = steps // stride + 1
    times = np.empty(n_rec)
    xs = np.empty((n_rec, model.n))
    innov = np.empty((n_rec, 2)) if model.estimate else None
    times[0] = 0.0
    xs[0] = x
    noise_sample = np.zeros(G.shape[1]) if G is not None else None
    if innov is not None:
        innov[0] = model.innovation @ x
    r = 1
    for k in range(1, steps + 1):
        x = T @ x
        if G is not None:
            noise_sample = rng.standard_normal(G.shape[1])
            x = x + sq * (G @ noise_sample)
        if k % stride == 0:
            nrm = np.linalg.norm(x)
            if not np.isfinite(nrm) or nrm > limit:
                raise DivergenceError(k, nrm)
            times[r] = k * dt
            xs[r] = x
            if innov is not None:
                val = model.innovation @ x
                if noise_sample is not None:
                    val = val + model.innovation_noise @ noise_sample / sq
                innov[r] = val
            r += 1
    times, xs = times[:r], xs[:r]
    if innov is not None:
        innov = innov[:r]
    controls = xs @ model.control.T
    est = xs[:, model.n_plant:] if model.estimate else None
    return SimulationTrace(times, xs[:, :model.n_plant].copy(), est, controls, innov,
                           model.plant_labels, dt, model.beam_system)


def envelope_slope(times, values, *, t_start: float = 0.0, t_stop: float | None = None) -> float:
    """Slope of ``log(values)`` against time fitted through running maxima.

    The running-from-the-right maximum removes oscillation so that the fit
    tracks the decay envelope.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = t >= t_start
    if t_stop is not None:
        sel &= t <= t_stop
    t, v = t[sel], v[sel]
    env = np.maximum.accumulate(v[::-1])[::-1]
    keep = env > 0
    if keep.sum() < 3:
        raise ParameterError("not enough samples for an envelope fit")
    return float(np.polyfit(t[keep], np.log(env[keep]), 1)[0])


def spectral_abscissa(A) -> float:
    return float(np.max(np.linalg.eigvals(A).real))


def with_overrides(config: SimConfig, **kw) -> SimConfig:
    return replace(config, **kw)


# ---------------------------------------------------------------------------
# named scenarios

SCENARIOS = {
    "example16-fullstate": ("example16", "full-state", False),
    "example16-lqg": ("example16", "lqg", False),
    "example16-filter-error": ("example16", "lqg", True),
    "wing32-fullstate": ("wing32", "full-state", False),
}


@dataclass
class ScenarioResult:
    name: str
    config: object
    system: object
    regulator: RiccatiSolution
    filter: object
    trace: SimulationTrace
    files: dict = field(default_factory=dict)


def scenario_name(preset: str, feedback: str, filter_error: bool = False) -> str:
    for name, spec in SCENARIOS.items():
        if spec == (preset, feedback, filter_error):
            return name
    from .errors import UnknownScenarioError

    raise UnknownScenarioError(f"no scenario for preset {preset!r} with feedback {feedback!r}")


def run_scenario(name: str, overrides: dict | None = None, *, config=None, output_dir=None) -> ScenarioResult:
    """Build, design and simulate a named scenario.

    Parameters
    ----------
    name : str
        One of ``SCENARIOS``.
    overrides : dict, optional
        Config keys applied on top of the preset (or ``config``).
    config : RunConfig, optional
        Base configuration; defaults to the scenario's preset.
    output_dir : path, optional
        If given, CSV outputs and the effective config are written there.
    """
    from .config import RunConfig
    from .errors import UnknownScenarioError
    from .kalman import assemble_compensator, design_filter
    from .riccati import solve_are

    if name not in SCENARIOS:
        raise UnknownScenarioError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    preset, feedback, filter_error = SCENARIOS[name]
    cfg = config if config is not None else RunConfig.from_preset(preset)
    cfg = cfg.updated(overrides).updated({"sim.feedback": feedback})
    if preset == "wing32":
        system = cfg.combined_system()
        Q = cfg.combined_weight()
    else:
        system = cfg.modal_system()
        Q = cfg.weights().Q()
    reg = solve_are(system.A, system.B, Q, cfg.weights().R, labels=system.labels)
    filt = None
    if feedback == "full-state":
        model = full_state_model(system, reg)
    else:
        noise = cfg.noise(n_extra=system.A.shape[0] - 4 * cfg["modal.n"])
        filt = design_filter(system, noise)
        comp = assemble_compensator(system, reg, filt, noise)
        model = lqg_model(system, comp)
    sim_cfg = cfg.sim_config()
    trace = integrate(model, sim_cfg)
    result = ScenarioResult(name, cfg, system, reg, filt, trace)
    if output_dir is not None:
        result.files = write_trace(trace, output_dir, sim_cfg.y_grid, error_field=filter_error)
        from ._io import write_text
        from pathlib import Path

        result.files["config"] = write_text(Path(output_dir) / "config.txt", cfg.serialize())
    return result


def _field_rows(times, y, fields):
    for i, t in enumerate(times):
        for j, yj in enumerate(y):
            yield (t, yj) + tuple(fields[k][i, j] for k in ("w", "w_t", "theta", "theta_t"))


def write_trace(trace: SimulationTrace, output_dir, y_grid: int = 21, *, error_field: bool = False) -> dict:
    """Write ``states.csv``, ``field.csv``, ``controls.csv`` and, for LQG runs, ``innovations.csv``."""
    from pathlib import Path

    from ._io import write_csv

    out = Path(output_dir)
    files = {}
    t = trace.times
    files["states"] = write_csv(out / "states.csv", ["t"] + list(trace.labels),
                                (np.r_[ti, row] for ti, row in zip(t, trace.states)))
    y = np.linspace(0.0, trace.beam_system.basis.L, y_grid)
    files["field"] = write_csv(out / "field.csv", ["t", "y", "w", "w_t", "theta", "theta_t"],
                               _field_rows(t, y, trace.fields(y)))
    files["controls"] = write_csv(out / "controls.csv", ["t", "u1", "u2"],
                                  (np.r_[ti, row] for ti, row in zip(t, trace.controls)))
    if trace.innovations is not None:
        files["innovations"] = write_csv(out / "innovations.csv", ["t", "i1", "i2"],
                                         (np.r_[ti, row] for ti, row in zip(t, trace.innovations)))
    if error_field:
        files["error_field"] = write_csv(out / "error_field.csv", ["t", "y", "w_err", "theta_err"],
                                         error_field_rows(trace, y))
    return files


def error_field_rows(trace: SimulationTrace, y):
    """Rows ``(t, y, w_err, theta_err)`` of the reconstructed estimation error."""
    err = trace.fields(y, "error")
    for i, ti in enumerate(trace.times):
        for j, yj in enumerate(y):
            yield ti, yj, err["w"][i, j], err["theta"][i, j]
