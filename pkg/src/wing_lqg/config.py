"""Run configuration: presets, a flat ``key = value`` format, and object builders.

Example file::

    preset = example16
    # heavier control penalty
    weights.r11 = 10
    sim.t_final = 40
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParameterError
from .modal import BeamParameters, build_basis

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False, "on": True, "off": False}

SCHEMA = {
    "beam.mu": float,
    "beam.ei": float,
    "beam.gj": float,
    "beam.sy": float,
    "beam.iy": float,
    "beam.span": float,
    "beam.b1": float,
    "beam.b2": float,
    "modal.n": int,
    "modal.twist_start": int,
    "weights.q": float,
    "weights.r_exp_bend": float,
    "weights.r_exp_twist": float,
    "weights.r11": float,
    "weights.r22": float,
    "weights.q_aero": float,
    "noise.d11": float,
    "noise.d22": float,
    "noise.intensity": float,
    "aero.b": float,
    "aero.a": float,
    "aero.rho": float,
    "aero.u_inf": float,
    "aero.coupling": str,
    "sim.t_final": float,
    "sim.dt": float,
    "sim.seed": int,
    "sim.grid": int,
    "sim.initial": str,
    "sim.amplitude": float,
    "sim.feedback": str,
    "sim.noise": str,
    "sim.record_every": int,
}

_BASE = {
    "beam.mu": 1.0,
    "beam.ei": 1.0,
    "beam.gj": 1.0,
    "beam.sy": 0.5,
    "beam.iy": 1.0,
    "beam.span": 1.0,
    "beam.b1": 1.0,
    "beam.b2": 1.0,
    "modal.n": 4,
    "modal.twist_start": 1,
    "weights.q": 1.0,
    "weights.r_exp_bend": 0.0,
    "weights.r_exp_twist": 0.0,
    "weights.r11": 1.0,
    "weights.r22": 1.0,
    "weights.q_aero": 1.0,
    "noise.d11": 1.0,
    "noise.d22": 1.0,
    "noise.intensity": 1.0,
    "aero.b": 0.5,
    "aero.a": 0.0,
    "aero.rho": 0.0889,
    "aero.u_inf": 45.0,
    "aero.coupling": "one-way",
    "sim.t_final": 30.0,
    "sim.dt": 0.0,
    "sim.seed": 0,
    "sim.grid": 21,
    "sim.initial": "mixed",
    "sim.amplitude": 1.0,
    "sim.feedback": "full-state",
    "sim.noise": "auto",
    "sim.record_every": 0,
}

PRESETS = {
    # beam model used for the pole tables: torsion modes m = 1..N
    "example16": dict(_BASE),
    # beam with aerodynamic lag states: torsion modes m = 0..N-1
    "wing32": {**_BASE, "modal.twist_start": 0, "sim.t_final": 150.0},
}


def _coerce(key: str, raw, line=None):
    kind = SCHEMA[key]
    try:
        if kind is float:
            value = float(raw)
            if not np.isfinite(value):
                raise ValueError
            return value
        if kind is int:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            return int(raw)
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {raw!r} for {key}", line) from None


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration (every key present)."""

    preset: str
    values: dict = field(default_factory=dict)

    @classmethod
    def from_preset(cls, name: str = "example16") -> "RunConfig":
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return cls(name, dict(PRESETS[name]))

    def updated(self, overrides: dict | None = None) -> "RunConfig":
        vals = dict(self.values)
        for key, raw in (overrides or {}).items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            vals[key] = _coerce(key, raw)
        return RunConfig(self.preset, vals)

    @classmethod
    def parse(cls, text: str, *, preset: str | None = None) -> "RunConfig":
        """Parse ``key = value`` lines.  A ``preset`` line (or argument) selects the base."""
        entries = []
        file_preset = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if key == "preset":
                file_preset = value
                continue
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}", lineno)
            if any(k == key for k, _, _ in entries):
                raise ConfigError(f"duplicate key {key!r}", lineno)
            entries.append((key, value, lineno))
        base = cls.from_preset(preset or file_preset or "example16")
        vals = dict(base.values)
        for key, value, lineno in entries:
            vals[key] = _coerce(key, value, lineno)
        return cls(base.preset, vals)

    @classmethod
    def load(cls, path, *, preset: str | None = None) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read(), preset=preset)

    def serialize(self) -> str:
        lines = [f"preset = {self.preset}"]
        for key in SCHEMA:
            v = self.values[key]
            lines.append(f"{key} = {format(v, '.17g') if isinstance(v, float) else v}")
        return "\n".join(lines) + "\n"

    def __getitem__(self, key: str):
        return self.values[key]

    # -- builders -----------------------------------------------------------

    def beam_parameters(self) -> BeamParameters:
        v = self.values
        return BeamParameters(
            mu=v["beam.mu"], EI=v["beam.ei"], GJ=v["beam.gj"], S_y=v["beam.sy"],
            I_y=v["beam.iy"], L=v["beam.span"], B1=v["beam.b1"], B2=v["beam.b2"],
        )

    def basis(self):
        n = self.values["modal.n"]
        if n < 1:
            raise ParameterError("modal.n must be at least 1")
        return build_basis(self.values["beam.span"], n, twist_start=self.values["modal.twist_start"])

    def modal_system(self):
        from .statespace import build_modal_system

        return build_modal_system(self.beam_parameters(), self.basis())

    def weights(self):
        from .riccati import WeightSpec

        v = self.values
        return WeightSpec.power_law(
            v["modal.n"], q=v["weights.q"], r_bend=v["weights.r_exp_bend"], r_twist=v["weights.r_exp_twist"],
            R=np.diag([v["weights.r11"], v["weights.r22"]]), B=(v["beam.b1"], v["beam.b2"]),
            twist_start=v["modal.twist_start"],
        )

    def noise(self, n_extra: int = 0):
        from .kalman import NoiseSpec

        v = self.values
        return NoiseSpec.default(v["modal.n"], intensity=v["noise.intensity"], d11=v["noise.d11"],
                                 d22=v["noise.d22"], n_extra=n_extra)

    def aero_parameters(self):
        from .aero import AeroParameters

        v = self.values
        return AeroParameters(b=v["aero.b"], a=v["aero.a"], rho_inf=v["aero.rho"], U_inf=v["aero.u_inf"])

    def combined_system(self, coupling: str | None = None):
        from .aero import build_combined

        return build_combined(self.modal_system(), self.aero_parameters(),
                              coupling=coupling or self.values["aero.coupling"])

    def combined_weight(self) -> np.ndarray:
        N = self.values["modal.n"]
        return np.diag(np.concatenate([np.diag(self.weights().Q()), np.full(4 * N, self.values["weights.q_aero"])]))

    def sim_config(self):
        from .sim import SimConfig

        v = self.values
        noise = v["sim.noise"].lower()
        if noise == "auto":
            noise_on = v["sim.feedback"] == "lqg"
        elif noise in _BOOL:
            noise_on = _BOOL[noise]
        else:
            raise ConfigError(f"sim.noise must be auto/true/false, got {v['sim.noise']!r}")
        return SimConfig(
            t_final=v["sim.t_final"], dt=v["sim.dt"] or None, seed=v["sim.seed"], noise=noise_on,
            initial=v["sim.initial"], amplitude=v["sim.amplitude"], y_grid=v["sim.grid"],
            record_every=v["sim.record_every"],
        )
