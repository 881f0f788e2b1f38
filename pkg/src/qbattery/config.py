"""Flat JSON run/sweep configuration with exhaustive validation.

Frequencies are configured in Hz (cycles); a detuning quoted as
Delta/2pi = 1 MHz maps to delta_hz = 1e6.  Everything is converted to
rad/s internally.  Exactly one of xi / omega_eg_hz fixes the battery gap.
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .dynamics import ReservoirSpec
from .model import ModelParams, ProtocolParams
from .operators import ThermalSpec
from .protocols import ProtocolRun

TWO_PI = 2.0 * math.pi

KindName = Literal["classical", "quantum_single_shot", "quantum_sequential", "open_system"]
EngineName = Literal["analytic", "eff_numeric", "full_numeric", "lindblad"]


class RunConfig(BaseModel):
    """One protocol execution.  Defaults follow the benchmark parameter set."""

    model_config = ConfigDict(extra="forbid")

    kind: KindName = "quantum_single_shot"
    engine: EngineName = "analytic"
    delta_hz: float = Field(1e6, gt=0, description="single-photon detuning Delta/2pi")
    omega_m_hz: float = Field(1e12, gt=0, description="ancilla level frequency omega_m/2pi")
    xi: float | None = Field(None, gt=0, description="omega_q/omega_eg; fixes omega_eg")
    omega_eg_hz: float | None = Field(None, gt=0, description="battery gap omega_eg/2pi")
    omega_l_hz: float | None = Field(None, gt=0, description="drive coupling Omega_L/2pi; default delta_hz/20")
    g_q_hz: float | None = Field(None, gt=0, description="quantized f.c. coupling g_q/2pi; default delta_hz/600")
    omega_q_rabi_hz: float | None = Field(None, gt=0, description="classical f.c. coupling Omega_q/2pi; default g_q")
    temperature_mode: Literal["tbar", "absolute"] = "tbar"
    temperature: float = Field(0.1, ge=0, description="T-bar, or k_B T/h in Hz for absolute mode")
    target_n: int = Field(1, ge=1)
    stark_compensation: bool = True
    tau_s: float | None = Field(None, gt=0, description="interaction time; None = protocol default")
    steps: int = Field(0, ge=0, description="sequential steps; 0 = auto")
    n_max: int | None = Field(None, ge=1, description="Fock cutoff override; None = auto")
    eps_trunc: float = Field(1e-10, gt=0, lt=1)
    gamma0_hz: float = Field(0.0, ge=0, description="shared spontaneous rate gamma0/2pi")
    t_max_s: float | None = Field(None, gt=0, description="tau optimizer horizon")
    grid: int = Field(1200, ge=100, description="tau optimizer grid points")
    dispersive_factor: float = Field(10.0, gt=0)

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.xi is not None and self.omega_eg_hz is not None:
            raise ValueError("set exactly one of xi / omega_eg_hz, not both")
        if self.kind == "open_system" and self.engine != "lindblad":
            raise ValueError("open_system runs use engine='lindblad'")
        if self.kind != "open_system" and self.engine == "lindblad":
            raise ValueError("engine='lindblad' is only valid for kind='open_system'")
        if self.kind != "open_system" and self.gamma0_hz > 0:
            raise ValueError("gamma0_hz > 0 needs kind='open_system'")
        return self

    # -- conversions ------------------------------------------------------

    def model_params(self) -> ModelParams:
        delta = TWO_PI * self.delta_hz
        omega_m = TWO_PI * self.omega_m_hz
        omega_l = TWO_PI * self.omega_l_hz if self.omega_l_hz else delta / 20.0
        g_q = TWO_PI * self.g_q_hz if self.g_q_hz else delta / 600.0
        oq_rabi = TWO_PI * self.omega_q_rabi_hz if self.omega_q_rabi_hz else None
        common = dict(
            omega_m=omega_m,
            delta=delta,
            omega_l_rabi=omega_l,
            g_q=g_q,
            omega_q_rabi=oq_rabi,
            dispersive_factor=self.dispersive_factor,
        )
        if self.omega_eg_hz is not None:
            return ModelParams(omega_eg=TWO_PI * self.omega_eg_hz, **common)
        xi = self.xi if self.xi is not None else 99.0
        return ModelParams.from_xi(xi, **common)

    def thermal_spec(self) -> ThermalSpec:
        if self.temperature_mode == "tbar":
            return ThermalSpec("tbar", self.temperature, omega_m_ref=TWO_PI * self.omega_m_hz)
        return ThermalSpec("absolute", TWO_PI * self.temperature)

    def protocol_params(self) -> ProtocolParams:
        return ProtocolParams(target_n=self.target_n, stark_compensation=self.stark_compensation)

    def protocol_run(self) -> ProtocolRun:
        return ProtocolRun(
            kind=self.kind,
            params=self.model_params(),
            proto=self.protocol_params(),
            thermal=self.thermal_spec(),
            tau=self.tau_s,
            steps=self.steps,
            engine=self.engine,
            n_max=self.n_max,
            eps_trunc=self.eps_trunc,
            t_max=self.t_max_s,
            grid=self.grid,
        )

    def reservoir(self) -> ReservoirSpec:
        return ReservoirSpec.from_temperature(
            TWO_PI * self.gamma0_hz, self.thermal_spec(), self.model_params()
        )


_AXIS_FIELDS = {
    "xi": ("xi", "omega_eg_hz"),
    "tbar": ("temperature", "temperature_mode"),
    "gamma0": ("gamma0_hz",),
    "tau": ("tau_s",),
}


class SweepConfig(BaseModel):
    """One-axis parameter sweep around a base run configuration."""

    model_config = ConfigDict(extra="forbid")

    axis: Literal["xi", "tbar", "gamma0", "tau"]
    values: list[float] | None = None
    start: float | None = None
    stop: float | None = None
    count: int | None = Field(None, ge=2)
    spacing: Literal["linear", "geometric"] = "linear"
    base: RunConfig = Field(default_factory=RunConfig)

    @model_validator(mode="after")
    def _cross_checks(self):
        explicit = self.values is not None
        ranged = self.start is not None or self.stop is not None or self.count is not None
        if explicit == ranged:
            raise ValueError("give either values or (start, stop, count), not both or neither")
        if ranged and (self.start is None or self.stop is None or self.count is None):
            raise ValueError("range sweeps need all of start, stop, count")
        vals = self.axis_values()
        if len(vals) == 0:
            raise ValueError("sweep needs at least one value")
        diffs = np.diff(vals)
        if len(diffs) and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep values must be strictly monotone")
        for field_name in _AXIS_FIELDS[self.axis]:
            if field_name in self.base.model_fields_set:
                raise ValueError(
                    f"axis {self.axis!r} must not also be set in base (field {field_name!r})"
                )
        if self.axis == "gamma0" and any(v > 0 for v in vals) and self.base.kind != "open_system":
            raise ValueError("gamma0 sweeps need base.kind='open_system'")
        if self.spacing == "geometric" and any(v <= 0 for v in vals):
            raise ValueError("geometric spacing needs positive endpoints")
        return self

    def axis_values(self):
        if self.values is not None:
            return [float(v) for v in self.values]
        if self.spacing == "geometric":
            return list(np.geomspace(self.start, self.stop, self.count))
        return list(np.linspace(self.start, self.stop, self.count))

    def point_config(self, value) -> RunConfig:
        patch = {}
        if self.axis == "xi":
            patch = {"xi": value, "omega_eg_hz": None}
        elif self.axis == "tbar":
            patch = {"temperature_mode": "tbar", "temperature": value}
        elif self.axis == "gamma0":
            patch = {"gamma0_hz": value}
        elif self.axis == "tau":
            patch = {"tau_s": value}
        return self.base.model_copy(update=patch)


class Fig2Config(BaseModel):
    """Gain/efficiency vs xi at two temperatures (benchmark parameters baked in)."""

    model_config = ConfigDict(extra="forbid")

    delta_hz: float = Field(1e6, gt=0)
    omega_m_hz: float = Field(1e12, gt=0)
    omega_l_fraction: float = Field(1.0 / 20.0, gt=0, description="Omega_L/Delta")
    g_q_fraction: float = Field(1.0 / 600.0, gt=0, description="g_q/Delta")
    tbars: list[float] = Field(default_factory=lambda: [0.1, 0.4])
    xi_start: float = Field(0.9, gt=0)
    xi_stop: float = Field(200.0, gt=0)
    points: int = Field(120, ge=100)
    grid: int = Field(1200, ge=100)

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.xi_stop <= self.xi_start:
            raise ValueError("xi_stop must exceed xi_start")
        if not self.tbars or any(t <= 0 for t in self.tbars):
            raise ValueError("tbars must be positive")
        return self

    def xi_grid(self):
        return list(np.geomspace(self.xi_start, self.xi_stop, self.points))


class Fig34Config(BaseModel):
    """Open-system gain/efficiency vs temperature at xi = 99.

    The gamma0 ladder is given as fractions of the effective coupling
    g_q Omega_L / Delta; decade steps up to ~1 are the documented default
    ladder (there is no canonical choice, so only orderings are meaningful).
    """

    model_config = ConfigDict(extra="forbid")

    delta_hz: float = Field(1e6, gt=0)
    omega_m_hz: float = Field(1e12, gt=0)
    omega_l_fraction: float = Field(1.0 / 20.0, gt=0)
    g_q_fraction: float = Field(1.0 / 600.0, gt=0)
    xi: float = Field(99.0, gt=0)
    target_n: int = Field(1, ge=1)
    tbars: list[float] = Field(default_factory=lambda: [0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 1.0])
    gamma0_fractions: list[float] = Field(default_factory=lambda: [1e-3, 1e-2, 1e-1, 1.0])
    n_max: int = Field(10, ge=2)
    eps_trunc: float = Field(1e-4, gt=0, lt=1)
    grid_points: int = Field(2048, ge=128, description="shared time grid for tau selection")

    @model_validator(mode="after")
    def _cross_checks(self):
        if not self.tbars or any(t <= 0 for t in self.tbars):
            raise ValueError("tbars must be positive")
        if any(f < 0 for f in self.gamma0_fractions):
            raise ValueError("gamma0_fractions must be >= 0")
        return self

    def model_params(self) -> ModelParams:
        delta = TWO_PI * self.delta_hz
        return ModelParams.from_xi(
            self.xi,
            omega_m=TWO_PI * self.omega_m_hz,
            delta=delta,
            omega_l_rabi=delta * self.omega_l_fraction,
            g_q=delta * self.g_q_fraction,
        )


COMMAND_CONFIGS = {
    "run": RunConfig,
    "sweep": SweepConfig,
    "fig2": Fig2Config,
    "fig3": Fig34Config,
    "fig4": Fig34Config,
}


def default_config_json(command: str) -> dict:
    model = COMMAND_CONFIGS.get(command)
    if model is None:
        raise ValueError(f"unknown command {command!r}; have {sorted(COMMAND_CONFIGS)}")
    if command == "sweep":
        cfg = SweepConfig(axis="xi", start=1.0, stop=200.0, count=50, spacing="geometric")
        return cfg.model_dump()
    return model().model_dump()
