"""Thermodynamic observables: internal energy, ergotropy, gain, efficiency."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedEfficiencyError, UndefinedGainError, UsageError
from .model import atom_h0, battery_h0
from .operators import DensityMatrix, herm_eig

__all__ = [
    "internal_energy",
    "ergotropy",
    "gain",
    "efficiency",
    "eta_closed_form",
    "ChargingReport",
]


def internal_energy(rho_b, omega_eg, omega_m=None):
    """Tr(rho H_B0) against the bare battery Hamiltonian, omega_g = 0 reference.

    2-dim states use diag(0, omega_eg); 3-dim states need omega_m as well.
    """
    data = rho_b.data if isinstance(rho_b, DensityMatrix) else np.asarray(rho_b)
    dim = data.shape[0]
    if dim == 2:
        h0 = battery_h0(omega_eg)
    elif dim == 3:
        if omega_m is None:
            raise UsageError("3-level internal energy needs omega_m")
        h0 = atom_h0(omega_eg, omega_m)
    else:
        raise UsageError(f"battery state must be 2- or 3-dimensional, got {dim}")
    return float(np.real(np.trace(data @ h0)))


def ergotropy(rho, h):
    """Maximum unitarily extractable work from rho with respect to h.

    Sorts the state eigenvalues in decreasing order against the ascending
    Hamiltonian spectrum (the optimal permutation builds the passive state)
    and returns Tr(rho h) - sum_k r_k^down E_k^up, clamped at tiny negative
    round-off.  Homogeneous of degree one in rho, so sub-normalized blocks
    (battery sector of a 3-level atom) can be fed directly.
    """
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if data.shape != h.shape:
        raise UsageError(f"state shape {data.shape} does not match H shape {h.shape}")
    energies, _ = herm_eig(h)
    r = np.linalg.eigvalsh(0.5 * (data + data.conj().T))[::-1]  # descending
    passive = float(np.dot(r, energies))
    work = float(np.real(np.trace(data @ h))) - passive
    scale = max(1.0, float(np.max(np.abs(energies))))
    if work < -1e-12 * scale:
        raise UsageError(f"ergotropy came out negative beyond round-off: {work:.3e}")
    return max(work, 0.0)


def gain(delta_u_q, delta_u_c):
    """Relative gain K_q = delta_u_q / delta_u_c - 1."""
    if delta_u_c <= 0:
        raise UndefinedGainError(
            f"classical reference charge must be positive, got {delta_u_c:.3e}"
        )
    return delta_u_q / delta_u_c - 1.0


def eta_closed_form(xi, k_q):
    """Closed-form efficiency (1/(1+xi)) (1+2K_q)/(1+K_q) of the unitary protocol."""
    return (1.0 + 2.0 * k_q) / ((1.0 + k_q) * (1.0 + xi))


def efficiency(ergotropy_q, work_in, q_em=0.0):
    """(eta, eta_corrected): eta = E^q/W_L, corrected by Q_em when the e-m
    reservoir injected net heat (Q_em > 0); eta_corrected is None otherwise."""
    if work_in <= 0:
        raise UndefinedEfficiencyError(f"work_in must be positive, got {work_in:.3e}")
    eta = ergotropy_q / work_in
    eta_corr = ergotropy_q / (work_in + q_em) if q_em > 0 else None
    return eta, eta_corr


@dataclass
class ChargingReport:
    """Energetics of one protocol run.  All energies in hbar * rad/s."""

    kind: str
    engine: str
    delta_u_battery: float
    delta_u_fc: float
    ergotropy: float
    work_in: float
    delta_u_c_reference: float
    k_q: float | None
    eta: float | None
    eta_corrected: float | None
    tau_used: float
    heat: dict[str, float] = field(default_factory=dict)
    s_value: float | None = None
    diagnostics: dict[str, float] = field(default_factory=dict)

    @property
    def q_em_total(self):
        """Net heat from the e-m reservoir (both jump directions)."""
        return self.heat.get("em", 0.0) + self.heat.get("me", 0.0)

    def validate(self, tol=1e-9):
        """Return a list of invariant violations (empty means clean)."""
        problems = []
        if self.k_q is not None and self.delta_u_c_reference > 0:
            resid = abs(self.k_q - (self.delta_u_battery / self.delta_u_c_reference - 1.0))
            if resid > 1e-12 * max(1.0, abs(self.k_q)):
                problems.append(f"k_q identity violated by {resid:.3e}")
        if self.eta is not None and self.work_in > 0:
            q_in = sum(q for q in self.heat.values() if q > 0)
            eta_ref = self.ergotropy / (self.work_in + q_in)
            if not (-tol <= eta_ref <= 1.0 + tol):
                problems.append(f"eta out of [0, 1]: {eta_ref:.6f}")
        drift = self.diagnostics.get("trace_drift", 0.0)
        drift_tol = self.diagnostics.get("trace_tol", 1e-8)
        if drift > drift_tol:
            problems.append(f"trace drift {drift:.3e} beyond tolerance {drift_tol:.1e}")
        closure = self.diagnostics.get("first_law_residual")
        if closure is not None:
            scale = self.diagnostics.get("first_law_scale", 1.0)
            if abs(closure) > 1e-6 * scale:
                problems.append(f"first-law residual {closure:.3e} beyond 1e-6 of scale")
        return problems

    def pretty(self):
        lines = [
            f"protocol: {self.kind} ({self.engine})",
            f"  tau_used            : {self.tau_used:.6e} s",
            f"  delta_U_battery     : {self.delta_u_battery:.9e}",
            f"  delta_U_fc          : {self.delta_u_fc:.9e}",
            f"  ergotropy           : {self.ergotropy:.9e}",
            f"  work_in (W_L)       : {self.work_in:.9e}",
            f"  delta_U_c reference : {self.delta_u_c_reference:.9e}",
        ]
        if self.s_value is not None:
            lines.append(f"  S(tau)              : {self.s_value:.9e}")
        lines.append(f"  K_q                 : {self.k_q if self.k_q is not None else 'n/a'}")
        lines.append(f"  eta                 : {self.eta if self.eta is not None else 'n/a'}")
        if self.eta_corrected is not None:
            lines.append(f"  eta_corrected       : {self.eta_corrected}")
        if self.heat:
            total = sum(self.heat.values())
            lines.append(f"  heat per channel    : {self.heat}")
            lines.append(f"  heat total          : {total:.6e}")
        for k, v in sorted(self.diagnostics.items()):
            lines.append(f"  [{k}]: {v:.6e}" if isinstance(v, float) else f"  [{k}]: {v}")
        problems = self.validate()
        lines.append("  invariants          : " + ("ok" if not problems else "; ".join(problems)))
        return "\n".join(lines)
