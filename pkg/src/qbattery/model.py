"""Model parameters and Hamiltonian builders.

Level scheme: battery {|g>, |e>} with gap omega_eg, ancilla |m> at omega_m,
omega_g = 0 as energy reference.  The power supply drives g<->m at omega_L
with Rabi coupling Omega_L; the frequency changer couples e<->m at
omega_q = omega_L - omega_eg, classically with Omega_q or quantized with g_q.
Two-photon resonance fixes Delta = omega_mg - omega_L = omega_me - omega_q.

All builders return time-independent matrices in the frame co-rotating with
both drives (interaction picture with respect to
K = omega_L |m><m| + omega_eg |e><e| + omega_q b^dag b), which puts the g and
e sectors at zero energy and leaves

    H~ = Delta sigma_mm + Omega_L (sigma_gm + sigma_mg)
         + g_q (sigma_me b + sigma_em b^dag) + delta_c sigma_ee.

delta_c is the d.c. Stark compensation; its correctness is enforced by the
numerical agreement with the effective anti-Jaynes-Cummings Hamiltonian
rather than by the frame derivation alone.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .operators import HilbertLayout, create_op, destroy_op, kron, number_op, sigma

__all__ = [
    "ModelParams",
    "ProtocolParams",
    "DoubletSpectrum",
    "build_H_classical_effective",
    "build_H_classical_full",
    "build_H_full_rotating",
    "build_H_eff",
    "doublet_spectrum",
    "battery_h0",
    "atom_h0",
]

G_IDX, E_IDX, M_IDX = 0, 1, 2


@dataclass(frozen=True)
class ModelParams:
    """Physical frequencies and couplings, all in rad/s.

    omega_q is fixed by two-photon resonance (omega_L = omega_m - Delta,
    omega_q = omega_L - omega_eg), so xi and r are derived quantities.
    """

    omega_eg: float
    omega_m: float
    delta: float
    omega_l_rabi: float  # Omega_L
    g_q: float
    omega_q_rabi: float | None = None  # classical Omega_q; defaults to g_q
    dispersive_factor: float = 10.0

    def __post_init__(self):
        for name in ("omega_eg", "omega_m", "delta", "omega_l_rabi", "g_q"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise UsageError(f"{name} must be positive and finite, got {v}")
        if self.omega_q_rabi is not None and self.omega_q_rabi <= 0:
            raise UsageError(f"omega_q_rabi must be positive, got {self.omega_q_rabi}")
        if self.omega_q <= 0:
            raise UsageError(
                "two-photon resonance gives omega_q <= 0; need omega_m - delta > omega_eg"
            )

    @classmethod
    def from_xi(cls, xi, omega_m, delta, omega_l_rabi, g_q, **kw):
        """Fix omega_eg from the target frequency ratio xi = omega_q / omega_eg."""
        if xi <= 0:
            raise UsageError(f"xi must be positive, got {xi}")
        omega_eg = (omega_m - delta) / (1.0 + xi)
        return cls(omega_eg, omega_m, delta, omega_l_rabi, g_q, **kw)

    @property
    def omega_laser(self):
        return self.omega_m - self.delta

    @property
    def omega_q(self):
        return self.omega_laser - self.omega_eg

    @property
    def omega_me(self):
        return self.omega_m - self.omega_eg

    @property
    def xi(self):
        return self.omega_q / self.omega_eg

    @property
    def r(self):
        return self.g_q / self.omega_l_rabi

    @property
    def g_eff(self):
        """Effective battery-f.c. coupling Omega_L g_q / Delta."""
        return self.omega_l_rabi * self.g_q / self.delta

    @property
    def omega_bar_classical(self):
        """Effective classical two-photon coupling Omega_L Omega_q / Delta."""
        return self.omega_l_rabi * self.classical_rabi / self.delta

    @property
    def classical_rabi(self):
        return self.g_q if self.omega_q_rabi is None else self.omega_q_rabi

    def is_dispersive(self):
        return self.delta >= self.dispersive_factor * max(self.omega_l_rabi, self.g_q)

    def warn_if_not_dispersive(self):
        if not self.is_dispersive():
            warnings.warn(
                f"dispersive regime violated: Delta={self.delta:.3e} < "
                f"{self.dispersive_factor:.1f} * max(Omega_L, g_q)="
                f"{self.dispersive_factor * max(self.omega_l_rabi, self.g_q):.3e}",
                stacklevel=3,
            )


@dataclass(frozen=True)
class ProtocolParams:
    """Selective-subspace target N and whether the d.c. Stark term is applied."""

    target_n: int = 1
    stark_compensation: bool = True

    def __post_init__(self):
        if self.target_n < 1:
            raise UsageError(f"target_n must be >= 1, got {self.target_n}")


def battery_h0(omega_eg):
    """Bare battery Hamiltonian diag(0, omega_eg) on {g, e}."""
    return np.diag([0.0, omega_eg]).astype(complex)


def atom_h0(omega_eg, omega_m):
    """Bare 3-level atom Hamiltonian diag(0, omega_eg, omega_m)."""
    return np.diag([0.0, omega_eg, omega_m]).astype(complex)


def build_H_classical_effective(p: ModelParams):
    """Effective two-level drive Omega_bar (sigma_ge + sigma_eg) on {g, e}."""
    p.warn_if_not_dispersive()
    ob = p.omega_bar_classical
    return ob * (sigma(G_IDX, E_IDX, 2) + sigma(E_IDX, G_IDX, 2))


def build_H_classical_full(p: ModelParams, stark_compensation=True):
    """Rotating-frame 3-level Hamiltonian with both classical drives.

    The compensation delta_c = (Omega_q^2 - Omega_L^2)/Delta on sigma_ee
    equalizes the two a.c. Stark shifts so the two-photon transition is
    resonant; without it the flip is detuned by ~(Omega_L/Omega_q) Omega_bar.
    """
    p.warn_if_not_dispersive()
    oq = p.classical_rabi
    h = p.delta * sigma(M_IDX, M_IDX, 3)
    h += p.omega_l_rabi * (sigma(G_IDX, M_IDX, 3) + sigma(M_IDX, G_IDX, 3))
    h += oq * (sigma(E_IDX, M_IDX, 3) + sigma(M_IDX, E_IDX, 3))
    if stark_compensation:
        h += ((oq**2 - p.omega_l_rabi**2) / p.delta) * sigma(E_IDX, E_IDX, 3)
    return h


def stark_shift_quantum(p: ModelParams, proto: ProtocolParams):
    """d.c. Stark term on sigma_ee that brings the target doublet to resonance."""
    return (p.g_q**2 * proto.target_n - p.omega_l_rabi**2) / p.delta


def build_H_full_rotating(p: ModelParams, proto: ProtocolParams, layout: HilbertLayout):
    """Full rotating-frame Hamiltonian on the 3-level atom (x) Fock space."""
    if layout.atom_dim != 3:
        raise UsageError(f"full Hamiltonian needs atom_dim=3, got {layout.atom_dim}")
    p.warn_if_not_dispersive()
    n_max = layout.n_max
    b, bdag = destroy_op(n_max), create_op(n_max)
    h = p.delta * layout.lift_atom(sigma(M_IDX, M_IDX, 3))
    h += p.omega_l_rabi * layout.lift_atom(sigma(G_IDX, M_IDX, 3) + sigma(M_IDX, G_IDX, 3))
    h += p.g_q * (kron(sigma(M_IDX, E_IDX, 3), b) + kron(sigma(E_IDX, M_IDX, 3), bdag))
    if proto.stark_compensation:
        h += stark_shift_quantum(p, proto) * layout.lift_atom(sigma(E_IDX, E_IDX, 3))
    return h


def build_H_eff(p: ModelParams, proto: ProtocolParams, layout: HilbertLayout):
    """Effective anti-Jaynes-Cummings Hamiltonian on the 2-level battery (x) Fock space.

    With compensation (default) this is
        -(g_q^2 N / Delta) sigma_gg - (g_q^2 b^dag b / Delta) sigma_ee
        + (Omega_L g_q / Delta)(sigma_ge b + sigma_eg b^dag),
    block-diagonal over the doublets {|g,n>, |e,n+1>} with |e,0> an isolated
    zero-energy eigenstate.  Without compensation the g-level carries the raw
    a.c. shift -Omega_L^2/Delta instead of -g_q^2 N / Delta.
    """
    if layout.atom_dim != 2:
        raise UsageError(f"effective Hamiltonian needs atom_dim=2, got {layout.atom_dim}")
    n_max = layout.n_max
    b, bdag = destroy_op(n_max), create_op(n_max)
    if proto.stark_compensation:
        g_shift = -(p.g_q**2) * proto.target_n / p.delta
    else:
        g_shift = -(p.omega_l_rabi**2) / p.delta
    h = g_shift * layout.lift_atom(sigma(G_IDX, G_IDX, 2))
    h += -(p.g_q**2 / p.delta) * kron(sigma(E_IDX, E_IDX, 2), number_op(n_max))
    h += p.g_eff * (kron(sigma(G_IDX, E_IDX, 2), b) + kron(sigma(E_IDX, G_IDX, 2), bdag))
    return h


@dataclass(frozen=True)
class DoubletSpectrum:
    """Spectral data of the doublet {|g,n>, |e,n+1>}."""

    delta_n: float  # detuning
    g_n: float  # coupling
    omega_n: float  # Rabi frequency sqrt(delta_n^2/4 + g_n^2)
    a_n: float  # transfer amplitude g_n^2 / omega_n^2


def doublet_spectrum(p: ModelParams, proto: ProtocolParams, n):
    """(Delta_n, G_n, Omega_n, A_n) of doublet n for target subspace N."""
    if n < 0:
        raise UsageError(f"doublet index must be >= 0, got {n}")
    nn = float(n)
    big_n = float(proto.target_n)
    delta_n = p.r**2 * p.omega_l_rabi**2 * (nn + 1.0 - big_n) / p.delta
    g_n = p.r * p.omega_l_rabi**2 * math.sqrt(nn + 1.0) / p.delta
    omega_n = math.sqrt(0.25 * delta_n**2 + g_n**2)
    a_n = 1.0 / (1.0 + p.r**2 * (nn + 1.0 - big_n) ** 2 / (4.0 * (nn + 1.0)))
    return DoubletSpectrum(delta_n, g_n, omega_n, a_n)


def tau_selective(p: ModelParams, big_n=1):
    """Duration of the resonant pi flip in the {|g,N-1>, |e,N>} doublet."""
    return math.pi * p.delta / (2.0 * p.r * p.omega_l_rabi**2 * math.sqrt(big_n))
