"""Density-matrix propagation: exact unitary and Lindblad master equation.

The master equation is integrated with the factor-2 bracket convention,

    drho/dt = -i [H, rho] + sum_s Gamma_s (2 L_s rho L_s^dag - {L_s^dag L_s, rho}),

note the factor-2 convention inside the bracket (a population decaying under
jump L with rate Gamma relaxes as exp(-2 Gamma t)).

Two integration schemes fill the same energy ledger:

* "rk4": classical 4th-order Runge-Kutta with step halving driven by local
  trace/Hermiticity drift.  Heat and drive-work accumulators are integrated
  inside the same tableau.  Suited to short or slow evolutions.
* "expm": one matrix exponential of the vectorized Liouvillian, augmented
  with the accumulator rows, applied repeatedly over a uniform grid.  Exact
  for time-independent generators at any step size; required for
  millisecond-long evolutions under the MHz-scale rotating-frame Hamiltonian
  where RK4 step counts would be astronomical.

Heat is booked per channel as Q_s = integral Tr{D_s(rho) H0_bare} dt against
the bare (lab-frame) energies, which are diagonal and frame-invariant for
populations.  Drive work is the integrated coherent power
Tr{-i[H, rho] H0_bare}, so the first-law residual
|dU_total - W - sum_s Q_s| is a genuine consistency check of the integrator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import IntegrationError, UsageError
from .model import ModelParams
from .operators import DensityMatrix, HilbertLayout, create_op, destroy_op, herm_eig, kron, sigma

__all__ = [
    "propagate_unitary",
    "LindbladChannel",
    "ReservoirSpec",
    "bose_einstein",
    "build_channels",
    "EnergyLedger",
    "IntegratorOptions",
    "LindbladResult",
    "evolve_lindblad",
]

CHANNEL_LABELS = ("gm", "mg", "em", "me", "minus", "plus")


def propagate_unitary(h, rho0: DensityMatrix, t):
    """rho(t) = exp(-iHt) rho0 exp(+iHt) via spectral decomposition of H."""
    h = np.asarray(h, dtype=complex)
    if h.shape != rho0.data.shape:
        raise UsageError(f"H shape {h.shape} does not match state shape {rho0.data.shape}")
    w, v = herm_eig(h)
    phases = np.exp(-1j * w * t)
    u = (v * phases) @ v.conj().T
    out = u @ rho0.data @ u.conj().T
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(rho0.layout, out, trace_tol=rho0.trace_tol)


# ---------------------------------------------------------------------------
# channels

@dataclass(frozen=True)
class LindbladChannel:
    """Jump operator with its rate, tagged by reservoir identity."""

    label: str
    jump: np.ndarray
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise UsageError(f"channel {self.label!r} has negative rate {self.rate}")


def bose_einstein(omega, kt):
    """Mean thermal occupation 1/(exp(omega/kT) - 1); zero at kT = 0."""
    if kt == 0.0:
        return 0.0
    x = omega / kt
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class ReservoirSpec:
    """Shared spontaneous rate gamma0 and the three mean thermal occupations.

    nbar_g, nbar_e, nbar_q refer to the reservoirs at omega_mg, omega_me and
    omega_q respectively.
    """

    gamma0: float
    nbar_g: float
    nbar_e: float
    nbar_q: float

    def __post_init__(self):
        if self.gamma0 < 0:
            raise UsageError(f"gamma0 must be >= 0, got {self.gamma0}")
        for name in ("nbar_g", "nbar_e", "nbar_q"):
            if getattr(self, name) < 0:
                raise UsageError(f"{name} must be >= 0")

    @classmethod
    def from_temperature(cls, gamma0, thermal, params: ModelParams):
        """Bose-Einstein occupations at the model's transition frequencies."""
        kt = thermal.kt
        return cls(
            gamma0=gamma0,
            nbar_g=bose_einstein(params.omega_m, kt),
            nbar_e=bose_einstein(params.omega_me, kt),
            nbar_q=bose_einstein(params.omega_q, kt),
        )

    def check_consistency(self, thermal, params: ModelParams, rtol=1e-9):
        """Verify the stored occupations against the Bose-Einstein formula."""
        ref = ReservoirSpec.from_temperature(self.gamma0, thermal, params)
        for name in ("nbar_g", "nbar_e", "nbar_q"):
            a, b = getattr(self, name), getattr(ref, name)
            if abs(a - b) > rtol * max(1.0, abs(b)):
                raise UsageError(f"{name}={a} inconsistent with Bose-Einstein value {b}")


def build_channels(params: ModelParams, res: ReservoirSpec, layout: HilbertLayout):
    """The six dissipation channels on the 3-level atom (x) Fock space.

    Jumps: sigma_gm, sigma_mg, sigma_em, sigma_me (lifted with the identity on
    the mode) and b, b^dagger (lifted with the identity on the atom).  Rates
    follow Gamma_jm = gamma0 (nbar_j + 1), Gamma_mj = gamma0 nbar_j,
    Gamma_- = gamma0 (nbar_q + 1), Gamma_+ = gamma0 nbar_q.  Zero-rate
    channels are kept so the heat ledger always carries all six labels.
    """
    if layout.atom_dim != 3:
        raise UsageError(f"channels need atom_dim=3, got {layout.atom_dim}")
    n_max = layout.n_max
    g0 = res.gamma0
    return [
        LindbladChannel("gm", layout.lift_atom(sigma(0, 2, 3)), g0 * (res.nbar_g + 1.0)),
        LindbladChannel("mg", layout.lift_atom(sigma(2, 0, 3)), g0 * res.nbar_g),
        LindbladChannel("em", layout.lift_atom(sigma(1, 2, 3)), g0 * (res.nbar_e + 1.0)),
        LindbladChannel("me", layout.lift_atom(sigma(2, 1, 3)), g0 * res.nbar_e),
        LindbladChannel("minus", layout.lift_fock(destroy_op(n_max)), g0 * (res.nbar_q + 1.0)),
        LindbladChannel("plus", layout.lift_fock(create_op(n_max)), g0 * res.nbar_q),
    ]


# ---------------------------------------------------------------------------
# ledger

@dataclass
class EnergyLedger:
    """First-law bookkeeping of one run, in hbar * rad/s units."""

    heat_by_channel: dict[str, float]
    u_battery_initial: float
    u_battery_final: float
    u_fc_initial: float
    u_fc_final: float
    w_drive: float
    first_law_scale: float = 1.0

    @property
    def delta_u_battery(self):
        return self.u_battery_final - self.u_battery_initial

    @property
    def delta_u_fc(self):
        return self.u_fc_final - self.u_fc_initial

    @property
    def heat_total(self):
        return sum(self.heat_by_channel.values())

    @property
    def first_law_residual(self):
        return self.delta_u_battery + self.delta_u_fc - self.w_drive - self.heat_total

    def check_closure(self, tol=1e-6):
        return abs(self.first_law_residual) <= tol * max(self.first_law_scale, 1e-300)


# ---------------------------------------------------------------------------
# integrator plumbing

@dataclass
class IntegratorOptions:
    method: str = "auto"  # "auto" | "rk4" | "expm"
    trace_tol: float = 1e-8
    initial_step: float | None = None
    min_steps: int = 1000  # rk4 lower bound on step count
    grid_points: int = 2048  # expm grid resolution
    record: bool = False  # keep per-grid-point populations and accumulators
    dump_path: str | None = None
    expm_dim_limit: int = 3600  # largest D^2 the superoperator route accepts
    rk4_radian_limit: float = 500.0  # auto switches to expm beyond this phase budget


@dataclass
class LindbladResult:
    state: DensityMatrix
    ledger: EnergyLedger
    times: np.ndarray | None = None
    diag_populations: np.ndarray | None = None  # (K+1, D) real
    accumulators: np.ndarray | None = None  # (K+1, n_channels + 1), heats then work
    states: np.ndarray | None = None  # (K+1, D, D) complex, expm route only
    trace_drift: float = 0.0
    trace_ok: bool = True
    herm_correction: float = 0.0
    steps_taken: int = 0
    method: str = ""

    def __iter__(self):  # allows `state, ledger = evolve_lindblad(...)`
        return iter((self.state, self.ledger))


def _spectral_scale(h, channels):
    scale = float(np.linalg.norm(h, 2)) if h.size else 0.0
    for ch in channels:
        if ch.rate > 0:
            scale = max(scale, 2.0 * ch.rate * float(np.linalg.norm(ch.jump, 2)) ** 2)
    return scale


def _measurement_ops(h, channels, h0_bare):
    """Hermitian operators whose expectations are the accumulator rates.

    Per channel: M_s = Gamma_s (2 L^dag H0 L - {L^dag L, H0}) so that
    q_s' = Tr(M_s rho); for the drive: M_P = i [H, H0] so that
    w' = Tr(-i[H, rho] H0) = Tr(M_P rho).
    """
    ops = []
    for ch in channels:
        ld = ch.jump.conj().T
        ldl = ld @ ch.jump
        ops.append(ch.rate * (2.0 * ld @ h0_bare @ ch.jump - ldl @ h0_bare - h0_bare @ ldl))
    ops.append(1j * (h @ h0_bare - h0_bare @ h))
    return ops


def _liouvillian(h, channels):
    """Row-major vectorized generator: vec(A rho B) = (A kron B^T) vec(rho)."""
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for ch in channels:
        if ch.rate == 0.0:
            continue
        l = ch.jump
        ldl = l.conj().T @ l
        lv += ch.rate * (
            2.0 * np.kron(l, l.conj()) - np.kron(ldl, eye) - np.kron(eye, ldl.T)
        )
    return lv


def _evolve_expm(h, channels, rho0, t_final, opts, meas_ops):
    d = h.shape[0]
    if d * d > opts.expm_dim_limit:
        raise IntegrationError(
            f"superoperator dimension {d * d} exceeds limit {opts.expm_dim_limit}; "
            "reduce the Fock cutoff or use method='rk4'"
        )
    n_acc = len(meas_ops)
    k = max(2, int(opts.grid_points))
    dt = t_final / k
    lv = _liouvillian(h, channels)
    aug = np.zeros((d * d + n_acc, d * d + n_acc), dtype=complex)
    aug[: d * d, : d * d] = lv
    for i, m in enumerate(meas_ops):
        aug[d * d + i, : d * d] = m.T.reshape(-1)  # Tr(M rho) = vec(M^T) . vec(rho)
    step = scipy.linalg.expm(aug * dt)

    y = np.zeros(d * d + n_acc, dtype=complex)
    y[: d * d] = rho0.data.reshape(-1)
    times = np.linspace(0.0, t_final, k + 1)
    diag_idx = np.arange(d) * d + np.arange(d)
    diags = np.empty((k + 1, d))
    accs = np.empty((k + 1, n_acc))
    states = np.empty((k + 1, d, d), dtype=complex) if opts.record else None
    diags[0] = np.real(y[diag_idx])
    accs[0] = 0.0
    if states is not None:
        states[0] = rho0.data
    for i in range(1, k + 1):
        y = step @ y
        diags[i] = np.real(y[diag_idx])
        accs[i] = np.real(y[d * d :])
        if states is not None:
            states[i] = y[: d * d].reshape(d, d)
    rho_f = y[: d * d].reshape(d, d)
    if not np.all(np.isfinite(rho_f)):
        raise IntegrationError("expm propagation produced non-finite state")
    herm = float(np.max(np.abs(rho_f - rho_f.conj().T)))
    rho_f = 0.5 * (rho_f + rho_f.conj().T)
    drift = abs(float(np.real(np.trace(rho_f))) - 1.0)
    return rho_f, np.real(y[d * d :]), times, diags, accs, states, drift, herm, k


def _evolve_rk4(h, channels, rho0, t_final, opts, meas_ops):
    active = [ch for ch in channels if ch.rate > 0]
    d = h.shape[0]
    nc = len(active)
    if active:
        # sum_c Gamma_c L_c rho L_c^dag as two plain GEMMs over concatenated
        # jumps; the anticommutator folds into an effective non-Hermitian
        # Hamiltonian H - i sum Gamma L^dag L
        lcat = np.concatenate([ch.rate * ch.jump for ch in active], axis=0)
        ldcat = np.concatenate([ch.jump.conj().T for ch in active], axis=0)
        k_anti = sum(ch.rate * (ch.jump.conj().T @ ch.jump) for ch in active)
        h_nh = h - 1j * k_anti
    else:
        lcat = ldcat = None
        h_nh = h
    h_nh_dag = h_nh.conj().T
    # Tr(M rho) = vec(M^T) . vec(rho), stacked into one matvec
    wrows = np.stack([m.T.reshape(-1) for m in meas_ops])

    def rhs(rho):
        drho = -1j * (h_nh @ rho - rho @ h_nh_dag)
        if lcat is not None:
            s = (lcat @ rho).reshape(nc, d, d).transpose(1, 0, 2).reshape(d, nc * d)
            drho += 2.0 * (s @ ldcat)
        return drho, np.real(wrows @ rho.reshape(-1))

    # Stability/accuracy heuristic: Hamiltonian phase resolved at 1/50 of a
    # radian per step, dissipator eigenvalues (scale 2 Gamma ||L||^2, the
    # ||L||^2 matters for bosonic jumps) at 0.1 per step, and never fewer
    # than min_steps steps.
    norm_h = float(np.linalg.norm(h, 2)) if h.size else 0.0
    diss = max((2.0 * ch.rate * float(np.linalg.norm(ch.jump, 2)) ** 2 for ch in active), default=0.0)
    h_step = opts.initial_step
    if h_step is None:
        h_step = t_final / opts.min_steps
        if norm_h > 0:
            h_step = min(h_step, 1.0 / (50.0 * norm_h))
        if diss > 0:
            h_step = min(h_step, 0.1 / diss)
    h_step = min(h_step, t_final)

    rho = rho0.data.copy()
    acc = np.zeros(len(meas_ops))
    t = 0.0
    herm_corr = 0.0
    steps = 0
    trajectory = [] if opts.dump_path else None
    while t < t_final * (1.0 - 1e-15):
        dt = min(h_step, t_final - t)
        for attempt in range(60):
            k1r, k1a = rhs(rho)
            k2r, k2a = rhs(rho + 0.5 * dt * k1r)
            k3r, k3a = rhs(rho + 0.5 * dt * k2r)
            k4r, k4a = rhs(rho + dt * k3r)
            rho1 = rho + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
            tr_dev = abs(float(np.real(np.trace(rho1))) - float(np.real(np.trace(rho))))
            herm_dev = float(np.max(np.abs(rho1 - rho1.conj().T)))
            if np.all(np.isfinite(rho1)) and tr_dev <= 1e-10 and herm_dev <= 1e-9:
                break
            dt *= 0.5
            if dt < t_final * 1e-14:
                raise IntegrationError(
                    "rk4 step size underflow",
                    diagnostics={"t": t, "dt": dt, "trace_dev": tr_dev, "herm_dev": herm_dev},
                )
        else:
            raise IntegrationError("rk4 could not find an acceptable step", {"t": t})
        acc = acc + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        rho = 0.5 * (rho1 + rho1.conj().T)
        herm_corr = max(herm_corr, 0.5 * herm_dev)
        t += dt
        steps += 1
        if trajectory is not None:
            trajectory.append((t, np.real(np.diag(rho)).copy(), acc.copy()))
    drift = abs(float(np.real(np.trace(rho))) - 1.0)
    return rho, acc, drift, herm_corr, steps, trajectory


def _dump_trajectory(path, d_atom, d_fock, rows, labels):
    n_occ = np.arange(d_fock, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        atom_names = ["p_g", "p_e", "p_m"][:d_atom]
        writer.writerow(["t"] + atom_names + ["mean_n"] + [f"q_{lab}" for lab in labels])
        for t, diag, acc in rows:
            pops = diag.reshape(d_atom, d_fock)
            atom_p = pops.sum(axis=1)
            mean_n = float(pops.sum(axis=0) @ n_occ)
            writer.writerow(
                [f"{t:.12e}"]
                + [f"{x:.12e}" for x in atom_p]
                + [f"{mean_n:.12e}"]
                + [f"{q:.12e}" for q in acc[: len(labels)]]
            )


def evolve_lindblad(
    h,
    channels,
    rho0: DensityMatrix,
    t_final,
    opts: IntegratorOptions | None = None,
    h0_atom=None,
    h0_fock=None,
):
    """Integrate the master equation and return a LindbladResult.

    `h0_atom` / `h0_fock` are the bare (diagonal, lab-frame) energies lifted
    to the joint space; heat and drive work are booked against their sum.
    When omitted, the ledger reports zero energy flows but propagation is
    unaffected.  Unpacking as `state, ledger = ...` is supported.
    """
    opts = opts or IntegratorOptions()
    h = np.asarray(h, dtype=complex)
    if h.shape != rho0.data.shape:
        raise UsageError(f"H shape {h.shape} does not match state shape {rho0.data.shape}")
    if t_final < 0:
        raise UsageError(f"t_final must be >= 0, got {t_final}")
    herm_dev = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if herm_dev > 1e-10 * max(1.0, float(np.max(np.abs(h)))):
        raise UsageError(f"Hamiltonian is not Hermitian: deviation {herm_dev:.3e}")
    for ch in channels:
        if ch.jump.shape != h.shape:
            raise UsageError(f"channel {ch.label!r} dimension mismatch")

    d = h.shape[0]
    labels = [ch.label for ch in channels]
    zero = np.zeros_like(h)
    h0a = np.asarray(h0_atom, dtype=complex) if h0_atom is not None else zero
    h0f = np.asarray(h0_fock, dtype=complex) if h0_fock is not None else zero
    h0_bare = h0a + h0f
    meas_ops = _measurement_ops(h, channels, h0_bare)

    if t_final == 0.0:
        method = "none"
    elif opts.method == "auto":
        phase = _spectral_scale(h, channels) * t_final
        method = "expm" if (phase > opts.rk4_radian_limit and d * d <= opts.expm_dim_limit) else "rk4"
    else:
        method = opts.method

    times = diags = accs = states = None
    if method == "none":
        rho_f, acc = rho0.data.copy(), np.zeros(len(meas_ops))
        drift, herm_corr, steps = 0.0, 0.0, 0
        trajectory = None
    elif method == "expm":
        rho_f, acc, times, diags, accs, states, drift, herm_corr, steps = _evolve_expm(
            h, channels, rho0, t_final, opts, meas_ops
        )
        trajectory = list(zip(times, diags, accs)) if opts.dump_path else None
    elif method == "rk4":
        rho_f, acc, drift, herm_corr, steps, trajectory = _evolve_rk4(
            h, channels, rho0, t_final, opts, meas_ops
        )
    else:
        raise UsageError(f"unknown integrator method {opts.method!r}")

    if opts.dump_path and trajectory:
        if len(rho0.layout.factors) == 2:
            da, df = rho0.layout.atom_dim, rho0.layout.fock_dim
        else:
            da, df = 1, d
        _dump_trajectory(opts.dump_path, da, df, trajectory, labels)

    heats = dict(zip(labels, acc[: len(labels)]))
    w_drive = float(acc[-1])
    u_b0 = float(np.real(np.trace(rho0.data @ h0a)))
    u_f0 = float(np.real(np.trace(rho0.data @ h0f)))
    u_b1 = float(np.real(np.trace(rho_f @ h0a)))
    u_f1 = float(np.real(np.trace(rho_f @ h0f)))
    scale = max(float(np.max(np.abs(np.diag(h0_bare)))) if h0_bare.size else 0.0, 1e-300)
    ledger = EnergyLedger(heats, u_b0, u_b1, u_f0, u_f1, w_drive, first_law_scale=scale)

    state = DensityMatrix(rho0.layout, rho_f, trace_tol=max(drift * 2, opts.trace_tol, 1e-9))
    return LindbladResult(
        state=state,
        ledger=ledger,
        times=times,
        diag_populations=diags,
        accumulators=accs,
        states=states,
        trace_drift=drift,
        trace_ok=drift <= opts.trace_tol,
        herm_correction=herm_corr,
        steps_taken=steps,
        method=method,
    )
