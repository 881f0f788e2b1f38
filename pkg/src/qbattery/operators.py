"""Dense complex operator algebra for the atom (x) Fock joint space.

Operators and states are plain complex128 numpy arrays in row-major layout.
The joint index convention is fixed: atom factor first, Fock factor second,
so basis state (a, n) sits at index a * (n_max + 1) + n.  All functions here
are pure; values can be shared freely between sweep workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CutoffTooSmallError, UsageError

__all__ = [
    "HilbertLayout",
    "ThermalSpec",
    "DensityMatrix",
    "kron",
    "herm_eig",
    "partial_trace",
    "thermal_state_atom",
    "thermal_state_fock",
    "sigma",
    "destroy_op",
    "create_op",
    "number_op",
    "auto_fock_cutoff",
]

TRACE_TOL = 1e-9
HERM_TOL = 1e-12
PSD_FLOOR = -1e-9  # integrator round-off produces harmless tiny negative eigenvalues


# ---------------------------------------------------------------------------
# elementary operators

def sigma(j, k, dim):
    """|j><k| on a `dim`-level system."""
    m = np.zeros((dim, dim), dtype=complex)
    m[j, k] = 1.0
    return m


def destroy_op(n_max):
    """Bosonic annihilation operator b truncated at Fock level n_max."""
    d = n_max + 1
    m = np.zeros((d, d), dtype=complex)
    for n in range(1, d):
        m[n - 1, n] = math.sqrt(n)
    return m


def create_op(n_max):
    """Bosonic creation operator b^dagger truncated at Fock level n_max."""
    return destroy_op(n_max).conj().T


def number_op(n_max):
    """Number operator b^dagger b truncated at Fock level n_max."""
    return np.diag(np.arange(n_max + 1, dtype=float)).astype(complex)


def kron(a, b):
    """Kronecker product, first factor on the slow (outer) index."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def herm_eig(h, tol=1e-10):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector columns) with
    h = V diag(w) V^dagger.  Raises UsageError if h deviates from
    Hermiticity by more than `tol` relative to its largest entry.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise UsageError(f"herm_eig expects a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    dev = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if dev > tol * scale:
        raise UsageError(f"matrix is not Hermitian: max deviation {dev:.3e} (scale {scale:.3e})")
    w, v = np.linalg.eigh(h)
    return w, v


# ---------------------------------------------------------------------------
# layout and states

@dataclass(frozen=True)
class HilbertLayout:
    """Ordered tensor factors (label, dimension); atom first, Fock second."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.factors:
            raise UsageError("layout needs at least one factor")
        labels = [lab for lab, _ in self.factors]
        if len(set(labels)) != len(labels):
            raise UsageError(f"duplicate factor labels in {labels}")
        for lab, d in self.factors:
            if d < 1:
                raise UsageError(f"factor {lab!r} has non-positive dimension {d}")

    @classmethod
    def atom_fock(cls, atom_dim, n_max):
        if atom_dim not in (2, 3):
            raise UsageError(f"atom_dim must be 2 or 3, got {atom_dim}")
        if n_max < 1:
            raise UsageError(f"fock cutoff n_max must be >= 1, got {n_max}")
        return cls((("atom", atom_dim), ("fock", n_max + 1)))

    @classmethod
    def single(cls, label, dim):
        return cls(((label, dim),))

    @property
    def dim(self):
        out = 1
        for _, d in self.factors:
            out *= d
        return out

    @property
    def labels(self):
        return tuple(lab for lab, _ in self.factors)

    def dim_of(self, label):
        for lab, d in self.factors:
            if lab == label:
                return d
        raise UsageError(f"unknown factor label {label!r}; have {self.labels}")

    @property
    def atom_dim(self):
        return self.dim_of("atom")

    @property
    def fock_dim(self):
        return self.dim_of("fock")

    @property
    def n_max(self):
        return self.fock_dim - 1

    def index(self, atom_idx, fock_idx):
        """Joint index of basis state |atom_idx, fock_idx>."""
        return atom_idx * self.fock_dim + fock_idx

    def lift_atom(self, op):
        """Embed an atom operator as op (x) I_fock."""
        return kron(op, np.eye(self.fock_dim))

    def lift_fock(self, op):
        """Embed a Fock operator as I_atom (x) op."""
        return kron(np.eye(self.atom_dim), op)


@dataclass(frozen=True)
class ThermalSpec:
    """Temperature, either absolute (k_B T / hbar in rad/s) or T-bar = k_B T / (hbar omega_m).

    `omega_m_ref` is the ancilla frequency that anchors the T-bar convention;
    it is required for mode="tbar" and ignored otherwise.
    """

    mode: str  # "absolute" or "tbar"
    value: float
    omega_m_ref: float | None = None

    def __post_init__(self):
        if self.mode not in ("absolute", "tbar"):
            raise UsageError(f"temperature mode must be 'absolute' or 'tbar', got {self.mode!r}")
        if self.value < 0:
            raise UsageError(f"temperature must be >= 0, got {self.value}")
        if self.mode == "tbar" and self.value > 0 and not self.omega_m_ref:
            raise UsageError("tbar mode needs omega_m_ref to fix the energy scale")

    @property
    def kt(self):
        """k_B T in rad/s units (hbar = 1); 0 selects the exact ground state."""
        if self.value == 0:
            return 0.0
        if self.mode == "absolute":
            return float(self.value)
        return float(self.value) * float(self.omega_m_ref)


def _check_density(data, trace_tol, herm_tol, psd_floor):
    tr = complex(np.trace(data))
    if abs(tr - 1.0) > trace_tol:
        raise UsageError(f"density matrix trace {tr} deviates from 1 beyond {trace_tol}")
    herm = float(np.max(np.abs(data - data.conj().T)))
    if herm > herm_tol:
        raise UsageError(f"density matrix non-Hermitian: max |rho - rho^dag| = {herm:.3e}")
    if not np.all(np.isfinite(data)):
        raise UsageError("density matrix has non-finite entries")
    evals = np.linalg.eigvalsh(0.5 * (data + data.conj().T))
    if evals.min() < psd_floor:
        raise UsageError(f"density matrix not PSD: min eigenvalue {evals.min():.3e}")


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace, PSD operator over an explicit tensor layout."""

    layout: HilbertLayout
    data: np.ndarray
    trace_tol: float = field(default=TRACE_TOL, repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (self.layout.dim, self.layout.dim):
            raise UsageError(
                f"data shape {self.data.shape} does not match layout dim {self.layout.dim}"
            )
        _check_density(self.data, self.trace_tol, HERM_TOL, PSD_FLOOR)

    @classmethod
    def from_diag(cls, layout, populations, **kw):
        p = np.asarray(populations, dtype=float)
        return cls(layout, np.diag(p).astype(complex), **kw)

    @classmethod
    def pure(cls, layout, ket, **kw):
        v = np.asarray(ket, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(layout, np.outer(v, v.conj()), **kw)

    @classmethod
    def product(cls, a, b, **kw):
        """Tensor product state over the concatenated layouts."""
        layout = HilbertLayout(a.layout.factors + b.layout.factors)
        return cls(layout, kron(a.data, b.data), **kw)

    def populations(self):
        return np.real(np.diag(self.data)).copy()

    def purity(self):
        return float(np.real(np.trace(self.data @ self.data)))


def partial_trace(rho, keep):
    """Reduce `rho` to the factor named `keep`, tracing out the rest.

    Only two-factor layouts occur in this package; single-factor input is
    returned unchanged when `keep` names its sole factor.
    """
    layout = rho.layout
    if keep not in layout.labels:
        raise UsageError(f"unknown factor label {keep!r}; have {layout.labels}")
    if len(layout.factors) == 1:
        return rho
    (lab_a, da), (lab_b, db) = layout.factors
    blocks = rho.data.reshape(da, db, da, db)
    if keep == lab_a:
        red = np.einsum("injn->ij", blocks)
        dim = da
    else:
        red = np.einsum("ninj->ij", blocks)
        dim = db
    return DensityMatrix(HilbertLayout.single(keep, dim), red, trace_tol=rho.trace_tol)


# ---------------------------------------------------------------------------
# thermal states

def _boltzmann(energies, kt):
    """Normalized Boltzmann weights exp(-E/kT); kt = 0 gives the ground-state limit."""
    e = np.asarray(energies, dtype=float)
    if kt == 0.0:
        p = (e == e.min()).astype(float)
        return p / p.sum()
    w = np.exp(-(e - e.min()) / kt)
    return w / w.sum()


def thermal_state_atom(levels, spec):
    """Thermal state of the 2- or 3-level atom at the given temperature.

    `levels` are the bare level frequencies (omega_g, omega_e[, omega_m]) in
    rad/s.  Populations follow exp(-hbar*omega_j / k_B T); the sign is the
    physically standard one (the degenerate and T -> 0 limits of the source
    formulas force it).
    """
    levels = tuple(float(x) for x in levels)
    if len(levels) not in (2, 3):
        raise UsageError(f"expected 2 or 3 atomic levels, got {len(levels)}")
    if not all(math.isfinite(x) for x in levels):
        raise UsageError("atomic level energies must be finite")
    p = _boltzmann(levels, spec.kt)
    return DensityMatrix.from_diag(HilbertLayout.single("atom", len(levels)), p)


def fock_thermal_populations(omega_q, kt, n_max):
    """Geometric thermal weights on 0..n_max before renormalization, plus tail mass."""
    if kt == 0.0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return p, 0.0
    q = math.exp(-omega_q / kt)
    p = (1.0 - q) * q ** np.arange(n_max + 1)
    tail = q ** (n_max + 1)
    return p, tail


def auto_fock_cutoff(omega_q, kt, eps_trunc=1e-10, margin=4, floor=4):
    """Smallest cutoff keeping thermal tail mass below eps_trunc, plus margin."""
    if kt == 0.0:
        return floor
    q = math.exp(-omega_q / kt)
    if q <= 0.0:
        return floor
    needed = math.ceil(math.log(eps_trunc) / math.log(q))
    return max(floor, needed + margin)


def thermal_state_fock(omega_q, spec, n_max, eps_trunc=1e-10):
    """Truncated geometric thermal state of the frequency-changer mode.

    Raises CutoffTooSmallError (carrying the required cutoff) if the mass
    beyond n_max is not below eps_trunc.
    """
    if omega_q <= 0:
        raise UsageError(f"mode frequency must be positive, got {omega_q}")
    if n_max < 1:
        raise UsageError(f"n_max must be >= 1, got {n_max}")
    kt = spec.kt
    p, tail = fock_thermal_populations(omega_q, kt, n_max)
    if tail >= eps_trunc:
        required = auto_fock_cutoff(omega_q, kt, eps_trunc)
        raise CutoffTooSmallError(
            f"thermal tail mass {tail:.3e} beyond n_max={n_max} exceeds {eps_trunc:.1e}; "
            f"need n_max >= {required}",
            required_n_max=required,
        )
    return DensityMatrix.from_diag(HilbertLayout.single("fock", n_max + 1), p / p.sum())
