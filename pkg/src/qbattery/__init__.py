"""Vacuum-enhanced charging of a two-level quantum battery.

Simulation of a thermal two-level battery charged through an off-resonant
Raman Lambda-system whose frequency-changer arm is either a classical drive
or a quantized mode (anti-Jaynes-Cummings regime), with closed-form,
effective-Hamiltonian, full-Hamiltonian and Lindblad engines plus the
gain/efficiency bookkeeping needed to reproduce the benchmark figures.
"""

from .dynamics import (
    EnergyLedger,
    IntegratorOptions,
    LindbladChannel,
    ReservoirSpec,
    build_channels,
    evolve_lindblad,
    propagate_unitary,
)
from .model import (
    ModelParams,
    ProtocolParams,
    build_H_classical_effective,
    build_H_classical_full,
    build_H_eff,
    build_H_full_rotating,
    doublet_spectrum,
    tau_selective,
)
from .observables import ChargingReport, efficiency, ergotropy, gain, internal_energy
from .operators import (
    DensityMatrix,
    HilbertLayout,
    ThermalSpec,
    herm_eig,
    kron,
    partial_trace,
    thermal_state_atom,
    thermal_state_fock,
)
from .protocols import (
    ProtocolRun,
    classical_charge,
    open_system_run,
    optimize_tau,
    sequential_charge,
    single_shot_S,
    single_shot_quantum,
)

__version__ = "0.1.0"
