import math

import numpy as np
import pytest

from qbattery.errors import UsageError
from qbattery.model import (
    ModelParams,
    ProtocolParams,
    build_H_classical_effective,
    build_H_classical_full,
    build_H_eff,
    build_H_full_rotating,
    doublet_spectrum,
    stark_shift_quantum,
    tau_selective,
)
from qbattery.operators import HilbertLayout, herm_eig, sigma, create_op, destroy_op, kron

from conftest import DELTA, OMEGA_M, TWO_PI, xi_params


def test_two_photon_resonance_by_construction():
    p = xi_params(99.0)
    assert math.isclose(p.omega_q, p.omega_laser - p.omega_eg, rel_tol=1e-14)
    # Delta = omega_mg - omega_L = omega_me - omega_q (omega_g = 0 reference);
    # the differences cancel ~6 digits, so compare at the cancellation floor
    assert abs((p.omega_m - p.omega_laser) - p.delta) < 1e-8 * p.omega_m
    assert abs((p.omega_me - p.omega_q) - p.delta) < 1e-8 * p.omega_m
    assert math.isclose(p.xi, 99.0, rel_tol=1e-12)
    assert math.isclose(p.r, 1.0 / 30.0, rel_tol=1e-14)


def test_params_reject_nonpositive_and_impossible():
    with pytest.raises(UsageError):
        ModelParams(omega_eg=-1.0, omega_m=OMEGA_M, delta=DELTA, omega_l_rabi=1.0, g_q=1.0)
    with pytest.raises(UsageError):
        # omega_m - delta < omega_eg makes omega_q negative
        ModelParams(omega_eg=OMEGA_M, omega_m=OMEGA_M, delta=DELTA, omega_l_rabi=1.0, g_q=1.0)


def test_dispersive_warning():
    p = ModelParams(omega_eg=1e10, omega_m=OMEGA_M, delta=1e4, omega_l_rabi=5e3, g_q=1e3)
    assert not p.is_dispersive()
    with pytest.warns(UserWarning):
        build_H_classical_effective(p)


def test_classical_effective_coupling():
    # Omega_L = Omega_q = Delta/20 gives Omega_bar = Delta/400
    p = ModelParams(
        omega_eg=OMEGA_M / 100, omega_m=OMEGA_M, delta=DELTA,
        omega_l_rabi=DELTA / 20, g_q=DELTA / 600, omega_q_rabi=DELTA / 20,
    )
    h = build_H_classical_effective(p)
    assert math.isclose(h[0, 1].real, DELTA / 400.0, rel_tol=1e-14)
    # benchmark values: Delta/2pi = 1 MHz -> Omega_bar/2pi = 2.5 kHz
    assert math.isclose(h[0, 1].real / TWO_PI, 2500.0, rel_tol=1e-12)
    assert h[0, 1] == np.conj(h[1, 0])


def test_full_rotating_hamiltonian_elementwise():
    # element-by-element oracle at the benchmark parameters
    p = xi_params(99.0)
    proto = ProtocolParams(target_n=1)
    n_max = 3
    lay = HilbertLayout.atom_fock(3, n_max)
    h = build_H_full_rotating(p, proto, lay)
    dc = stark_shift_quantum(p, proto)
    df = n_max + 1
    want = np.zeros((lay.dim, lay.dim), dtype=complex)
    for n in range(df):
        want[2 * df + n, 2 * df + n] = p.delta
        want[1 * df + n, 1 * df + n] = dc
        want[0 * df + n, 2 * df + n] = p.omega_l_rabi
        want[2 * df + n, 0 * df + n] = p.omega_l_rabi
        if n + 1 <= n_max:
            # sigma_me b: |m,n><e,n+1| sqrt(n+1)
            want[2 * df + n, 1 * df + n + 1] = p.g_q * math.sqrt(n + 1)
            want[1 * df + n + 1, 2 * df + n] = p.g_q * math.sqrt(n + 1)
    assert np.max(np.abs(h - want)) < 1e-9


def test_full_rotating_limits_and_structure():
    p = xi_params(99.0)
    lay = HilbertLayout.atom_fock(3, 4)
    # no direct g<->e coupling for any n
    h = build_H_full_rotating(p, ProtocolParams(1), lay)
    df = lay.fock_dim
    for n in range(df):
        for npr in range(df):
            assert h[lay.index(0, n), lay.index(1, npr)] == 0
    with pytest.raises(UsageError):
        build_H_full_rotating(p, ProtocolParams(1), HilbertLayout.atom_fock(2, 4))


def test_full_rotating_bare_ancilla_limit():
    # with both couplings tiny the Hamiltonian tends to Delta sigma_mm
    p = ModelParams(omega_eg=OMEGA_M / 100, omega_m=OMEGA_M, delta=DELTA,
                    omega_l_rabi=1e-6, g_q=1e-6)
    lay = HilbertLayout.atom_fock(3, 2)
    h = build_H_full_rotating(p, ProtocolParams(1, stark_compensation=False), lay)
    want = p.delta * kron(sigma(2, 2, 3), np.eye(3))
    assert np.max(np.abs(h - want)) <= 1e-5


def test_h_eff_matches_closed_form():
    p = xi_params(99.0)
    proto = ProtocolParams(target_n=1)
    lay = HilbertLayout.atom_fock(2, 5)
    h = build_H_eff(p, proto, lay)
    # |e,0> is an uncoupled zero-energy eigenstate
    ie0 = lay.index(1, 0)
    assert h[ie0, ie0] == 0
    assert np.max(np.abs(h[ie0, :])) == 0 and np.max(np.abs(h[:, ie0])) == 0
    # N=1, n=0 doublet: coupling Omega_L g_q / Delta, zero gap
    ig0, ie1 = lay.index(0, 0), lay.index(1, 1)
    assert math.isclose(h[ig0, ie1].real, p.g_eff, rel_tol=1e-14)
    assert abs(h[ig0, ig0] - h[ie1, ie1]) < 1e-12
    # n=1 doublet gap equals r^2 Omega_L^2 (2-1)/Delta
    ig1, ie2 = lay.index(0, 1), lay.index(1, 2)
    gap = (h[ig1, ig1] - h[ie2, ie2]).real
    assert math.isclose(gap, p.r**2 * p.omega_l_rabi**2 / p.delta, rel_tol=1e-12)
    with pytest.raises(UsageError):
        build_H_eff(p, proto, HilbertLayout.atom_fock(3, 5))


def test_h_eff_doublet_blocks_closed():
    p = xi_params(7.0, omega_l_frac=1 / 25.0, g_q_frac=1 / 80.0)
    lay = HilbertLayout.atom_fock(2, 6)
    h = build_H_eff(p, ProtocolParams(2), lay)
    pairs = {(lay.index(0, n), lay.index(1, n + 1)) for n in range(lay.n_max)}
    for i in range(lay.dim):
        for j in range(lay.dim):
            if i == j or (i, j) in pairs or (j, i) in pairs:
                continue
            assert h[i, j] == 0


@pytest.mark.parametrize("n,target", [(0, 1), (2, 3), (4, 2)])
def test_doublet_spectrum_formulas(n, target):
    p = xi_params(99.0)
    proto = ProtocolParams(target_n=target)
    ds = doublet_spectrum(p, proto, n)
    # independent scalar re-evaluation
    r, ol, d = p.g_q / p.omega_l_rabi, p.omega_l_rabi, p.delta
    assert math.isclose(ds.delta_n, r**2 * ol**2 * (n + 1 - target) / d, rel_tol=1e-14, abs_tol=1e-12)
    assert math.isclose(ds.g_n, r * ol**2 * math.sqrt(n + 1) / d, rel_tol=1e-14)
    assert math.isclose(ds.omega_n, math.sqrt(ds.delta_n**2 / 4 + ds.g_n**2), rel_tol=1e-14)
    assert math.isclose(ds.a_n, 1.0 / (1.0 + r**2 * (n + 1 - target) ** 2 / (4 * (n + 1))), rel_tol=1e-14)
    # algebraic identity A_n = G_n^2 / Omega_n^2
    assert abs(ds.a_n - ds.g_n**2 / ds.omega_n**2) < 1e-12


def test_doublet_resonant_and_selective_limits():
    p = xi_params(99.0)
    big_n = 3
    ds = doublet_spectrum(p, ProtocolParams(big_n), big_n - 1)
    assert ds.delta_n == 0
    assert math.isclose(ds.omega_n, ds.g_n, rel_tol=1e-15)
    assert math.isclose(ds.g_n, p.r * p.omega_l_rabi**2 * math.sqrt(big_n) / p.delta, rel_tol=1e-14)
    assert ds.a_n == 1.0
    # selective limit: growing r kills the off-resonant amplitude, ~4(n+1)/(r n)^2
    p_sel = xi_params(99.0, omega_l_frac=1.0 / 12000.0)  # r = 20
    a_off = doublet_spectrum(p_sel, ProtocolParams(1), 3).a_n
    assert a_off < 5e-3
    assert a_off < 0.01 * doublet_spectrum(p, ProtocolParams(1), 3).a_n
    p_sel2 = xi_params(99.0, omega_l_frac=1.0 / 60000.0)  # r = 100
    assert doublet_spectrum(p_sel2, ProtocolParams(1), 3).a_n < a_off / 20.0


def test_h_eff_resonant_gap_is_2g():
    p = xi_params(99.0)
    big_n = 2
    lay = HilbertLayout.atom_fock(2, 6)
    h = build_H_eff(p, ProtocolParams(big_n), lay)
    ig, ie = lay.index(0, big_n - 1), lay.index(1, big_n)
    block = h[np.ix_([ig, ie], [ig, ie])]
    w, _ = herm_eig(block)
    ds = doublet_spectrum(p, ProtocolParams(big_n), big_n - 1)
    assert math.isclose(w[1] - w[0], 2.0 * ds.g_n, rel_tol=1e-12)


def test_stark_compensation_brings_target_doublet_to_resonance():
    # dressed |g,N-1> / |e,N> splitting of the full Hamiltonian equals 2 G_{N-1}
    # up to higher-order dispersive corrections
    p = xi_params(99.0)
    proto = ProtocolParams(target_n=1)
    lay = HilbertLayout.atom_fock(3, 6)
    h = build_H_full_rotating(p, proto, lay)
    w, v = herm_eig(h)
    e_g0 = w[np.argmax(np.abs(v[lay.index(0, 0), :]))]
    e_e1 = w[np.argmax(np.abs(v[lay.index(1, 1), :]))]
    ds = doublet_spectrum(p, proto, 0)
    assert abs(abs(e_g0 - e_e1) - 2.0 * ds.g_n) < 0.02 * 2.0 * ds.g_n
    # without the d.c. term the pair is detuned by (Omega_L^2 - g_q^2 N)/Delta
    h_un = build_H_full_rotating(p, ProtocolParams(1, stark_compensation=False), lay)
    w2, v2 = herm_eig(h_un)
    eg = w2[np.argmax(np.abs(v2[lay.index(0, 0), :]))]
    ee = w2[np.argmax(np.abs(v2[lay.index(1, 1), :]))]
    detuning = (p.omega_l_rabi**2 - p.g_q**2) / p.delta
    assert abs(abs(eg - ee) - detuning) < 0.01 * detuning


def test_builders_hermitian():
    p = xi_params(5.0)
    proto = ProtocolParams(2)
    mats = [
        build_H_classical_effective(p),
        build_H_classical_full(p),
        build_H_eff(p, proto, HilbertLayout.atom_fock(2, 5)),
        build_H_full_rotating(p, proto, HilbertLayout.atom_fock(3, 5)),
    ]
    for m in mats:
        assert np.max(np.abs(m - m.conj().T)) <= 1e-12 * max(1.0, np.max(np.abs(m)))


def test_tau_selective_scaling():
    p = xi_params(99.0)
    assert math.isclose(
        tau_selective(p, 1), math.pi * p.delta / (2 * p.r * p.omega_l_rabi**2), rel_tol=1e-14
    )
    assert math.isclose(tau_selective(p, 4), tau_selective(p, 1) / 2.0, rel_tol=1e-14)
