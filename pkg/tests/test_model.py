import math

import numpy as np
import pytest

from conftest import random_state
from kickedharper.model import (GOLDEN_HBAR, ClassicalPoint, HarperParams, classical_ensemble_evolve,
                                classical_map_step, classical_point_step, exact_gate_count,
                                exact_kick_momentum, exact_kick_theta, exact_step, gaussian_cloud,
                                kick_phases, momentum_state, nearest_hbar, split_power_of_two,
                                web_initial_cloud)
from kickedharper.observables import ipr, momentum_probabilities
from kickedharper.slices import SliceConfig, slice_step_sequence
from kickedharper.statevector import QuantumState, apply_qft, new_basis_state


def dense_step(params):
    N = params.N_H
    j = np.arange(N)
    F = np.exp(2j * np.pi * np.outer(j, j) / N) / np.sqrt(N)
    Dt = np.diag(np.exp(-1j * params.K / params.hbar * np.cos(2 * np.pi * params.Q * j / N)))
    Dn = np.diag(np.exp(-1j * params.L / params.hbar * np.cos(2 * np.pi * params.P * j / N)))
    return F.conj().T @ Dn @ F @ Dt


def test_nearest_hbar_values():
    assert nearest_hbar(9, GOLDEN_HBAR).m == 67
    assert nearest_hbar(8, GOLDEN_HBAR).m == 34
    frac = nearest_hbar(10, 64 / 1024)
    assert (frac.m, frac.a, frac.m_odd) == (64, 6, 1)
    assert nearest_hbar(3, 2.5 / 8).m == 3            # ties go up
    with pytest.raises(ValueError):
        nearest_hbar(4, 0.01)
    with pytest.raises(ValueError):
        nearest_hbar(4, 1.5)


def test_split_power_of_two():
    assert split_power_of_two(40) == (3, 5)
    assert split_power_of_two(7) == (0, 7)
    with pytest.raises(ValueError):
        split_power_of_two(0)


def test_params_invariants():
    p = HarperParams.cylinder(1, 5, 8)
    assert (p.m, p.P, p.Q, p.geometry) == (34, 34, 1, "cylinder")
    assert p.hbar == 2 * math.pi * 34 / 256
    t = HarperParams.torus(0.5, 0.5, 10)
    assert (t.m, t.P, t.Q, t.geometry) == (64, 8, 8, "torus")
    with pytest.raises(ValueError):
        HarperParams(1, 1, 4, 16, 16)
    with pytest.raises(ValueError):
        HarperParams(1, 1, 6, 12, 5, 2)


def test_zero_kicks_are_identity(rng):
    psi = random_state(rng, 32)
    s = QuantumState(psi.copy())
    exact_step(s, HarperParams(0.0, 0.0, 5, 3, 3))
    assert np.allclose(s.amplitudes, psi, atol=1e-13)


@pytest.mark.parametrize("params", [HarperParams.cylinder(1, 5, 6),
                                    HarperParams(0.3, 0.7, 6, 8, 8),
                                    HarperParams.torus(0.5, 0.5, 7)])
def test_exact_step_equals_dense_product(rng, params):
    psi = random_state(rng, params.N_H)
    s = exact_step(QuantumState(psi.copy()), params)
    assert np.abs(s.amplitudes - dense_step(params) @ psi).max() <= 1e-12


def test_theta_kick_parity():
    ph = kick_phases(2.3, 1, 64)
    j = np.arange(1, 64)
    assert np.allclose(ph[j], ph[64 - j])


def test_momentum_kick_depends_on_low_qubits_for_even_m():
    p = HarperParams(0.0, 1.0, 6, 12, 12)           # m = 4 * 3
    ph = kick_phases(p.L / p.hbar, p.P, p.N_H)
    n = np.arange(64)
    assert np.allclose(ph, ph[n % 16])
    direct = np.exp(-1j * p.L / p.hbar * np.cos(2 * np.pi * 12 * n / 64))
    assert np.allclose(ph, direct)


def test_fixed_point_precision(rng):
    n_r = 6
    p = HarperParams.cylinder(1, 5, n_r)
    psi = random_state(rng, p.N_H)
    a = exact_step(QuantumState(psi.copy()), p)
    b = exact_step(QuantumState(psi.copy()), p, n_p=2 * n_r)
    k = max(p.K, p.L) / p.hbar
    assert 1 - abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2 <= k ** 2 * 2.0 ** (-2 * n_r)
    assert abs(np.vdot(a.amplitudes, b.amplitudes)) < 1 - 1e-12


def test_kicks_with_zero_strength():
    s = new_basis_state(4, 3)
    p = HarperParams(0.0, 0.0, 4, 3, 3)
    exact_kick_theta(s, p)
    exact_kick_momentum(s, p)
    assert s.amplitudes[3] == 1


def test_unitarity_over_many_steps(rng):
    p = HarperParams.cylinder(2, 27, 7)
    s = QuantumState(random_state(rng, p.N_H))
    for _ in range(1000):
        exact_step(s, p)
    assert abs(s.norm() - 1) < 1e-10


def test_momentum_state_is_uniform_and_measures_back():
    s = momentum_state(5)
    assert np.allclose(s.amplitudes, 1 / np.sqrt(32))
    p = momentum_probabilities(momentum_state(5, 7, ancilla=True))
    assert p.argmax() == 7 and math.isclose(p.max(), 1.0)


def test_localized_profile_is_exponential():
    p = HarperParams.cylinder(1, 5, 8)
    s = momentum_state(8)
    for _ in range(1000):
        exact_step(s, p)
    prob = momentum_probabilities(s)
    assert ipr(prob) < 10
    offsets = (np.arange(256) + 128) % 256 - 128
    far = prob[np.abs(offsets) > 30].max()
    assert far < 1e-6 * prob.max()


def test_gate_count_model():
    assert exact_gate_count(8, 16) < exact_gate_count(9, 16)
    assert exact_gate_count(8, 16) < exact_gate_count(8, 17)
    ratios = [exact_gate_count(2 * n, 2 * n) / exact_gate_count(n, n) for n in (8, 32, 128)]
    assert abs(ratios[-1] - 8) < abs(ratios[0] - 8) and abs(ratios[-1] - 8) < 0.05
    with pytest.raises(ValueError):
        exact_gate_count(8, 7)
    slice_count = slice_step_sequence(HarperParams.cylinder(1, 5, 8), SliceConfig(40)).n_g
    assert exact_gate_count(8, 16) > slice_count


def test_classical_map_examples():
    assert classical_map_step(0.0, 0.0, 1, 5) == (0.0, 0.0)
    I, th = classical_map_step(0.0, math.pi / 2, 1, 5)
    assert math.isclose(I, 1.0)
    assert math.isclose(th, (math.pi / 2 - 5 * math.sin(1)) % (2 * math.pi))
    pt = classical_point_step(ClassicalPoint(0.0, math.pi / 2), 1, 5)
    assert math.isclose(pt.I, 1.0)


def test_classical_map_area_preserving(rng):
    K, L = 1.3, 2.7
    I = rng.uniform(0, 2 * np.pi, 100)
    th = rng.uniform(0, 2 * np.pi, 100)
    # analytic Jacobian of (I, theta) -> (I + K sin theta, theta - L sin I')
    Ib = I + K * np.sin(th)
    a, b = np.ones_like(I), K * np.cos(th)
    c, d = -L * np.cos(Ib) * a, 1 - L * np.cos(Ib) * b
    assert np.abs(a * d - b * c - 1).max() < 1e-12
    h = 1e-6
    f = lambda x, y: np.array(classical_map_step(x, y, K, L))
    wrap = lambda v: (v + np.pi) % (2 * np.pi) - np.pi
    dI = wrap(f(I + h, th) - f(I - h, th)) / (2 * h)
    dT = wrap(f(I, th + h) - f(I, th - h)) / (2 * h)
    det = dI[0] * dT[1] - dT[0] * dI[1]
    assert np.abs(det - 1).max() < 1e-6


def test_ensemble_histogram_t0_and_web():
    I, th = gaussian_cloud(20000, 5.0, 7.0, 0.01, seed=1)
    d = classical_ensemble_evolve(I, th, 0, 0.5, 0.5, grid=(64, 64))
    assert math.isclose(d.sum(), 1.0)
    i, j = np.unravel_index(d.argmax(), d.shape)
    cell = 16 * np.pi / 64
    assert abs((i + 0.5) * cell - 7.0) < cell and abs((j + 0.5) * cell - 5.0) < cell
    I, th = web_initial_cloud(20000, seed=2)
    web = classical_ensemble_evolve(I, th, 300, 0.5, 0.5, grid=(64, 64))
    occupied = (web > 0).mean()
    assert 0.02 < occupied < 0.5       # a thin network, neither a blob nor uniform


def test_chaotic_filling_single_cell():
    rng = np.random.default_rng(3)
    I, th = rng.normal(1.0, 0.01, 20000), rng.normal(1.0, 0.01, 20000)
    d = classical_ensemble_evolve(I, th, 500, 2.5, 2.5, P=1, Q=1, grid=(16, 16))
    assert (d > 0).mean() > 0.9
