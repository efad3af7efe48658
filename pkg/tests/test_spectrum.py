import numpy as np
import pytest

from conftest import random_state
from kickedharper.model import HarperParams
from kickedharper.spectrum import (align_and_compare, autocorrelation, build_unitary,
                                   butterfly_scan, eigenphases, exact_unitary, fejer_profile,
                                   phase_estimation, symmetry_error, time_series_spectrum,
                                   unitarity_deviation, wrap)
from kickedharper.statevector import QuantumState, apply_diagonal


def diag_step(phases):
    def step(state):
        return apply_diagonal(state, np.tile(np.exp(1j * phases), state.dim // phases.size))
    return step


def test_identity_and_diagonal():
    ph = eigenphases(np.eye(8))
    assert np.allclose(ph.phases, 0)
    known = np.array([-2.0, -0.5, 0.1, 1.0, 3.0])
    got = eigenphases(np.diag(np.exp(1j * known[::-1])))
    assert np.allclose(got.phases, known)
    assert got.unitarity_deviation < 1e-15


def test_build_unitary_columns():
    phases = np.linspace(0, 1, 16)
    U = build_unitary(diag_step(phases), 4)
    assert np.allclose(U, np.diag(np.exp(1j * phases)))
    assert unitarity_deviation(U) < 1e-14


def test_align_removes_global_phase(rng):
    a = np.sort(wrap(rng.uniform(-np.pi, np.pi, 32)))
    shifted = np.sort(wrap(a + 1.234))
    dE, off = align_and_compare(shifted, a)
    assert dE < 1e-12
    assert off == pytest.approx(1.234)
    with pytest.raises(ValueError):
        align_and_compare(a, a[:-1])


def test_exact_spectrum_symmetry():
    U = exact_unitary(HarperParams.cylinder(1, 1, 6))
    assert symmetry_error(eigenphases(U)) < 1e-10


def test_time_series_recovers_eigenphases():
    U = exact_unitary(HarperParams.cylinder(0.5, 2, 4))
    es = eigenphases(U)
    psi = np.full(16, 0.25, complex)
    step = lambda s: s.amplitudes.__setitem__(slice(None), U @ s.amplitudes) or s
    c = autocorrelation(psi, step, 5)
    assert np.allclose(c, [np.vdot(psi, np.linalg.matrix_power(U, t) @ psi) for t in range(5)])
    ts = time_series_spectrum(psi, step, 4096)
    assert ts.power.real.sum() == pytest.approx(1.0)
    vals, vecs = np.linalg.eig(U)
    w = np.abs(vecs.conj().T @ psi) ** 2
    for phi in np.angle(vals)[w > 0.05]:
        assert np.min(np.abs(wrap(ts.peaks - phi))) < 2 * np.pi / 4096


def test_phase_estimation_matches_fejer_profile():
    phases = np.array([0.3, -1.1, 2.0, 2.5])
    psi = np.zeros(4, complex)
    psi[1] = 1.0
    dist = phase_estimation(psi, diag_step(phases), 6)
    assert np.allclose(dist, fejer_profile(-1.1 % (2 * np.pi), 6), atol=1e-12)
    mixed = np.full(4, 0.5, complex)
    total = sum(0.25 * fejer_profile(p % (2 * np.pi), 5) for p in phases)
    assert np.allclose(phase_estimation(mixed, diag_step(phases), 5), total, atol=1e-12)
    with pytest.raises(MemoryError):
        phase_estimation(mixed, diag_step(phases), 30)


def test_butterfly_scan_shapes():
    out = butterfly_scan(4, ms=[1, 3, 8])
    assert [m for m, _, _ in out] == [1, 3, 8]
    assert all(ph.size == 16 for _, _, ph in out)
    assert out[2][1] == 0.5
