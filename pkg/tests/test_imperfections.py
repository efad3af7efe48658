import numpy as np
import pytest
from scipy.linalg import expm

from conftest import dense_op, random_state
from kickedharper.imperfections import apply_imperfection, noisy_apply, sample_disorder
from kickedharper.model import HarperParams, momentum_state
from kickedharper.observables import fidelity
from kickedharper.slices import SliceConfig, new_slice_state, slice_step, slice_step_sequence
from kickedharper.statevector import Gate, QuantumState

Z = np.diag([1.0, -1.0])
X = np.array([[0.0, 1.0], [1.0, 0.0]])


def dense_hamiltonian(dis):
    n = dis.n_q
    H = sum((dis.delta0 + dis.delta[i]) * dense_op(n, Z, [i]) for i in range(n))
    H = H + sum(dis.coupling[i] * dense_op(n, np.kron(X, X), [i, (i + 1) % n]) for i in range(n))
    return H


def test_zero_strength_is_identity(rng):
    psi = random_state(rng, 32)
    dis = sample_disorder(5, 0.0, seed=3)
    assert not dis.is_active
    s = apply_imperfection(QuantumState(psi.copy()), dis)
    assert np.allclose(s.amplitudes, psi)


def test_realizations_are_deterministic_and_distinct():
    a = sample_disorder(6, 1e-3, seed=7, realization=2)
    b = sample_disorder(6, 1e-3, seed=7, realization=2)
    c = sample_disorder(6, 1e-3, seed=7, realization=3)
    assert np.array_equal(a.delta, b.delta) and np.array_equal(a.coupling, b.coupling)
    assert not np.array_equal(a.delta, c.delta)
    with pytest.raises(ValueError):
        sample_disorder(3, -1.0)


def test_disorder_statistics():
    eps = 0.2
    draws = np.concatenate([sample_disorder(10, eps, seed=1, realization=r).delta for r in range(2000)])
    assert np.abs(draws).max() <= eps / 2
    assert abs(draws.mean()) < 3 * eps / np.sqrt(12 * draws.size)
    assert abs(draws.var() - eps ** 2 / 12) < 0.05 * eps ** 2 / 12


def test_split_step_against_matrix_exponential(rng):
    n = 4
    psi = random_state(rng, 16)
    errs = []
    scales = np.array([0.4, 0.2, 0.1, 0.05])
    base = sample_disorder(n, 1.0, seed=5)
    for s in scales:
        dis = sample_disorder(n, 1.0, seed=5)
        dis.delta, dis.coupling = base.delta * s, base.coupling * s
        dis._args = None
        got = apply_imperfection(QuantumState(psi.copy()), dis).amplitudes
        errs.append(np.abs(got - expm(-1j * dense_hamiltonian(dis)) @ psi).max())
    assert abs(np.polyfit(np.log(scales), np.log(errs), 1)[0] - 3) < 0.2


def test_noisy_sequence_interleaves_gates(rng):
    n = 3
    dis = sample_disorder(n, 0.3, seed=2)
    gates = [Gate.hadamard(0), Gate.xx(1, 2, 0.4), Gate.rz(2, 0.9)]
    psi = random_state(rng, 8)
    got = noisy_apply(QuantumState(psi.copy()), gates, dis)
    ref = QuantumState(psi.copy())
    for g in gates:
        from kickedharper.statevector import apply_gate
        apply_gate(ref, g)
        apply_imperfection(ref, dis)
    assert np.allclose(got.amplitudes, ref.amplitudes)
    assert abs(got.norm() - 1) < 1e-12
    with pytest.raises(ValueError):
        apply_imperfection(QuantumState(random_state(rng, 16)), dis)


def test_fidelity_decreases_with_strength():
    p = HarperParams.cylinder(1, 5, 5)
    cfg = SliceConfig(5)
    ref = momentum_state(5, ancilla=True)
    for _ in range(5):
        slice_step(ref, p, cfg)
    f = []
    for eps in (1e-4, 1e-3, 1e-2):
        dis = sample_disorder(6, eps, seed=0)
        s = momentum_state(5, ancilla=True)
        for _ in range(5):
            slice_step(s, p, cfg, disorder=dis)
        assert abs(s.norm() - 1) < 1e-10
        f.append(fidelity(s, ref))
    assert f[0] > f[1] > f[2]
    assert f[0] > 0.99
