import numpy as np
import pytest

from conftest import random_state
from kickedharper.model import HarperParams, momentum_state
from kickedharper.observables import (FitError, coarse_grain, coherent_state, density_mask,
                                      downsample, fidelity, fit_localization_length, husimi,
                                      husimi_error, husimi_total, ipr, momentum_distribution,
                                      momentum_probabilities, predict, second_moment)
from kickedharper.statevector import QuantumState


def test_ipr_limits():
    assert ipr(np.eye(16)[3]) == pytest.approx(1.0)
    assert ipr(np.full(16, 1 / 16)) == pytest.approx(16.0)
    batch = np.stack([np.eye(8)[0], np.full(8, 1 / 8)], axis=1)
    assert np.allclose(ipr(batch), [1, 8])
    with pytest.raises(ValueError):
        ipr(np.zeros(4))


def test_second_moment():
    p = np.zeros(16)
    p[[3, 5]] = 0.5
    assert second_moment(p) == pytest.approx(1.0)
    q = np.zeros(16)
    q[[0, 15]] = 0.5
    assert second_moment(q) == pytest.approx(56.25)
    assert second_moment(q, periodic=True) == pytest.approx(0.25)


@pytest.mark.parametrize("l,c", [(2.0, 40), (5.0, 100), (3.3, 10)])
def test_fit_recovers_synthetic_length(l, c):
    n = np.arange(128)
    d = np.minimum(np.abs(n - c), 128 - np.abs(n - c))
    p = np.exp(-2 * d / l)
    assert fit_localization_length(p, w=20) == pytest.approx(l, rel=1e-9)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_localization_length(np.eye(64)[5], w=10)
    with pytest.raises(FitError):
        fit_localization_length(np.ones(64), w=10)


def test_distribution_sums_ancilla(rng):
    psi = random_state(rng, 32)
    s = QuantumState(psi, n_r=4, ancilla=4)
    p = momentum_distribution(s)
    assert p.shape == (16,)
    assert np.allclose(p, np.abs(psi[:16]) ** 2 + np.abs(psi[16:]) ** 2)
    assert np.allclose(momentum_probabilities(momentum_state(4, 5)), np.eye(16)[5])


def test_fidelity():
    a = np.eye(4)[0].astype(complex)
    assert fidelity(a, a) == 1.0
    assert fidelity(a, np.eye(4)[1]) == 0.0
    with pytest.raises(ValueError):
        fidelity(a, np.ones(8))


def test_coarse_grain():
    p = np.arange(16, dtype=float)
    p /= p.sum()
    assert np.allclose(coarse_grain(p, 0), [1.0])
    assert np.allclose(coarse_grain(p, 4), p)
    assert np.allclose(coarse_grain(p, 1), [p[:8].sum(), p[8:].sum()])
    with pytest.raises(ValueError):
        coarse_grain(p, 5)


def husimi_direct(psi, params):
    """Plain double loop over m for each (Theta, n)."""
    N, P, Q = params.N_H, params.P, params.Q
    h = np.zeros((N, N))
    pref = np.sqrt(2 * P / (Q * N ** 3))
    for n in range(N):
        for T in range(N):
            s = 0j
            for m in range(n - N // 2 + 1, n + N // 2 + 1):
                s += np.exp(-np.pi * P * (m - n) ** 2 / (N * Q) + 2j * np.pi * m * T / N) * psi[m % N] \
                    * np.exp(-2j * np.pi * n * T / N)
            h[T, n] = pref * abs(s) ** 2
    return h


def test_husimi_against_direct_sum(rng):
    params = HarperParams.torus(1, 1, 5, cells=2)
    psi = random_state(rng, 32)
    h = husimi(psi, params)
    assert np.allclose(h, husimi_direct(psi, params), atol=1e-12)
    assert np.all(h >= 0)
    assert h.sum() == pytest.approx(husimi_total(params), rel=1e-12)


def test_coherent_state_peaks_at_centre():
    params = HarperParams.torus(1, 1, 6, cells=4)
    psi = coherent_state(params, 20, 40)
    h = husimi(psi, params)
    T, n = np.unravel_index(np.argmax(h), h.shape)
    assert (T, n) == (20, 40)
    assert np.linalg.norm(psi) == pytest.approx(1.0)


def test_downsample_and_mask():
    g = np.arange(16.0).reshape(4, 4)
    assert np.allclose(downsample(g, 2), [[10, 18], [42, 50]])
    with pytest.raises(ValueError):
        downsample(g, 3)
    d = np.array([[0, 1, 2], [3, 4, 0], [0, 0, 5]], float)
    assert density_mask(d).sum() == 2
    with pytest.raises(ValueError):
        density_mask(np.zeros((2, 2)))


def test_husimi_error():
    h0 = np.ones((4, 4))
    assert husimi_error(h0, h0) == 0.0
    assert husimi_error(2 * h0, h0) == pytest.approx(1.0)
    mask = np.zeros((4, 4), bool)
    mask[0, 0] = True
    h1 = h0.copy()
    h1[1, 1] = 5
    assert husimi_error(h1, h0, mask) == 0.0
    with pytest.raises(ValueError):
        husimi_error(h0, h0, np.zeros((4, 4), bool))


def test_predictions():
    loc = predict("localized", 1000, 9, 1e-5)
    assert loc.eps_c == pytest.approx(0.3 / (1000 * 3))
    assert predict("localized", 1000, 9, 1e-5, l=4.0, C1=0.6).eps_c == pytest.approx(loc.eps_c)
    de = predict("delocalized", 100, 4, 1e-4)
    assert de.eps_c == pytest.approx(7.4 / (100 * 2 * 4))
    assert de.Gamma == pytest.approx(2 * np.pi * de.V_typ ** 2 * 16)
    assert predict("delocalized", 100, 4, 0.0).t_h == np.inf
    for bad in [("other", 1, 1, 0.0), ("localized", 0, 1, 0.0), ("localized", 1, 1, -1.0)]:
        with pytest.raises(ValueError):
            predict(*bad)
    with pytest.raises(ValueError):
        predict("localized", 1, 1, 0.1, C1=1.0)
