"""Floquet eigenphases: dense matrix build and diagonalization, the
autocorrelation (time-series) method, phase estimation, and comparison of
two eigenphase sets up to a global phase."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import HarperParams, exact_step
from .statevector import QuantumState

TWO_PI = 2 * np.pi
PHASE_ESTIMATION_CAP = 24


def wrap(x):
    """Reduce angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, float), TWO_PI)


@dataclass
class EigenphaseSet:
    phases: np.ndarray
    method: str = ""
    offset: float = 0.0
    unitarity_deviation: float = 0.0
    vectors: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return self.phases.size


def build_unitary(step: Callable[[QuantumState], QuantumState], n_r: int,
                  ancilla: bool = False) -> np.ndarray:
    """Column j = register block of step(|j>), all columns evolved as one batch.

    With ``ancilla`` the state has one extra qubit (index n_r) that starts
    in |0>; the returned matrix is the ancilla-|0> block.
    """
    N = 1 << n_r
    dim = 2 * N if ancilla else N
    cols = np.zeros((dim, N), complex)
    cols[np.arange(N), np.arange(N)] = 1.0
    state = QuantumState(cols, n_r=n_r, ancilla=n_r if ancilla else None)
    step(state)
    return state.amplitudes[:N, :].copy()


def unitarity_deviation(U: np.ndarray) -> float:
    return float(np.abs(U.conj().T @ U - np.eye(U.shape[0])).max())


def eigenphases(U: np.ndarray, method: str = "diagonalization",
                vectors: bool = False) -> EigenphaseSet:
    """Sorted arguments of the eigenvalues, projected onto the unit circle."""
    try:
        if vectors:
            vals, vecs = np.linalg.eig(U)
        else:
            vals, vecs = np.linalg.eigvals(U), None
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver did not converge: {exc}") from exc
    ph = np.angle(vals / np.abs(vals))
    ph = np.where(ph <= -np.pi, np.pi, ph)
    order = np.argsort(ph)
    return EigenphaseSet(ph[order], method, 0.0, unitarity_deviation(U),
                         None if vecs is None else vecs[:, order])


def align_and_compare(set_eps, set0) -> tuple[float, float]:
    """Mean |Delta E| after removing a global phase, in units of 2 pi / N.

    Every cyclic matching of the two sorted lists is tried; for each the
    offset is the circular mean of the differences and the matching with the
    smallest mean residual wins.  Returns (Delta E / Delta_n, offset).
    """
    a = np.sort(np.asarray(getattr(set_eps, "phases", set_eps), float))
    b = np.sort(np.asarray(getattr(set0, "phases", set0), float))
    if a.size != b.size:
        raise ValueError("eigenphase sets differ in size")
    N = a.size
    best = (np.inf, 0.0)
    for r in range(N):
        d = wrap(np.roll(a, -r) - b)
        off = float(np.angle(np.mean(np.exp(1j * d))))
        res = float(np.mean(np.abs(wrap(d - off))))
        if res < best[0]:
            best = (res, off)
    return best[0] / (TWO_PI / N), best[1]


def symmetry_error(phases) -> float:
    """Distance (in 2 pi / N units) between the set and its mirror image E -> -E."""
    ph = np.asarray(getattr(phases, "phases", phases), float)
    return align_and_compare(ph, wrap(-ph))[0]


# ---------------------------------------------------------------- time series

@dataclass
class TimeSeriesSpectrum:
    autocorrelation: np.ndarray
    frequencies: np.ndarray          # E_k = 2 pi k / T in (-pi, pi]
    power: np.ndarray                # (1/T) sum_t c(t) e^{-i E_k t}; sums to c(0)
    peaks: np.ndarray
    peak_weights: np.ndarray


def autocorrelation(psi0: np.ndarray, step, T: int, n_r: int | None = None,
                    ancilla: bool = False) -> np.ndarray:
    """c(t) = <psi0|U^t psi0>, t = 0..T-1 (register block if an ancilla is used)."""
    psi0 = np.asarray(psi0, complex)
    N = psi0.size
    n_r = N.bit_length() - 1 if n_r is None else n_r
    amps = np.zeros(2 * N if ancilla else N, complex)
    amps[:N] = psi0
    state = QuantumState(amps, n_r=n_r, ancilla=n_r if ancilla else None)
    c = np.empty(T, complex)
    for t in range(T):
        c[t] = np.vdot(psi0, state.amplitudes[:N])
        if t < T - 1:
            step(state)
    return c


def spectrum_peaks(c: np.ndarray, pad: int = 8, rel_height: float = 1e-3):
    """Peak positions from the Hann-windowed, zero-padded spectrum of c(t).

    Positions come from a parabola through the log-magnitude at each local
    maximum; weights are the peak heights divided by the window sum, which
    estimates |<psi0|psi_a>|^2 for isolated eigenphases.
    """
    T = c.size
    win = np.hanning(T + 2)[1:-1]
    L = pad * T
    F = np.abs(np.fft.fft(c * win, L))
    peak_idx = [k for k in range(L)
                if F[k] >= F[k - 1] and F[k] > F[(k + 1) % L] and F[k] > rel_height * F.max()]
    pos, wts = [], []
    for k in peak_idx:
        y0, y1, y2 = np.log(F[k - 1] + 1e-300), np.log(F[k]), np.log(F[(k + 1) % L] + 1e-300)
        den = y0 - 2 * y1 + y2
        delta = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        pos.append(wrap(TWO_PI * (k + delta) / L))
        wts.append(F[k] / win.sum())
    pos = np.asarray(pos, float)
    order = np.argsort(pos)
    return pos[order], np.asarray(wts)[order]


def time_series_spectrum(psi0, step, T: int, ancilla: bool = False,
                         pad: int = 8, rel_height: float = 1e-3) -> TimeSeriesSpectrum:
    c = autocorrelation(psi0, step, T, ancilla=ancilla)
    k = np.arange(T)
    power = np.fft.fft(c) / T
    freqs = wrap(TWO_PI * k / T)
    peaks, wts = spectrum_peaks(c, pad, rel_height)
    return TimeSeriesSpectrum(c, freqs, power, peaks, wts)


# ---------------------------------------------------------- phase estimation

def phase_estimation(psi0, step, n_t: int, cap: int = PHASE_ESTIMATION_CAP,
                     ancilla: bool = False) -> np.ndarray:
    """Measurement distribution of an n_t-qubit time register.

    Simulates: Hadamards on the time register, controlled U^(2^j) from time
    qubit j, then the inverse Fourier transform (kernel exp(-2 pi i t k / 2^n_t))
    on the time register.  U|psi_a> = e^{i E_a}|psi_a> gives peaks at
    k = 2^n_t E_a / (2 pi).
    """
    psi0 = np.asarray(psi0, complex)
    N = psi0.size
    n_r = N.bit_length() - 1
    n_sys = n_r + (1 if ancilla else 0)
    if n_t + n_sys > cap:
        raise MemoryError(f"phase estimation needs {n_t + n_sys} qubits, above the cap of {cap}")
    T = 1 << n_t
    dim = 2 * N if ancilla else N
    # rows: system index, columns: time-register value t; start 2^{-n_t/2} sum_t |t>|psi0>
    reg = np.zeros((dim, T), complex)
    reg[:N, :] = psi0[:, None] / np.sqrt(T)
    t = np.arange(T)
    for j in range(n_t):
        sel = np.nonzero(t & (1 << j))[0]
        sub = QuantumState(np.ascontiguousarray(reg[:, sel]), n_r=n_r,
                           ancilla=n_r if ancilla else None)
        for _ in range(1 << j):
            step(sub)
        reg[:, sel] = sub.amplitudes
    out = np.fft.fft(reg, axis=1, norm="ortho")
    return np.sum(np.abs(out) ** 2, axis=0)


def fejer_profile(phi: float, n_t: int) -> np.ndarray:
    """Exact phase-estimation distribution for an eigenvector with phase phi."""
    T = 1 << n_t
    d = phi - TWO_PI * np.arange(T) / T
    s = np.sin(d / 2)
    out = np.empty(T)
    small = np.abs(s) < 1e-12
    out[small] = 1.0
    out[~small] = (np.sin(T * d[~small] / 2) / (T * s[~small])) ** 2
    return out


# ------------------------------------------------------------------ butterfly

def exact_unitary(params: HarperParams) -> np.ndarray:
    return build_unitary(lambda s: exact_step(s, params), params.n_r)


def butterfly_scan(n_r: int = 8, K: float = 1e-3, L: float = 1e-3, ms=None):
    """Eigenphases of the exact step for hbar = 2 pi m / 2^n_r over all m.

    Returns a list of (m, hbar/(2 pi), sorted phases).
    """
    N = 1 << n_r
    ms = range(1, N) if ms is None else ms
    out = []
    for m in ms:
        params = HarperParams(K, L, n_r, int(m), int(m), 1)
        out.append((int(m), m / N, eigenphases(exact_unitary(params)).phases))
    return out
