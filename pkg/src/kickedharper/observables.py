"""Measured quantities: momentum distributions, IPR, moments, localization
length, fidelity, Husimi phase-space densities and threshold predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import HarperParams
from .statevector import QuantumState, apply_qft

FIT_FLOOR = 1e-14

# threshold / time-scale constants
C_H = 0.007
HUSIMI_ALPHA = 1.0
HUSIMI_BETA = 1.23
C1_OVER_SQRT_L = 0.3
C2 = 7.4


class FitError(RuntimeError):
    """Not enough usable points to fit an exponential profile."""


def momentum_distribution(state, n_r: int | None = None) -> np.ndarray:
    """p(n) summed over any qubits above the register (e.g. the slice ancilla).

    Accepts a QuantumState or a raw amplitude array; batches give (N_H, B).
    """
    if isinstance(state, QuantumState):
        amps, n_r = state.amplitudes, state.n_r
    else:
        amps = np.asarray(state)
        n_r = (amps.shape[0].bit_length() - 1) if n_r is None else n_r
    prob = np.abs(amps) ** 2
    N = 1 << n_r
    return prob.reshape((prob.shape[0] // N, N) + prob.shape[1:]).sum(axis=0)


def momentum_probabilities(state: QuantumState) -> np.ndarray:
    """p(n) of a state held in the theta representation (noiseless final QFT)."""
    c = state.copy()
    apply_qft(c)
    return momentum_distribution(c)


def ipr(p) -> float:
    """xi = 1 / sum p^2."""
    p = np.asarray(p, float)
    s = np.sum(p ** 2, axis=0)
    if np.any(s == 0):
        raise ValueError("IPR of an empty distribution")
    return 1.0 / s


def second_moment(p, periodic: bool = False) -> float:
    """sum p (n - <n>)^2; ``periodic`` centres on the maximum with wrapped offsets."""
    p = np.asarray(p, float)
    N = p.shape[0]
    n = np.arange(N)
    if periodic:
        c = int(np.argmax(p))
        n = (n - c + N // 2) % N - N // 2
    mean = np.dot(p, n)
    return float(np.dot(p, (n - mean) ** 2))


def fit_localization_length(p, w: int | None = None, floor: float = FIT_FLOOR) -> float:
    """Localization length l from p(n) ~ exp(-2 |n - n_max| / l).

    Each flank of the window [n_max - w, n_max + w] (periodic in n) gets a
    least-squares line of log p against |n - n_max|; bins below ``floor``
    are skipped and l = -2 / (mean of the two slopes).
    """
    p = np.asarray(p, float)
    N = p.size
    p = p / p.sum()
    if w is None:
        w = max(8, int(round(4 * ipr(p))))
    w = min(int(w), N // 2 - 1)
    c = int(np.argmax(p))
    d = np.arange(0, w + 1)
    slopes = []
    used = 0
    for side in (1, -1):
        vals = p[(c + side * d) % N]
        ok = vals > floor
        if ok.sum() >= 2:
            slopes.append(np.polyfit(d[ok], np.log(vals[ok]), 1)[0])
            used += ok.sum()
    if used < 4 or not slopes:
        raise FitError("fewer than 4 usable points for the exponential fit")
    slope = float(np.mean(slopes))
    if slope >= -1e-12:
        raise FitError("profile does not decay away from its maximum")
    return -2.0 / slope


def fidelity(a, b) -> float:
    va = a.amplitudes if isinstance(a, QuantumState) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, QuantumState) else np.asarray(b)
    if va.shape != vb.shape:
        raise ValueError("states have different sizes")
    return float(min(1.0, abs(np.vdot(va, vb)) ** 2))


# ------------------------------------------------------------------- Husimi

def husimi_gaussian(params: HarperParams) -> tuple[np.ndarray, np.ndarray]:
    """Offsets m' in (-N/2, N/2] and the truncated gaussian weights."""
    N = params.N_H
    off = np.arange(-N // 2 + 1, N // 2 + 1)
    g = np.exp(-math.pi * params.P * off.astype(float) ** 2 / (N * params.Q))
    return off, g


def husimi(psi_n, params: HarperParams, chunk: int = 256) -> np.ndarray:
    """h[Theta, n] on the full N_H x N_H grid from momentum amplitudes psi(n).

    Theta = N_H theta / (2 pi Q) is the integer position index.  For each n
    the sum over m is an FFT of the windowed, gaussian-weighted amplitudes.
    """
    psi = np.asarray(psi_n, complex)
    N = params.N_H
    if psi.shape != (N,):
        raise ValueError("need N_H momentum amplitudes")
    off, g = husimi_gaussian(params)
    pref = math.sqrt(2 * params.P / (params.Q * N ** 3))
    col = np.mod(off, N)                  # position of offset m' in the FFT input
    h = np.empty((N, N))
    for start in range(0, N, chunk):
        n = np.arange(start, min(N, start + chunk))
        W = np.zeros((n.size, N), complex)
        W[:, col] = psi[(n[:, None] + off[None, :]) % N] * g[None, :]
        S = np.fft.ifft(W, axis=1) * N     # sum_j W_j e^{+2 pi i j Theta / N}
        h[:, start:start + n.size] = (pref * np.abs(S) ** 2).T
    return h


def husimi_total(params: HarperParams) -> float:
    """Grid sum of h for any normalized state: pref N sum g^2."""
    _, g = husimi_gaussian(params)
    N = params.N_H
    return math.sqrt(2 * params.P / (params.Q * N ** 3)) * N * float(np.sum(g ** 2))


def downsample(grid: np.ndarray, G: int) -> np.ndarray:
    """Sum G x G blocks of a square grid whose side is a multiple of G."""
    N = grid.shape[0]
    if N % G:
        raise ValueError("grid side must be a multiple of the target size")
    f = N // G
    return grid.reshape(G, f, G, f).sum(axis=(1, 3))


def coherent_state(params: HarperParams, theta_index: float, n0: float) -> np.ndarray:
    """Gaussian packet in momentum representation centred at (Theta0, n0)."""
    N = params.N_H
    n = np.arange(N)
    d = (n - n0 + N / 2) % N - N / 2
    psi = np.exp(-math.pi * params.P * d ** 2 / (N * params.Q)) * np.exp(-2j * math.pi * n * theta_index / N)
    return psi / np.linalg.norm(psi)


def coarse_grain(p, k: int) -> np.ndarray:
    """Probabilities of the 2^k outcomes of measuring the k most significant qubits."""
    p = np.asarray(p, float)
    n_r = p.size.bit_length() - 1
    if not 0 <= k <= n_r:
        raise ValueError("k must lie in [0, n_r]")
    return p.reshape(1 << k, 1 << (n_r - k)).sum(axis=1)


def husimi_error(h_eps, h0, mask=None) -> float:
    """<|h_eps - h0|> / <h0> over the masked cells."""
    h_eps = np.asarray(h_eps, float)
    h0 = np.asarray(h0, float)
    if mask is None:
        mask = np.ones(h0.shape, bool)
    mask = np.asarray(mask, bool)
    if not mask.any():
        raise ValueError("empty mask")
    return float(np.mean(np.abs(h_eps - h0)[mask]) / np.mean(h0[mask]))


def density_mask(density: np.ndarray) -> np.ndarray:
    """Cells above the median of the positive values of a density grid."""
    pos = density[density > 0]
    if pos.size == 0:
        raise ValueError("density has no occupied cells")
    return density > np.median(pos)


# -------------------------------------------------------------- predictions

@dataclass
class ScalingPrediction:
    regime: str
    eps_c: float
    t_h: float
    V_typ: float
    sigma: float
    Gamma: float
    Delta_c: float
    Delta_n: float


def husimi_time(eps, n_q, C_h=C_H, alpha=HUSIMI_ALPHA, beta=HUSIMI_BETA):
    return C_h / (eps ** alpha * n_q ** beta)


def predict(regime: str, n_g: float, n_q: int, eps: float, l: float | None = None,
            N: int | None = None, C1: float | None = None, C2_const: float = C2) -> ScalingPrediction:
    """Threshold and time-scale formulas.

    localized:   eps_c = C1 / (n_g sqrt(n_q) sqrt(l));  with C1 unset, C1/sqrt(l) = 0.3
    delocalized: eps_c = C2 / (n_g sqrt(n_q) sqrt(N)), N = 2^n_q by default
    V_typ = eps n_g sqrt(n_q) / sqrt(l or N), sigma = eps n_g sqrt(n_q),
    Gamma = 2 pi V_typ^2 / Delta_c with Delta_c = 1/l or 1/N, Delta_n = 1/N.
    """
    if min(n_g, n_q) <= 0 or eps < 0:
        raise ValueError("need positive n_g, n_q and non-negative eps")
    N = (1 << n_q) if N is None else N
    root = n_g * math.sqrt(n_q)
    if regime == "localized":
        if C1 is None:
            eps_c = C1_OVER_SQRT_L / root
        elif l is None:
            raise ValueError("a localized threshold with explicit C1 needs l")
        else:
            eps_c = C1 / (root * math.sqrt(l))
        size = math.nan if l is None else l
    elif regime == "delocalized":
        eps_c = C2_const / (root * math.sqrt(N))
        size = N
    else:
        raise ValueError("regime must be 'localized' or 'delocalized'")
    V = eps * root / math.sqrt(size)
    Delta_c = 1.0 / size
    return ScalingPrediction(regime, eps_c, husimi_time(eps, n_q) if eps > 0 else math.inf,
                             V, eps * root, 2 * math.pi * V ** 2 / Delta_c, Delta_c, 1.0 / N)
