"""Kicked Harper model: parameters, exact Floquet step and the classical map.

Quantum map on N_H = 2^n_r states with hbar = 2 pi m / N_H:

    U = exp(-i L cos(I) / hbar) exp(-i K cos(theta) / hbar)

On a torus of P x Q cells (m = P Q) the grids are theta_j = 2 pi Q j / N_H and
I_n = 2 pi P n / N_H, so that the Fourier kernel between them is the plain
DFT exp(2 pi i j n / N_H).  The cylinder is the case Q = 1, P = m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .statevector import QuantumState, apply_diagonal, apply_qft, new_basis_state, qft_gate_count

GOLDEN_HBAR = (13 - math.sqrt(5)) / 82
EXACT_GATE_CONSTANT = 16


class HbarFraction(NamedTuple):
    m: int
    a: int
    m_odd: int


def split_power_of_two(p: int) -> tuple[int, int]:
    """p = 2^a * p_odd."""
    if p <= 0:
        raise ValueError("need a positive integer")
    a = (p & -p).bit_length() - 1
    return a, p >> a


def nearest_hbar(n_r: int, target: float) -> HbarFraction:
    """Nearest fraction m / 2^n_r to hbar/(2 pi) = target (ties rounded up)."""
    if not 0 < target < 1:
        raise ValueError("hbar/(2 pi) must lie in (0, 1)")
    m = math.floor(target * 2 ** n_r + 0.5)
    if m == 0:
        raise ValueError(f"hbar/(2 pi)={target} rounds to zero on {n_r} qubits")
    if m >= 2 ** n_r:
        raise ValueError(f"hbar/(2 pi)={target} rounds to one on {n_r} qubits")
    a, m_odd = split_power_of_two(m)
    return HbarFraction(m, a, m_odd)


@dataclass(frozen=True)
class HarperParams:
    K: float
    L: float
    n_r: int
    m: int
    P: int
    Q: int = 1

    def __post_init__(self):
        if self.n_r < 1:
            raise ValueError("n_r must be positive")
        if not 1 <= self.m < self.N_H:
            raise ValueError(f"m={self.m} must satisfy 1 <= m < N_H={self.N_H}")
        if self.P * self.Q != self.m:
            raise ValueError(f"P*Q={self.P * self.Q} must equal m={self.m}")

    @classmethod
    def cylinder(cls, K, L, n_r, hbar_over_2pi=GOLDEN_HBAR):
        frac = nearest_hbar(n_r, hbar_over_2pi)
        return cls(float(K), float(L), int(n_r), frac.m, frac.m, 1)

    @classmethod
    def torus(cls, K, L, n_r, cells=8):
        return cls(float(K), float(L), int(n_r), cells * cells, cells, cells)

    @property
    def N_H(self) -> int:
        return 1 << self.n_r

    @property
    def hbar(self) -> float:
        return 2 * math.pi * self.m / self.N_H

    @property
    def geometry(self) -> str:
        return "cylinder" if self.Q == 1 else "torus"

    def theta_grid(self) -> np.ndarray:
        return 2 * np.pi * ((self.Q * np.arange(self.N_H)) % self.N_H) / self.N_H

    def momentum_grid(self) -> np.ndarray:
        return 2 * np.pi * ((self.P * np.arange(self.N_H)) % self.N_H) / self.N_H

    def with_kicks(self, K, L) -> "HarperParams":
        return HarperParams(float(K), float(L), self.n_r, self.m, self.P, self.Q)


def fixed_point(x, n_p):
    """Round to n_p fractional bits; ``n_p=None`` keeps full precision."""
    if n_p is None:
        return x
    scale = 2.0 ** n_p
    return np.round(x * scale) / scale


def _cos_multiple(p: int, N: int) -> np.ndarray:
    # cos(2 pi p j / N) with the integer product reduced exactly before the float step
    return np.cos(2 * np.pi * ((p * np.arange(N)) % N) / N)


def kick_phases(k: float, p: int, N: int, n_p=None) -> np.ndarray:
    """Diagonal exp(-i k [cos(2 pi p j / N)]_{n_p}) on the register."""
    return np.exp(-1j * k * fixed_point(_cos_multiple(p, N), n_p))


def _apply_register_diagonal(state: QuantumState, d: np.ndarray):
    reps = state.dim // d.shape[0]
    apply_diagonal(state, np.tile(d, reps))


def exact_kick_theta(state: QuantumState, params: HarperParams, n_p=None) -> QuantumState:
    """exp(-i K [cos theta]_{n_p} / hbar) in the theta representation."""
    _apply_register_diagonal(state, kick_phases(params.K / params.hbar, params.Q, params.N_H, n_p))
    return state


def exact_kick_momentum(state: QuantumState, params: HarperParams, n_p=None) -> QuantumState:
    """exp(-i L [cos I_n]_{n_p} / hbar) in the momentum representation."""
    _apply_register_diagonal(state, kick_phases(params.L / params.hbar, params.P, params.N_H, n_p))
    return state


def exact_step(state: QuantumState, params: HarperParams, n_p=None) -> QuantumState:
    """One Floquet period: kick in theta, QFT, kick in n, inverse QFT.

    ``n_p=None`` is the split-operator oracle; an integer ``n_p`` reproduces the
    fixed-point cosine register of the exact circuit.
    """
    exact_kick_theta(state, params, n_p)
    apply_qft(state)
    exact_kick_momentum(state, params, n_p)
    apply_qft(state, inverse=True)
    return state


def momentum_state(n_r: int, n: int = 0, ancilla: bool = False) -> QuantumState:
    """|n> of the momentum basis written in the theta representation the steps act on.

    For n = 0 this is the uniform superposition, i.e. n_r Hadamards on |0>.
    With ``ancilla`` an extra qubit n_r in |0> is added for the slice method.
    """
    n_q = n_r + (1 if ancilla else 0)
    state = new_basis_state(n_q, n, n_r, n_r if ancilla else None)
    apply_qft(state, inverse=True)
    state.gates_applied = 0
    return state


def exact_gate_count(n_r: int, n_p: int) -> int:
    """Modeled gates per step of the exact algorithm.

    Two cosine evaluations by fixed-point arithmetic (c3 n_r^2 n_p with
    c3 = EXACT_GATE_CONSTANT), two QFTs and 2 n_p controlled phases.
    """
    if n_p < n_r:
        raise ValueError("n_p must be at least n_r")
    return EXACT_GATE_CONSTANT * n_r * n_r * n_p + 2 * qft_gate_count(n_r) + 2 * n_p


# ---------------------------------------------------------------- classical map

@dataclass
class ClassicalPoint:
    I: float
    theta: float


def classical_map_step(I, theta, K, L, theta_period=2 * np.pi, I_period=None):
    """I' = I + K sin(theta); theta' = theta - L sin(I'); works on arrays."""
    I_new = I + K * np.sin(theta)
    th_new = np.mod(theta - L * np.sin(I_new), theta_period)
    if I_period is not None:
        I_new = np.mod(I_new, I_period)
    return I_new, th_new


def classical_point_step(point: ClassicalPoint, K, L, params: HarperParams | None = None):
    tp = 2 * np.pi * (params.Q if params else 1)
    ip = 2 * np.pi * params.P if params else None
    I, th = classical_map_step(point.I, point.theta, K, L, tp, ip)
    return ClassicalPoint(float(I), float(th))


@njit(cache=True)
def _evolve_points(I, theta, t, K, L, tp, ip):
    for k in range(I.shape[0]):
        a = I[k]
        b = theta[k]
        for _ in range(t):
            a = a + K * np.sin(b)
            b = b - L * np.sin(a)
        I[k] = a % ip
        theta[k] = b % tp


def gaussian_cloud(n_points, I0, theta0, sigma, seed=0):
    rng = np.random.default_rng(seed)
    return I0 + sigma * rng.standard_normal(n_points), theta0 + sigma * rng.standard_normal(n_points)


def classical_ensemble_evolve(I, theta, t, K, L, P=8, Q=8, grid=(256, 256)):
    """Advance all points t steps and histogram them on the P x Q cell torus.

    Returns density[theta_bin, I_bin] normalized to unit sum.
    """
    I = np.array(I, dtype=float)
    theta = np.array(theta, dtype=float)
    tp, ip = 2 * np.pi * Q, 2 * np.pi * P
    _evolve_points(I, theta, int(t), float(K), float(L), tp, ip)
    hist, _, _ = np.histogram2d(np.mod(theta, tp), np.mod(I, ip), bins=grid,
                                range=[[0, tp], [0, ip]])
    return hist / hist.sum()


def web_initial_cloud(n_points=10 ** 6, cells=8, seed=0):
    """Gaussian cloud half a cell above the torus centre (a separatrix crossing)."""
    sigma = math.sqrt(2 * math.pi / 2 ** 25)
    centre = math.pi * cells
    return gaussian_cloud(n_points, centre + math.pi, centre, sigma, seed)
