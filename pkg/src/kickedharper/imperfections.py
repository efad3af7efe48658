"""Static imperfections: a fixed random spin-chain Hamiltonian acting between gates.

H1 = sum_i (Delta0 + delta_i) Z_i + sum_i J_i X_i X_{i+1}   (circular chain)

with delta_i, J_i uniform in [-eps/2, eps/2] (tau_g = 1, so eps = delta = J).
After every elementary gate the state evolves for one gate time tau_g under
H1, approximated by the Strang split exp(-iHz/2) exp(-iHxx) exp(-iHz/2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kern
from .statevector import QuantumState, apply_sequence


@dataclass
class StaticDisorder:
    n_q: int
    delta: np.ndarray
    coupling: np.ndarray
    eps: float
    delta0: float = 0.0
    tau_g: float = 1.0
    seed: int | None = None
    realization: int = 0

    def __post_init__(self):
        self.delta = np.asarray(self.delta, float)
        self.coupling = np.asarray(self.coupling, float)
        if self.delta.shape != (self.n_q,) or self.coupling.shape != (self.n_q,):
            raise ValueError("need one detuning and one coupling per qubit")
        self._args = None

    @property
    def is_active(self) -> bool:
        return bool(self.delta0 != 0.0 or np.any(self.delta) or np.any(self.coupling))

    def edges(self):
        """(i, i+1 mod n_q) pairs of the circular XX chain."""
        a = np.arange(self.n_q, dtype=np.int64)
        return a, (a + 1) % self.n_q

    def z_phases(self, fraction: float = 0.5) -> np.ndarray:
        """Diagonal of exp(-i fraction tau_g Hz) over all 2^n_q basis states."""
        idx = np.arange(1 << self.n_q)
        energy = np.zeros(idx.shape)
        for i in range(self.n_q):
            z = 1.0 - 2.0 * ((idx >> i) & 1)
            energy += (self.delta0 + self.delta[i]) * z
        return np.exp(-1j * fraction * self.tau_g * energy)

    def kernel_args(self):
        if self._args is None:
            a, b = self.edges()
            self._args = (self.z_phases(0.5), a, b, self.coupling * self.tau_g)
        return self._args


def sample_disorder(n_q: int, eps: float, seed: int = 0, realization: int = 0,
                    delta0: float = 0.0, tau_g: float = 1.0) -> StaticDisorder:
    """Draw one realization; deterministic in (seed, realization)."""
    if eps < 0:
        raise ValueError("imperfection strength must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(realization),)))
    width = eps / tau_g
    delta = rng.uniform(-width / 2, width / 2, n_q)
    coupling = rng.uniform(-width / 2, width / 2, n_q)
    if eps == 0:
        delta[:] = 0.0
        coupling[:] = 0.0
    return StaticDisorder(n_q, delta, coupling, float(eps), delta0, tau_g, seed, realization)


def apply_imperfection(state: QuantumState, disorder: StaticDisorder) -> QuantumState:
    """One gate-time of free evolution under H1 (second-order split)."""
    if disorder.n_q != state.n_q:
        raise ValueError("disorder realization and state have different qubit counts")
    kern.noise_step(state.columns(), *disorder.kernel_args())
    return state


def noisy_apply(state: QuantumState, sequence, disorder: StaticDisorder | None) -> QuantumState:
    """Gate, imperfection, gate, imperfection, ... over the whole sequence."""
    return apply_sequence(state, sequence, disorder)
