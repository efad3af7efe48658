"""Chebyshev-polynomial cosine kick compiled into multi-controlled phase gates.

cos(theta) = f(x) with f(x) = cos(pi (x + 1)), x = theta/pi - 1 in [-1, 1).
f is replaced by its degree-d Chebyshev truncation P(x), re-expanded in
powers of theta, P = sum_r beta_r theta^r.  With theta = (2 pi / 2^w) y and
y = sum_j 2^j y_j on w qubits, every power theta^r is a polynomial in the
bits y_j; since y_j^2 = y_j each monomial is a product over a *set* of bits,
i.e. a phase gate controlled by that set.  Equal sets from all powers merge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from numpy.polynomial import polynomial as nppoly

from .model import HarperParams, split_power_of_two
from .statevector import (Gate, GateSequence, QuantumState, apply_diagonal, apply_qft,
                          apply_sequence, qft_gates)

M_SAMPLES = 64
DEFAULT_DEGREE = 6


def target_function(x):
    return np.cos(np.pi * (np.asarray(x) + 1))


@dataclass
class ChebyshevApprox:
    degree: int
    c: np.ndarray
    b: np.ndarray
    M_samples: int
    truncation_estimate: float
    tail_bound: float

    def __call__(self, x):
        """P(x) in the power basis."""
        return nppoly.polyval(x, self.b)

    def theta_coefficients(self) -> np.ndarray:
        """beta_r with P(theta/pi - 1) = sum_r beta_r theta^r."""
        shifted = np.zeros(1)
        basis = np.array([1.0])
        lin = np.array([-1.0, 1.0 / np.pi])
        for coef in self.b:
            shifted = nppoly.polyadd(shifted, coef * basis)
            basis = nppoly.polymul(basis, lin)
        out = np.zeros(self.degree + 1)
        out[: len(shifted)] = shifted
        return out


def chebyshev_coefficients(M_samples: int = M_SAMPLES, d: int = DEFAULT_DEGREE) -> ChebyshevApprox:
    """c_j = (2/M) sum_k f(x_k) cos(pi j (k + 1/2) / M) at Chebyshev nodes x_k."""
    if M_samples <= d + 1:
        raise ValueError("need more samples than the degree")
    k = np.arange(M_samples)
    nodes = np.pi * (k + 0.5) / M_samples
    fx = target_function(np.cos(nodes))
    j = np.arange(M_samples)
    c_all = 2.0 / M_samples * np.cos(np.outer(j, nodes)) @ fx
    c = c_all[: d + 1]
    series = c.copy()
    series[0] -= c[0] / 2
    b = npcheb.cheb2poly(series)
    # |c_{d+1}| is the usual error estimate; it vanishes for odd d+1 by parity,
    # so the summed tail is kept as the bound that always holds
    tail = float(np.sum(np.abs(c_all[d + 1:])))
    return ChebyshevApprox(d, c, b, M_samples, float(abs(c_all[d + 1])), tail)


def wrap_phase(phi):
    """Reduce to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(phi, float), 2 * np.pi)


@lru_cache(maxsize=None)
def bit_power_weights(width: int, r: int) -> dict:
    """Multilinear expansion of (sum_j 2^j y_j)^r / 2^(width r) over bit sets.

    Returns {frozenset S: exact weight}; only |S| <= r appear.
    """
    out = {}
    for size in range(0, min(r, width) + 1):
        for S in combinations(range(width), size):
            total = 0
            for tsize in range(size + 1):
                sign = -1 if (size - tsize) % 2 else 1
                for T in combinations(S, tsize):
                    total += sign * sum(1 << j for j in T) ** r
            if total:
                out[frozenset(S)] = Fraction(total, 1 << (width * r))
    return out


@dataclass
class PhaseGateSet:
    """Commuting multi-controlled phases on ``width`` low register qubits.

    ``entries`` maps a control set (tuple of qubits) to its phase in (-pi, pi];
    the empty set is a global phase.  ``multiplier`` is the odd factor the
    register is multiplied by before the phases (and divided by after).
    """

    width: int
    entries: dict = field(default_factory=dict)
    threshold: float = 0.0
    multiplier: int = 1

    @property
    def n_g(self) -> int:
        return self.gate_sequence().n_g

    def n_phase_gates(self) -> int:
        return sum(1 for s in self.entries if s)

    def gates(self) -> list:
        return [Gate.phase(s, phi) for s, phi in self.entries.items()]

    def gate_sequence(self) -> GateSequence:
        gates = self.gates()
        if self.multiplier != 1:
            mul = Gate.multiply(self.multiplier, 0, self.width)
            gates = [mul] + gates + [mul.inverse()]
        return GateSequence(gates)

    def diagonal(self) -> np.ndarray:
        """Total phase per basis value y of the (multiplied) register."""
        y = np.arange(1 << self.width)
        tot = np.zeros(y.size)
        for s, phi in self.entries.items():
            mask = sum(1 << q for q in s)
            tot += phi * ((y & mask) == mask)
        return tot

    def register_phases(self) -> np.ndarray:
        """Phase per register value x, including the odd multiplication."""
        x = np.arange(1 << self.width)
        return self.diagonal()[(self.multiplier * x) % (1 << self.width)]

    def pruned(self, threshold: float) -> "PhaseGateSet":
        if threshold < 0:
            raise ValueError("threshold must be non-negative")
        kept = {s: phi for s, phi in self.entries.items() if not s or abs(phi) >= threshold}
        return PhaseGateSet(self.width, kept, threshold, self.multiplier)


def raw_phase_terms(k: float, width: int, approx: ChebyshevApprox) -> list:
    """Unmerged A_r terms: list of (r, control set, phase) before merging."""
    beta = approx.theta_coefficients()
    terms = []
    for r, br in enumerate(beta):
        if br == 0:
            continue
        scale = -k * br * (2 * np.pi) ** r
        for S, wgt in bit_power_weights(width, r).items():
            terms.append((r, tuple(sorted(S)), scale * float(wgt)))
    return terms


def build_phase_gate_set(k: float, n_r: int, p: int, approx: ChebyshevApprox,
                         threshold: float = 0.0) -> PhaseGateSet:
    """Merged phase gates for exp(-i k P(theta/pi - 1)), theta = 2 pi p x / 2^n_r."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    a, p_odd = split_power_of_two(p)
    width = n_r - a
    merged = {}
    for _, S, phi in raw_phase_terms(k, width, approx):
        merged[S] = merged.get(S, 0.0) + phi
    entries = {S: float(wrap_phase(phi)) for S, phi in merged.items()}
    return PhaseGateSet(width, entries, 0.0, p_odd).pruned(threshold)


def max_entries(width: int, d: int) -> int:
    return sum(comb(width, r) for r in range(min(width, d) + 1))


def gate_count_curve(gate_set: PhaseGateSet, thresholds) -> np.ndarray:
    """Surviving phase-gate count for each threshold (non-increasing)."""
    mags = np.array([abs(phi) for s, phi in gate_set.entries.items() if s])
    return np.array([(mags >= t).sum() for t in thresholds])


def multiply_mod_power_of_two(state: QuantumState, m_odd: int, width: int | None = None,
                              disorder=None) -> QuantumState:
    """|x> -> |m_odd x mod 2^width> on the low ``width`` register qubits."""
    if m_odd % 2 == 0:
        raise ValueError("multiplier must be odd")
    width = state.n_r if width is None else width
    return apply_sequence(state, [Gate.multiply(m_odd, 0, width)], disorder)


@lru_cache(maxsize=256)
def _cached_set(k, n_r, p, degree, M_samples, threshold):
    return build_phase_gate_set(k, n_r, p, chebyshev_coefficients(M_samples, degree), threshold)


def kick_gate_set(k, n_r, p, approx: ChebyshevApprox, threshold=0.0) -> PhaseGateSet:
    return _cached_set(float(k), int(n_r), int(p), approx.degree, approx.M_samples, float(threshold))


def chebyshev_kick(state: QuantumState, k: float, p: int, approx: ChebyshevApprox,
                   threshold: float = 0.0, disorder=None) -> QuantumState:
    """exp(-i k P(theta/pi - 1)) on the register, conjugated by the odd multiplier."""
    gset = kick_gate_set(k, state.n_r, p, approx, threshold)
    seq = gset.gate_sequence()
    if disorder is not None and disorder.is_active:
        return apply_sequence(state, seq, disorder)
    ph = np.exp(1j * gset.register_phases())
    apply_diagonal(state, np.tile(ph, state.dim // ph.size))
    state.gates_applied += seq.n_g
    return state


@lru_cache(maxsize=64)
def _step_sequence(params: HarperParams, degree, M_samples, threshold):
    n_r = params.n_r
    approx = chebyshev_coefficients(M_samples, degree)
    kt = kick_gate_set(params.K / params.hbar, n_r, params.Q, approx, threshold).gate_sequence()
    kn = kick_gate_set(params.L / params.hbar, n_r, params.P, approx, threshold).gate_sequence()
    return kt + qft_gates(range(n_r)) + kn + qft_gates(range(n_r), inverse=True)


def chebyshev_step_sequence(params: HarperParams, approx: ChebyshevApprox,
                            threshold: float = 0.0) -> GateSequence:
    return _step_sequence(params, approx.degree, approx.M_samples, float(threshold))


def chebyshev_step(state: QuantumState, params: HarperParams, approx: ChebyshevApprox,
                   threshold: float = 0.0, disorder=None) -> QuantumState:
    """Kick in theta, QFT, kick in n, inverse QFT, both kicks by Chebyshev phases."""
    if disorder is not None and disorder.is_active:
        return apply_sequence(state, chebyshev_step_sequence(params, approx, threshold), disorder)
    chebyshev_kick(state, params.K / params.hbar, params.Q, approx, threshold)
    apply_qft(state)
    chebyshev_kick(state, params.L / params.hbar, params.P, approx, threshold)
    apply_qft(state, inverse=True)
    return state
