"""Slice decomposition of a cosine kick with one ancilla qubit.

A block

    M(alpha, U) = H C_U H R H C_{U^-2} H R H C_U H,   R = exp(i alpha/2 sigma_z)

(C_V = V on the register controlled by the ancilla, H on the ancilla) acts
on the ancilla-|0> sector as exp(i alpha cos(p_odd theta)) + O(alpha^2), and
the kick exp(-i k cos(p theta)) is approximated by n_s blocks with
alpha = -k / n_s.  The symmetrized block M(alpha/2, U) M(alpha/2, U^-1)
cancels the second-order term.

For p = 2^a p_odd the kick depends only on the n_r - a low register qubits,
so every controlled operation acts there.  U = exp(i p_odd theta') with
theta' = 2 pi x / 2^(n_r-a) is a product of one controlled phase per qubit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import HarperParams, split_power_of_two
from .statevector import (Gate, GateSequence, QuantumState, apply_qft, apply_sequence,
                          qft_gates)

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class SliceConfig:
    n_s: int = 40
    symmetrized: bool = False

    def __post_init__(self):
        if self.n_s < 1:
            raise ValueError("need at least one slice per kick")


def slice_gate_count(n_r: int, a: int, n_s: int) -> int:
    """Reference elementary-gate count of an n_s-slice kick on n_r - a qubits."""
    if not 0 <= a <= n_r:
        raise ValueError("a must lie in [0, n_r]")
    w = n_r - a
    return 4 + 2 * w + (n_s - 1) * (7 + 2 * w)


# ------------------------------------------------------------ symbolic chains
# A chain is a list of ("H", 0), ("C", s) or ("R", angle) items in time order;
# ("R", angle) is the ancilla rotation Rz(angle) = exp(-i angle sigma_z / 2).

def block_chain(alpha: float, direction: int = 1) -> list:
    """Time-ordered items of M(alpha, U^direction)."""
    s = 1 if direction > 0 else -1
    r = ("R", -alpha)
    return [("H", 0), ("C", s), ("H", 0), r, ("H", 0), ("C", -2 * s), ("H", 0), r,
            ("H", 0), ("C", s), ("H", 0)]


def kick_chain(k: float, n_s: int, symmetrized: bool = False) -> list:
    alpha = -k / n_s
    chain = []
    for _ in range(n_s):
        if symmetrized:
            # M(a/2, U) M(a/2, U^-1): the right factor acts first
            chain += block_chain(alpha / 2, -1) + block_chain(alpha / 2, 1)
        else:
            chain += block_chain(alpha, 1)
    return chain


def simplify_chain(chain: list) -> list:
    """Cancel H H pairs and merge neighbouring controlled powers and rotations."""
    out = []
    for kind, v in chain:
        if kind == "R" and v == 0:
            continue
        if out and out[-1][0] == kind:
            top = out.pop()
            if kind == "H":
                continue
            merged = top[1] + v
            if merged != 0:
                out.append((kind, merged))
            continue
        out.append((kind, v))
    return out


def controlled_phase_gates(ancilla: int, p_odd: int, power: int, width: int) -> list:
    """C_{U^power} for U = exp(i p_odd 2 pi x / 2^width) as controlled phases.

    Phases that are multiples of 2 pi are exact identities and are not emitted.
    """
    gates = []
    mod = 1 << width
    for j in range(width):
        num = (power * p_odd * (1 << j)) % mod
        if num:
            gates.append(Gate.phase((ancilla, j), TWO_PI * num / mod))
    return gates


def chain_to_gates(chain: list, ancilla: int, p_odd: int, width: int) -> list:
    gates = []
    for kind, v in chain:
        if kind == "H":
            gates.append(Gate.hadamard(ancilla))
        elif kind == "R":
            gates.append(Gate.rz(ancilla, v))
        else:
            gates.extend(controlled_phase_gates(ancilla, p_odd, v, width))
    return gates


def _check_odd(p_odd):
    if p_odd % 2 == 0:
        raise ValueError("controlled diagonal needs an odd multiplier; strip powers of two first")


def controlled_diagonal_exp(state: QuantumState, ancilla: int, p_odd: int, power: int,
                            width: int | None = None, disorder=None) -> QuantumState:
    """Apply C_{U^power}, U = exp(i p_odd theta) on the ``width`` low qubits."""
    _check_odd(p_odd)
    if power not in (-2, -1, 1, 2):
        raise ValueError("power must be one of -2, -1, 1, 2")
    width = state.n_r if width is None else width
    return apply_sequence(state, controlled_phase_gates(ancilla, p_odd, power, width), disorder)


def slice_block(state: QuantumState, alpha: float, p_odd: int, direction: int = 1,
                width: int | None = None, disorder=None) -> QuantumState:
    """Apply one block M(alpha, U^direction); the ancilla is left unmeasured."""
    _check_odd(p_odd)
    width = state.n_r if width is None else width
    gates = chain_to_gates(block_chain(alpha, direction), _ancilla(state), p_odd, width)
    return apply_sequence(state, gates, disorder)


def _ancilla(state: QuantumState) -> int:
    if state.ancilla is None:
        raise ValueError("the slice method needs a state with an ancilla qubit")
    return state.ancilla


@lru_cache(maxsize=256)
def slice_kick_sequence(k: float, p: int, n_r: int, n_s: int, symmetrized: bool = False,
                        ancilla: int | None = None) -> GateSequence:
    """Gate sequence of an n_s-slice kick exp(-i k cos(2 pi p x / 2^n_r))."""
    a, p_odd = split_power_of_two(p)
    width = n_r - a
    anc = n_r if ancilla is None else ancilla
    chain = simplify_chain(kick_chain(k, n_s, symmetrized))
    return GateSequence(chain_to_gates(chain, anc, p_odd, width))


# ---------------------------------------------------------------- fast path

_H2 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _rz2(angle):
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def kick_ancilla_matrices(k: float, p: int, n_r: int, n_s: int,
                          symmetrized: bool = False) -> np.ndarray:
    """Per register value x, the 2x2 ancilla operator of the whole kick.

    The register is diagonal throughout, so the kick is block diagonal with
    one 2x2 block per x; returns an array of shape (2^n_r, 2, 2).
    """
    a, p_odd = split_power_of_two(p)
    width = n_r - a
    x = np.arange(1 << n_r) % (1 << width)
    phi = TWO_PI * ((p_odd * x) % (1 << width)) / (1 << width)

    def block(alpha, s):
        def cu(power):
            m = np.zeros((x.size, 2, 2), complex)
            m[:, 0, 0] = 1
            m[:, 1, 1] = np.exp(1j * power * s * phi)
            return m
        hch = lambda power: _H2 @ cu(power) @ _H2
        r = _rz2(-alpha)
        # time order hch(1), r, hch(-2), r, hch(1); matrices compose right to left
        return hch(1) @ r @ hch(-2) @ r @ hch(1)

    alpha = -k / n_s
    if symmetrized:
        one = block(alpha / 2, 1) @ block(alpha / 2, -1)
    else:
        one = block(alpha, 1)
    return np.linalg.matrix_power(one, n_s)


def apply_ancilla_blocks(state: QuantumState, blocks: np.ndarray) -> QuantumState:
    """Apply per-register-value 2x2 ancilla operators (ancilla = qubit n_r)."""
    if state.ancilla != state.n_r or state.n_q != state.n_r + 1:
        raise ValueError("fast path expects the ancilla directly above the register")
    psi = state.columns()
    view = psi.reshape(2, 1 << state.n_r, psi.shape[1])
    new = np.einsum("xab,bxc->axc", blocks, view)
    psi[...] = new.reshape(psi.shape)
    return state


@lru_cache(maxsize=64)
def _cached_blocks(k, p, n_r, n_s, symmetrized):
    return kick_ancilla_matrices(k, p, n_r, n_s, symmetrized)


def slice_kick(state: QuantumState, k: float, p: int, config: SliceConfig,
               disorder=None, fast: bool = True) -> QuantumState:
    """n_s slices of the kick exp(-i k cos(2 pi p x / N_H)) on the register."""
    seq = slice_kick_sequence(float(k), int(p), state.n_r, config.n_s, config.symmetrized,
                              _ancilla(state))
    if fast and (disorder is None or not disorder.is_active) and state.ancilla == state.n_r:
        apply_ancilla_blocks(state, _cached_blocks(float(k), int(p), state.n_r, config.n_s,
                                                   config.symmetrized))
        state.gates_applied += seq.n_g
        return state
    return apply_sequence(state, seq, disorder)


@lru_cache(maxsize=64)
def slice_step_sequence(params: HarperParams, config: SliceConfig) -> GateSequence:
    """Full Floquet period: theta kick, QFT, momentum kick, inverse QFT."""
    n_r = params.n_r
    reg = range(n_r)
    kt = slice_kick_sequence(params.K / params.hbar, params.Q, n_r, config.n_s, config.symmetrized)
    kn = slice_kick_sequence(params.L / params.hbar, params.P, n_r, config.n_s, config.symmetrized)
    return kt + qft_gates(reg) + kn + qft_gates(reg, inverse=True)


def new_slice_state(state_register: np.ndarray) -> QuantumState:
    """Embed register amplitudes (ancilla in |0>) into an n_r + 1 qubit state."""
    amps = np.asarray(state_register, complex)
    n = amps.shape[0]
    n_r = n.bit_length() - 1
    full = np.zeros((2 * n,) + amps.shape[1:], complex)
    full[:n] = amps
    return QuantumState(full, n_r=n_r, ancilla=n_r)


def slice_step(state: QuantumState, params: HarperParams, config: SliceConfig,
               disorder=None, fast: bool = True) -> QuantumState:
    """One period with both kicks done by slices; the ancilla is carried along."""
    if disorder is not None and disorder.is_active:
        return apply_sequence(state, slice_step_sequence(params, config), disorder)
    slice_kick(state, params.K / params.hbar, params.Q, config, fast=fast)
    apply_qft(state, circuit=not fast)
    slice_kick(state, params.L / params.hbar, params.P, config, fast=fast)
    apply_qft(state, inverse=True, circuit=not fast)
    return state
