"""Dense state vectors, the elementary gate vocabulary and the QFT circuit.

Basis index bit ``q`` is qubit ``q``; qubit 0 is the least significant bit.
The Harper register occupies qubits ``0..n_r-1``; an optional ancilla sits
above it.  Gates act in place on ``QuantumState.amplitudes`` (which may be a
single column of shape ``(2**n_q,)`` or a batch of shape ``(2**n_q, B)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as kern

HADAMARD = "H"
ZROT = "Rz"
PHASE = "Phase"
XX = "XX"
SWAP = "Swap"
MULTIPLY = "Mul"

_KIND_CODES = {
    HADAMARD: kern.KIND_H,
    ZROT: kern.KIND_RZ,
    PHASE: kern.KIND_PHASE,
    XX: kern.KIND_XX,
    SWAP: kern.KIND_SWAP,
    MULTIPLY: kern.KIND_MUL,
}


def multiply_cost(width: int) -> int:
    """Modeled elementary-gate cost of one odd multiplication on ``width`` qubits.

    A shift-and-add multiplier built from controlled adders uses ``width``
    controlled additions of ``width`` two-qubit gates each.
    """
    return width * width


@dataclass(frozen=True)
class Gate:
    """One elementary gate.

    kind      one of H, Rz, Phase, XX, Swap, Mul
    qubits    target qubits (for Phase: the full control set; for Mul:
              ``(start, width)`` of the register field)
    angle     rotation angle / phase
    factor    odd multiplier for Mul
    """

    kind: str
    qubits: tuple = ()
    angle: float = 0.0
    factor: int = 1

    @staticmethod
    def hadamard(q):
        return Gate(HADAMARD, (int(q),))

    @staticmethod
    def rz(q, angle):
        """exp(-i angle sigma_z / 2) on qubit q."""
        return Gate(ZROT, (int(q),), float(angle))

    @staticmethod
    def phase(controls, angle):
        """Multiply by e^{i angle} every basis state with all ``controls`` set.

        An empty control set is a global phase.
        """
        return Gate(PHASE, tuple(sorted(int(c) for c in controls)), float(angle))

    @staticmethod
    def xx(q1, q2, angle):
        """exp(-i angle X_q1 X_q2)."""
        return Gate(XX, (int(q1), int(q2)), float(angle))

    @staticmethod
    def swap(q1, q2):
        return Gate(SWAP, (int(q1), int(q2)))

    @staticmethod
    def multiply(factor, start, width):
        """|x> -> |factor*x mod 2^width> on qubits start..start+width-1."""
        if factor % 2 == 0:
            raise ValueError("multiplier must be odd to be invertible mod 2^k")
        return Gate(MULTIPLY, (int(start), int(width)), 0.0, int(factor) % (1 << width))

    @property
    def cost(self) -> int:
        if self.kind == MULTIPLY:
            return multiply_cost(self.qubits[1])
        if self.kind == PHASE and not self.qubits:
            return 0
        return 1

    def touched(self) -> tuple:
        if self.kind == MULTIPLY:
            start, width = self.qubits
            return tuple(range(start, start + width))
        return self.qubits

    def inverse(self) -> "Gate":
        if self.kind in (HADAMARD, SWAP):
            return self
        if self.kind == MULTIPLY:
            width = self.qubits[1]
            return Gate(MULTIPLY, self.qubits, 0.0, pow(self.factor, -1, 1 << width))
        return Gate(self.kind, self.qubits, -self.angle, self.factor)


@dataclass
class GateSequence:
    """Ordered gate list; ``n_g`` is the total elementary-gate cost."""

    gates: list = field(default_factory=list)

    def __post_init__(self):
        self.gates = list(self.gates)
        self._encoded = None

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def append(self, gate: Gate):
        self.gates.append(gate)
        self._encoded = None

    def extend(self, gates: Iterable[Gate]):
        self.gates.extend(gates)
        self._encoded = None

    def __add__(self, other: "GateSequence") -> "GateSequence":
        return GateSequence(self.gates + list(other.gates))

    @property
    def n_g(self) -> int:
        return sum(g.cost for g in self.gates)

    def inverse(self) -> "GateSequence":
        return GateSequence([g.inverse() for g in reversed(self.gates)])

    def encoded(self):
        """Flat arrays consumed by the compiled runner (cached)."""
        if self._encoded is None:
            n = len(self.gates)
            kinds = np.empty(n, np.int64)
            qa = np.zeros(n, np.int64)
            qb = np.zeros(n, np.int64)
            masks = np.zeros(n, np.int64)
            angles = np.zeros(n, np.float64)
            ivals = np.ones(n, np.int64)
            costs = np.empty(n, np.int64)
            for i, g in enumerate(self.gates):
                kinds[i] = _KIND_CODES[g.kind]
                costs[i] = g.cost
                angles[i] = g.angle
                ivals[i] = g.factor
                if g.kind == PHASE:
                    m = 0
                    for c in g.qubits:
                        m |= 1 << c
                    masks[i] = m
                else:
                    qa[i] = g.qubits[0]
                    if len(g.qubits) > 1:
                        qb[i] = g.qubits[1]
            self._encoded = (kinds, qa, qb, masks, angles, ivals, costs)
        return self._encoded


class QuantumState:
    """Amplitudes over ``2**n_q`` basis states.

    ``n_r`` is the size of the Harper register (qubits ``0..n_r-1``);
    ``ancilla`` is the index of the optional extra qubit.  ``gates_applied``
    accumulates the elementary-gate cost of everything applied so far.
    """

    def __init__(self, amplitudes, n_r: int | None = None, ancilla: int | None = None):
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        dim = amps.shape[0]
        n_q = dim.bit_length() - 1
        if dim != 1 << n_q:
            raise ValueError(f"amplitude length {dim} is not a power of two")
        if amps.ndim not in (1, 2):
            raise ValueError("amplitudes must be a vector or a (dim, B) batch")
        self.amplitudes = amps
        self.n_q = n_q
        self.n_r = n_q if n_r is None else int(n_r)
        self.ancilla = ancilla
        if self.n_r > n_q or (ancilla is not None and not 0 <= ancilla < n_q):
            raise ValueError("register layout exceeds the qubit count")
        self.gates_applied = 0

    @property
    def dim(self) -> int:
        return 1 << self.n_q

    @property
    def system_qubits(self) -> range:
        return range(self.n_r)

    def columns(self) -> np.ndarray:
        """2D view (dim, B) used by the kernels."""
        a = self.amplitudes
        return a.reshape(a.shape[0], -1)

    def copy(self) -> "QuantumState":
        s = QuantumState(self.amplitudes.copy(), self.n_r, self.ancilla)
        s.gates_applied = self.gates_applied
        return s

    def norm(self):
        return np.sqrt(np.sum(np.abs(self.amplitudes) ** 2, axis=0))

    def __repr__(self):
        return f"QuantumState(n_q={self.n_q}, n_r={self.n_r}, ancilla={self.ancilla})"


def new_basis_state(n_q: int, index: int, n_r: int | None = None,
                    ancilla: int | None = None) -> QuantumState:
    if n_q < 0 or not 0 <= index < (1 << n_q):
        raise ValueError(f"basis index {index} out of range for {n_q} qubits")
    amps = np.zeros(1 << n_q, np.complex128)
    amps[index] = 1.0
    return QuantumState(amps, n_r, ancilla)


def _check_gate(state: QuantumState, gate: Gate):
    for q in gate.touched():
        if not 0 <= q < state.n_q:
            raise ValueError(f"gate {gate.kind} touches qubit {q} outside 0..{state.n_q - 1}")
    if gate.kind in (XX, SWAP) and gate.qubits[0] == gate.qubits[1]:
        raise ValueError(f"{gate.kind} needs two distinct qubits")


_NO_EDGES = np.zeros(0, np.int64)
_NO_J = np.zeros(0, np.float64)


def apply_sequence(state: QuantumState, sequence, disorder=None) -> QuantumState:
    """Apply gates in order; with ``disorder`` the static channel follows every gate."""
    if not isinstance(sequence, GateSequence):
        sequence = GateSequence(sequence)
    for g in sequence.gates:
        _check_gate(state, g)
    psi = state.columns()
    enc = sequence.encoded()
    if disorder is not None and disorder.is_active:
        if disorder.n_q != state.n_q:
            raise ValueError("disorder realization and state have different qubit counts")
        zhalf, ea, eb, ej = disorder.kernel_args()
        if psi.shape[1] == 1:
            re = np.ascontiguousarray(psi[:, 0].real)
            im = np.ascontiguousarray(psi[:, 0].imag)
            kern.run_sequence_split(re, im, *enc, zhalf.real.copy(), zhalf.imag.copy(), ea, eb, ej)
            psi[:, 0] = re + 1j * im
        else:
            kern.run_sequence(psi, *enc, True, zhalf, ea, eb, ej)
    else:
        kern.run_sequence(psi, *enc, False, np.ones(1, np.complex128), _NO_EDGES, _NO_EDGES, _NO_J)
    state.gates_applied += sequence.n_g
    return state


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    return apply_sequence(state, GateSequence([gate]))


def apply_diagonal(state: QuantumState, phases: np.ndarray) -> QuantumState:
    """Multiply amplitudes by a full-length diagonal (not an elementary gate)."""
    kern.diagonal(state.columns(), np.ascontiguousarray(phases, np.complex128))
    return state


def qft_gate_count(n: int) -> int:
    return n * (n + 1) // 2 + n // 2


def qft_gates(register: Sequence[int], inverse: bool = False) -> GateSequence:
    """QFT circuit on ``register`` (listed from least to most significant).

    Forward kernel: |j> -> 2^{-n/2} sum_k exp(+2 pi i j k / 2^n) |k>.
    """
    reg = list(register)
    n = len(reg)
    gates = []
    for t in range(n - 1, -1, -1):
        gates.append(Gate.hadamard(reg[t]))
        for c in range(t - 1, -1, -1):
            gates.append(Gate.phase((reg[c], reg[t]), 2 * np.pi / 2 ** (t - c + 1)))
    for i in range(n // 2):
        gates.append(Gate.swap(reg[i], reg[n - 1 - i]))
    seq = GateSequence(gates)
    return seq.inverse() if inverse else seq


def _fft_register(state: QuantumState, n: int, inverse: bool):
    # register = qubits 0..n-1, the fastest-varying index
    psi = state.columns()
    nb = psi.shape[1]
    view = psi.reshape(state.dim >> n, 1 << n, nb)
    out = np.fft.fft(view, axis=1, norm="ortho") if inverse else np.fft.ifft(view, axis=1, norm="ortho")
    psi[...] = out.reshape(psi.shape)


def apply_qft(state: QuantumState, register: Sequence[int] | None = None,
              inverse: bool = False, disorder=None, circuit: bool = False) -> QuantumState:
    """Fourier transform over ``register`` (default: the Harper register).

    The noiseless transform on the low register uses an FFT (tested equal to
    the gate circuit); with ``disorder`` or ``circuit=True`` the gate circuit
    runs gate by gate.  Either way the circuit's gate count is recorded.
    """
    reg = list(range(state.n_r)) if register is None else list(register)
    for q in reg:
        if not 0 <= q < state.n_q:
            raise ValueError(f"register qubit {q} outside the state")
    active = disorder is not None and disorder.is_active
    if not active and not circuit and reg == list(range(len(reg))):
        _fft_register(state, len(reg), inverse)
        state.gates_applied += qft_gate_count(len(reg))
        return state
    return apply_sequence(state, qft_gates(reg, inverse), disorder)


def inner_product(a: QuantumState, b: QuantumState) -> complex:
    if a.amplitudes.shape != b.amplitudes.shape:
        raise ValueError("states have different sizes")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
