import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, dim, batch=None):
    shape = (dim,) if batch is None else (dim, batch)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=0)


def dense_op(n_q, op, qubits):
    """Full 2^n_q matrix of a small operator on ``qubits`` (listed low to high)."""
    dim = 1 << n_q
    k = len(qubits)
    out = np.zeros((dim, dim), complex)
    for col in range(dim):
        sub = 0
        for i, q in enumerate(qubits):
            sub |= ((col >> q) & 1) << i
        for row_sub in range(1 << k):
            amp = op[row_sub, sub]
            if amp == 0:
                continue
            row = col
            for i, q in enumerate(qubits):
                row = (row & ~(1 << q)) | (((row_sub >> i) & 1) << q)
            out[row, col] += amp
    return out


# -------------------------------------------------------- acceptance report

ACCEPTANCE = {}


def report(number: int, title: str, passed: bool, detail: str):
    """Record one acceptance criterion; printed again in the terminal summary."""
    ACCEPTANCE[number] = (title, passed, detail)
    print(f"AC{number} {'PASS' if passed else 'FAIL'} {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"AC{n:<3}{'PASS' if ok else 'FAIL'}  {title}: {detail}")
