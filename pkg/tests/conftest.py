import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def embed_gate(gate, n):
    """Full 2^n matrix of a gate, built entry by entry from bit arithmetic.

    Deliberately shares nothing with the tensordot kernels it checks.
    """
    dim = 2 ** n
    m = gate.local_matrix()
    k = len(gate.targets)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        if any(not (col >> c) & 1 for c in gate.controls):
            out[col, col] = 1.0
            continue
        loc = sum(((col >> t) & 1) << i for i, t in enumerate(gate.targets))
        for r in range(2 ** k):
            row = col
            for i, t in enumerate(gate.targets):
                row = (row & ~(1 << t)) | (((r >> i) & 1) << t)
            out[row, col] += m[r, loc]
    return out


def embed_circuit(circuit):
    u = np.eye(2 ** circuit.n_qubits, dtype=complex)
    for g in circuit.gates:
        u = embed_gate(g, circuit.n_qubits) @ u
    return u


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
