import numpy as np
import pytest

from qsindy.qsim import PAULI_MATRICES, Circuit, Gate

_I = np.eye(2, dtype=complex)
_P0 = np.diag([1, 0]).astype(complex)
_P1 = np.diag([0, 1]).astype(complex)


def _kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _rot(P, theta):
    return np.cos(theta / 2) * np.eye(P.shape[0]) - 1j * np.sin(theta / 2) * P


def dense_gate(g: Gate, n: int) -> np.ndarray:
    """Full 2^n x 2^n unitary for one gate, built by explicit Kronecker products."""
    def embed(op, q):
        return _kron_all([op if k == q else _I for k in range(n)])

    if g.kind == "H":
        return embed(np.array([[1, 1], [1, -1]]) / np.sqrt(2), g.qubits[0])
    if g.kind in ("RX", "RY", "RZ"):
        return embed(_rot(PAULI_MATRICES[g.kind[1]], g.angle), g.qubits[0])
    a, b = g.qubits
    if g.kind == "RZZ":
        zz = _kron_all([PAULI_MATRICES["Z"] if k in (a, b) else _I for k in range(n)])
        return _rot(zz, g.angle)
    # CNOT: |0><0|_a x I + |1><1|_a x X_b
    m0 = _kron_all([_P0 if k == a else _I for k in range(n)])
    m1 = _kron_all([_P1 if k == a else (PAULI_MATRICES["X"] if k == b else _I) for k in range(n)])
    return m0 + m1


def dense_unitary(c: Circuit) -> np.ndarray:
    U = np.eye(2**c.n_qubits, dtype=complex)
    for g in c.gates:
        U = dense_gate(g, c.n_qubits) @ U
    return U


def dense_expectation(c: Circuit, pauli_matrix: np.ndarray) -> float:
    psi = dense_unitary(c)[:, 0]
    return float(np.real(psi.conj() @ pauli_matrix @ psi))


def random_circuit(rng, n=None, max_gates=12) -> Circuit:
    n = n or int(rng.integers(2, 4))
    gates = []
    for _ in range(int(rng.integers(1, max_gates + 1))):
        kind = rng.choice(["H", "RX", "RY", "RZ", "RZZ", "CNOT"])
        if kind in ("RZZ", "CNOT"):
            qs = tuple(int(q) for q in rng.choice(n, 2, replace=False))
        else:
            qs = (int(rng.integers(n)),)
        angle = float(rng.uniform(-np.pi, np.pi)) if kind not in ("H", "CNOT") else None
        gates.append(Gate(str(kind), qs, angle))
    return Circuit(n, tuple(gates))


def all_paulis(n):
    from itertools import product

    from qsindy.qsim import PauliString
    return [PauliString("".join(p)) for p in product("IXYZ", repeat=n)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def dense_noisy_rho(c: Circuit, p: float) -> np.ndarray:
    """Density-matrix oracle: dense unitary per gate, then Kraus-form
    depolarizing on each touched qubit."""
    n = c.n_qubits
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1
    for g in c.gates:
        U = dense_gate(g, n)
        rho = U @ rho @ U.conj().T
        for q in g.qubits:
            out = (1 - p) * rho
            for P in "XYZ":
                K = _kron_all([PAULI_MATRICES[P] if k == q else _I for k in range(n)])
                out = out + p / 3 * K @ rho @ K
            rho = out
    return rho


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
