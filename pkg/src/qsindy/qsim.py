"""Exact state-vector and density-matrix simulation for small circuits.

Qubit 0 is the most significant bit of the amplitude index. Rotations use the
half-angle convention ``R_P(theta) = exp(-i theta P / 2)``.

Besides the single-circuit entry points (:func:`run_pure`, :func:`run_noisy`)
there are batched variants that evolve many circuits sharing one gate
structure at once; feature maps use those to evaluate whole trajectories.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

GATE_KINDS = ("H", "RX", "RY", "RZ", "RZZ", "CNOT")
_TWO_QUBIT = ("RZZ", "CNOT")
_PARAMETRIC = ("RX", "RY", "RZ", "RZZ")
MAX_GATES = 64

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
PAULI_MATRICES = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        want = 2 if self.kind in _TWO_QUBIT else 1
        if len(self.qubits) != want:
            raise CircuitError(f"{self.kind} takes {want} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit in {self.qubits}")
        if self.kind in _PARAMETRIC:
            if self.angle is None:
                raise CircuitError(f"{self.kind} needs an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise CircuitError(f"{self.kind} takes no angle")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.n_qubits not in (1, 2, 3, 4):
            raise CircuitError("circuits are limited to 1-4 qubits")
        object.__setattr__(self, "gates", tuple(self.gates))
        if len(self.gates) > MAX_GATES:
            raise CircuitError(f"{len(self.gates)} gates exceeds the limit of {MAX_GATES}")
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits:
                raise CircuitError(f"gate {g} addresses a qubit outside 0..{self.n_qubits - 1}")

    @property
    def structure(self) -> tuple[tuple[str, tuple[int, ...]], ...]:
        return tuple((g.kind, g.qubits) for g in self.gates)


@dataclass(frozen=True)
class PauliString:
    factors: str

    def __post_init__(self):
        f = self.factors.upper()
        if not f or any(c not in "IXYZ" for c in f):
            raise CircuitError(f"bad Pauli string {self.factors!r}")
        object.__setattr__(self, "factors", f)

    @classmethod
    def from_sparse(cls, n_qubits: int, **ops: str) -> "PauliString":
        """``PauliString.from_sparse(2, q0="Z", q1="Z")`` -> ``ZZ``."""
        f = ["I"] * n_qubits
        for key, val in ops.items():
            f[int(key.lstrip("q"))] = val
        return cls("".join(f))

    @property
    def n_qubits(self) -> int:
        return len(self.factors)

    def label(self) -> str:
        parts = [f"{p}{q}" for q, p in enumerate(self.factors) if p != "I"]
        return "".join(parts) or "I"

    def matrix(self) -> np.ndarray:
        m = np.ones((1, 1), dtype=complex)
        for p in self.factors:
            m = np.kron(m, PAULI_MATRICES[p])
        return m


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(np.log2(self.amplitudes.shape[-1]))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class DensityState:
    rho: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(np.log2(self.rho.shape[-1]))

    def check(self, tol: float = 1e-10, psd_tol: float = 1e-9) -> None:
        """Raise if the matrix is not a valid density operator."""
        rho = self.rho
        herm = np.max(np.abs(rho - rho.conj().T))
        tr = np.trace(rho)
        evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
        if herm > tol or abs(tr - 1) > tol or evals.min() < -psd_tol:
            raise CircuitError(
                f"invalid density matrix: hermiticity {herm:.3g}, trace {tr:.12g}, "
                f"min eigenvalue {evals.min():.3g}"
            )


State = Union[PureState, DensityState]


# --- gate kernels ----------------------------------------------------------

def _single_qubit_matrices(kind: str, angles: np.ndarray) -> np.ndarray:
    """Return a (B, 2, 2) stack for a one-qubit gate over B angles."""
    b = angles.shape[0]
    if kind == "H":
        return np.broadcast_to(_H, (b, 2, 2))
    c = np.cos(angles / 2)
    s = np.sin(angles / 2)
    out = np.zeros((b, 2, 2), dtype=complex)
    if kind == "RX":
        out[:, 0, 0] = c
        out[:, 1, 1] = c
        out[:, 0, 1] = -1j * s
        out[:, 1, 0] = -1j * s
    elif kind == "RY":
        out[:, 0, 0] = c
        out[:, 1, 1] = c
        out[:, 0, 1] = -s
        out[:, 1, 0] = s
    elif kind == "RZ":
        out[:, 0, 0] = np.exp(-0.5j * angles)
        out[:, 1, 1] = np.exp(0.5j * angles)
    else:
        raise CircuitError(kind)
    return out


def _two_qubit_matrices(kind: str, angles: np.ndarray) -> np.ndarray:
    """(B, 4, 4) stack; basis index = 2*bit(first qubit) + bit(second qubit)."""
    b = angles.shape[0]
    if kind == "CNOT":
        m = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
        return np.broadcast_to(m, (b, 4, 4))
    if kind == "RZZ":
        parity = np.array([1, -1, -1, 1])
        out = np.zeros((b, 4, 4), dtype=complex)
        idx = np.arange(4)
        out[:, idx, idx] = np.exp(-0.5j * np.outer(angles, parity))
        return out
    raise CircuitError(kind)


def _apply(psi: np.ndarray, mats: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """Apply per-batch gate matrices to the leading tensor legs of ``psi``.

    ``psi`` has shape (B, 2, ..., 2, *rest): n qubit legs after the batch axis,
    followed by any trailing axes (used for the column index of a density matrix).
    """
    k = len(qubits)
    b = psi.shape[0]
    legs = [1 + q for q in qubits]
    moved = np.moveaxis(psi, legs, list(range(1, 1 + k)))
    shape = moved.shape
    flat = moved.reshape(b, 2**k, -1)
    flat = np.matmul(mats, flat)
    moved = flat.reshape(shape)
    return np.moveaxis(moved, list(range(1, 1 + k)), legs)


def _gate_mats(kind: str, angles: np.ndarray) -> np.ndarray:
    if kind in _TWO_QUBIT:
        return _two_qubit_matrices(kind, angles)
    return _single_qubit_matrices(kind, angles)


def _stack_angles(circuits: Sequence[Circuit]) -> tuple[tuple, np.ndarray]:
    if not circuits:
        raise CircuitError("no circuits given")
    structure = circuits[0].structure
    n = circuits[0].n_qubits
    for c in circuits[1:]:
        if c.n_qubits != n or c.structure != structure:
            raise CircuitError("batched circuits must share one gate structure")
    angles = np.array(
        [[g.angle if g.angle is not None else 0.0 for g in c.gates] for c in circuits],
        dtype=float,
    ).reshape(len(circuits), len(structure))
    return structure, angles


# --- pure-state path -------------------------------------------------------

def _zero_states(b: int, n: int) -> np.ndarray:
    psi = np.zeros((b, 2**n), dtype=complex)
    psi[:, 0] = 1.0
    return psi


def evolve_pure_batch(circuits: Sequence[Circuit]) -> np.ndarray:
    """Amplitudes of every circuit applied to |0...0>, shape (B, 2**n)."""
    structure, angles = _stack_angles(circuits)
    n = circuits[0].n_qubits
    b = len(circuits)
    psi = _zero_states(b, n).reshape((b,) + (2,) * n)
    for j, (kind, qubits) in enumerate(structure):
        psi = _apply(psi, _gate_mats(kind, angles[:, j]), qubits, n)
    return psi.reshape(b, 2**n)


def run_pure(circuit: Circuit) -> PureState:
    return PureState(evolve_pure_batch([circuit])[0])


# --- density-matrix path ---------------------------------------------------

def _depolarize(rho: np.ndarray, qubit: int, n: int, p: float) -> np.ndarray:
    """Single-qubit depolarizing channel on a (B, 2**n, 2**n) stack.

    Uses (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z), written as
    (1 - 4p/3) rho + (4p/3) Tr_q(rho) (x) I/2.
    """
    b = rho.shape[0]
    t = rho.reshape((b,) + (2,) * (2 * n))
    row, col = 1 + qubit, 1 + n + qubit
    reduced = np.trace(t, axis1=row, axis2=col)
    mixed = np.expand_dims(np.expand_dims(reduced, row), col)
    eye = np.eye(2).reshape([2 if ax in (row, col) else 1 for ax in range(2 * n + 1)])
    mixed = mixed * eye / 2
    out = (1 - 4 * p / 3) * t + (4 * p / 3) * mixed
    return out.reshape(rho.shape)


def depolarize(state: DensityState, qubit: int, p: float) -> DensityState:
    """Apply one single-qubit depolarizing channel of strength ``p``."""
    n = state.n_qubits
    return DensityState(_depolarize(state.rho[None], qubit, n, p)[0])


def check_density_batch(rho: np.ndarray, tol: float = 1e-10, psd_tol: float = 1e-9) -> None:
    """Raise unless every matrix in the stack is Hermitian, unit-trace and PSD."""
    herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, 1, 2))))
    tr = np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1))
    lo = np.min(np.linalg.eigvalsh(rho))
    if herm > tol or tr > tol or lo < -psd_tol:
        raise CircuitError(
            f"density invariants violated: hermiticity {herm:.3g}, trace error {tr:.3g}, "
            f"min eigenvalue {lo:.3g}"
        )


def evolve_noisy_batch(circuits: Sequence[Circuit], p: float, check: bool = False) -> np.ndarray:
    """Density matrices, shape (B, 2**n, 2**n), with a depolarizing channel of
    strength ``p`` on each touched qubit after every gate.

    With ``check`` the density-operator invariants are asserted after every gate.
    """
    if not 0.0 <= p <= 1.0:
        raise CircuitError(f"depolarizing strength must lie in [0, 1], got {p}")
    structure, angles = _stack_angles(circuits)
    n = circuits[0].n_qubits
    b = len(circuits)
    dim = 2**n
    rho = np.zeros((b, dim, dim), dtype=complex)
    rho[:, 0, 0] = 1.0
    for j, (kind, qubits) in enumerate(structure):
        mats = _gate_mats(kind, angles[:, j])
        # U rho: gate acts on row legs
        t = rho.reshape((b,) + (2,) * n + (dim,))
        t = _apply(t, mats, qubits, n).reshape(b, dim, dim)
        # (U rho) U^dagger = (U (U rho)^dagger)^dagger
        t = np.conj(np.swapaxes(t, 1, 2)).reshape((b,) + (2,) * n + (dim,))
        t = _apply(t, mats, qubits, n).reshape(b, dim, dim)
        rho = np.conj(np.swapaxes(t, 1, 2))
        if p > 0:
            for q in qubits:
                rho = _depolarize(rho, q, n, p)
        if check:
            check_density_batch(rho)
    return rho


def run_noisy(circuit: Circuit, p: float) -> DensityState:
    return DensityState(evolve_noisy_batch([circuit], p)[0])


# --- observables -----------------------------------------------------------

def _pauli_on_batch(psi: np.ndarray, obs: PauliString, n: int) -> np.ndarray:
    b = psi.shape[0]
    t = psi.reshape((b,) + (2,) * n + psi.shape[2:])
    for q, label in enumerate(obs.factors):
        if label != "I":
            mats = np.broadcast_to(PAULI_MATRICES[label], (b, 2, 2))
            t = _apply(t, mats, (q,), n)
    return t.reshape(psi.shape)


def expectations_pure(amps: np.ndarray, observables: Sequence[PauliString]) -> np.ndarray:
    """<psi|O|psi> for a (B, 2**n) amplitude stack; returns (B, n_obs)."""
    n = int(np.log2(amps.shape[1]))
    out = np.empty((amps.shape[0], len(observables)))
    for k, obs in enumerate(observables):
        _check_width(obs, n)
        val = np.einsum("bi,bi->b", amps.conj(), _pauli_on_batch(amps, obs, n))
        out[:, k] = _real(val)
    return out


def expectations_density(rho: np.ndarray, observables: Sequence[PauliString]) -> np.ndarray:
    """Tr(rho O) for a (B, 2**n, 2**n) stack; returns (B, n_obs)."""
    n = int(np.log2(rho.shape[1]))
    out = np.empty((rho.shape[0], len(observables)))
    for k, obs in enumerate(observables):
        _check_width(obs, n)
        o_rho = _pauli_on_batch(rho, obs, n)
        out[:, k] = _real(np.trace(o_rho, axis1=1, axis2=2))
    return out


def expectation(state: State, obs: PauliString) -> float:
    if isinstance(state, PureState):
        return float(expectations_pure(state.amplitudes[None], [obs])[0, 0])
    return float(expectations_density(state.rho[None], [obs])[0, 0])


def _check_width(obs: PauliString, n: int) -> None:
    if obs.n_qubits != n:
        raise CircuitError(f"observable {obs.factors} has {obs.n_qubits} factors for a {n}-qubit state")


def _real(vals: np.ndarray) -> np.ndarray:
    if vals.size and np.max(np.abs(vals.imag)) > 1e-10:
        raise CircuitError(f"expectation has imaginary part {np.max(np.abs(vals.imag)):.3g}")
    return np.clip(vals.real, -1.0, 1.0)
