"""Quantum feature maps: data-encoding circuits and their Pauli expectations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qsim import (
    Circuit,
    Gate,
    PauliString,
    evolve_noisy_batch,
    evolve_pure_batch,
    expectations_density,
    expectations_pure,
)

MAP_KINDS = ("ZZ2", "ZZ3", "IQP", "REUPLOAD")

# Frozen variational angles for the re-uploading map, indexed
# [layer][qubit][RZ, RY, RX]. Generated once with
# np.random.default_rng(42).uniform(-pi, pi, size=(3, 2, 3)).
REUPLOAD_PARAMS = np.array([
    [[1.721316619099806, -0.38403808930179695, 2.2531371815723604],
     [1.2400999002927886, -2.5498589250729733, 2.988423371570267]],
    [[1.6407891386670412, 1.7973950398246918, -2.3366309591134007],
     [-0.311734346044068, -0.8117999558004185, 2.6814435075521947]],
    [[0.9039312087064584, 2.0279710262248587, -0.35553907452309863],
     [-1.7138096556494131, 0.3429663317734204, -2.740617007691522]],
])
REUPLOAD_PARAMS.setflags(write=False)

_OBS_2Q = ("ZI", "IZ", "XI", "IX", "ZZ", "XX")
_OBS_3Q = ("ZII", "IZI", "IIZ", "XII", "IXI", "IIX", "ZZI", "IZZ", "ZIZ")
_RING = ((0, 1), (1, 2), (2, 0))


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureMapSpec:
    kind: str
    rescale: bool = False
    fixed_params: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in MAP_KINDS:
            raise ValueError(f"unknown feature map {self.kind!r}; choose from {MAP_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "REUPLOAD" and self.fixed_params is None:
            object.__setattr__(self, "fixed_params", REUPLOAD_PARAMS)
        if kind != "REUPLOAD" and self.fixed_params is not None:
            raise ValueError("fixed_params only apply to the re-uploading map")
        if self.fixed_params is not None and np.shape(self.fixed_params) != (3, 2, 3):
            raise ValueError("re-uploading parameters must have shape (3, 2, 3)")

    @property
    def n_qubits(self) -> int:
        return 3 if self.kind == "ZZ3" else 2

    @property
    def arity(self) -> int:
        return self.n_qubits

    @property
    def observables(self) -> tuple[PauliString, ...]:
        labels = _OBS_3Q if self.kind == "ZZ3" else _OBS_2Q
        return tuple(PauliString(s) for s in labels)

    @property
    def column_labels(self) -> list[str]:
        return [f"q:{o.label()}" for o in self.observables]


def feature_map(name: str, rescale: bool | None = None) -> FeatureMapSpec:
    """Look up a map by config name (``zz2``, ``zz3``, ``iqp``, ``reupload``).

    ZZ3 rescales its input by default; the 2-qubit maps consume raw coordinates.
    """
    kind = name.upper().replace("-", "").replace("_", "")
    if kind == "ZZ":
        kind = "ZZ2"
    if kind == "REUP":
        kind = "REUPLOAD"
    if rescale is None:
        rescale = kind == "ZZ3"
    return FeatureMapSpec(kind, rescale=rescale)


@dataclass(frozen=True)
class QuantumFeatures:
    Q: np.ndarray
    column_labels: list[str]
    map_kind: str
    scale: float = 1.0


def build_circuit(spec: FeatureMapSpec, x) -> Circuit:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != spec.arity:
        raise ArityError(f"{spec.kind} expects {spec.arity} inputs, got {x.size}")
    x = [float(v) for v in x]
    g: list[Gate] = []
    if spec.kind == "ZZ2":
        g += [Gate("RX", (0,), x[0]), Gate("RX", (1,), x[1])]
        g += [Gate("CNOT", (0, 1)), Gate("RZ", (1,), x[0] * x[1]), Gate("CNOT", (0, 1))]
        g += [Gate("RY", (0,), x[0]), Gate("RY", (1,), x[1])]
    elif spec.kind == "ZZ3":
        g += [Gate("RX", (q,), x[q]) for q in range(3)]
        g += [Gate("RZZ", (i, j), x[i] * x[j]) for i, j in _RING]
        g += [Gate("RY", (q,), x[q]) for q in range(3)]
    elif spec.kind == "IQP":
        for _ in range(2):
            g += [Gate("H", (0,)), Gate("H", (1,))]
            g += [Gate("RZ", (0,), x[0]), Gate("RZ", (1,), x[1])]
            g.append(Gate("RZZ", (0, 1), x[0] * x[1]))
    else:
        params = spec.fixed_params
        for layer in range(3):
            g += [Gate("RX", (q,), x[q]) for q in range(2)]
            for q in range(2):
                rz, ry, rx = params[layer][q]
                g += [Gate("RZ", (q,), rz), Gate("RY", (q,), ry), Gate("RX", (q,), rx)]
            g.append(Gate("CNOT", (0, 1)))
    return Circuit(spec.n_qubits, tuple(g))


def rescale_factor(X: np.ndarray) -> float:
    """pi / (2 max|X|), so the largest encoded angle is exactly pi/2."""
    m = float(np.max(np.abs(X)))
    if m == 0:
        return 1.0
    return np.pi / (2.0 * m)


def evaluate(spec: FeatureMapSpec, X, p_noise: float = 0.0, check_states: bool = False) -> QuantumFeatures:
    """Quantum feature matrix: one row of observable expectations per row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.arity:
        raise ArityError(f"{spec.kind} expects {spec.arity} columns, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature-map input contains NaN or Inf")
    scale = rescale_factor(X) if spec.rescale else 1.0
    Xs = X * scale if spec.rescale else X
    circuits = [build_circuit(spec, row) for row in Xs]
    if p_noise == 0:
        Q = expectations_pure(evolve_pure_batch(circuits), spec.observables)
    else:
        Q = expectations_density(evolve_noisy_batch(circuits, p_noise, check_states), spec.observables)
    return QuantumFeatures(Q, spec.column_labels, spec.kind, scale)
