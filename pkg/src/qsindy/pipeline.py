"""End-to-end fitting: trajectory -> derivative -> libraries -> STLSQ."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics
from .dynamics import SystemSpec, Trajectory
from .feature_maps import FeatureMapSpec, evaluate, feature_map
from .libraries import (
    QUANTUM,
    FeatureLibrary,
    concat,
    from_matrix,
    median_bandwidth,
    orthogonalize,
    polynomial_features,
    rbf_features,
    select_landmarks,
)
from .regression import SindyModel, stlsq

METHODS = ("vanilla", "naive_q", "orth_q", "rbf")
DEFAULT_WINDOW = 5


@dataclass
class Problem:
    """Everything a fit needs for one noisy realisation of one system."""
    system: SystemSpec
    X: np.ndarray  # rows aligned with xdot
    xdot: np.ndarray
    P: FeatureLibrary
    Q: FeatureLibrary | None = None

    @property
    def xi_true(self) -> np.ndarray:
        return dynamics.assemble_true_xi(self.system, self.P.labels)


def _as_system(system) -> SystemSpec:
    return system if isinstance(system, SystemSpec) else dynamics.get_system(system)


def default_map(system) -> str:
    return "zz3" if _as_system(system).dimension == 3 else "zz2"


def _as_map(fmap) -> FeatureMapSpec:
    return fmap if isinstance(fmap, FeatureMapSpec) else feature_map(fmap)


_TRAJ_CACHE: dict[tuple, Trajectory] = {}


def clean_trajectory(system) -> Trajectory:
    spec = _as_system(system)
    key = (spec.name, spec.dt, spec.duration)
    if key not in _TRAJ_CACHE:
        _TRAJ_CACHE[key] = dynamics.integrate(spec)
    return _TRAJ_CACHE[key]


def quantum_library(fmap, X, p_noise: float = 0.0, check_states: bool = False) -> FeatureLibrary:
    feats = evaluate(_as_map(fmap), X, p_noise, check_states)
    return from_matrix(feats.Q, feats.column_labels, QUANTUM)


def build_problem(system, sigma: float = 0.0, seed: int = 0, fmap=None,
                  p_noise: float = 0.0, window: int = DEFAULT_WINDOW,
                  check_states: bool = False) -> Problem:
    spec = _as_system(system)
    traj = dynamics.add_noise(clean_trajectory(spec), sigma, seed)
    der = dynamics.estimate_derivative(traj, window)
    X = traj.states[der.valid_rows.start:der.valid_rows.stop]
    P = polynomial_features(X, spec.poly_degree)
    Q = quantum_library(fmap, X, p_noise, check_states) if fmap is not None else None
    return Problem(spec, X, der.xdot, P, Q)


def clean_problem(system, fmap=None, window: int = DEFAULT_WINDOW) -> Problem:
    return build_problem(system, 0.0, 0, fmap, 0.0, window)


def design_matrix(prob: Problem, method: str, rbf: tuple[int, float] | None = None) -> FeatureLibrary:
    """Candidate library for ``method``; ``rbf`` = (landmark count, gamma multiplier)."""
    if method == "vanilla":
        return prob.P
    if method == "naive_q":
        return concat(prob.P, prob.Q)
    if method == "orth_q":
        q_perp = orthogonalize(prob.Q.matrix, prob.P.matrix).q_perp
        return concat(prob.P, from_matrix(q_perp, prob.Q.labels, QUANTUM))
    if method == "rbf":
        n_land, mult = rbf or (12, 1.0)
        gamma = mult * median_bandwidth(prob.X)
        R = rbf_features(prob.X, select_landmarks(prob.X, n_land), gamma)
        return concat(prob.P, R)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def fit(prob: Problem, method: str, lam: float | None = None, rbf=None) -> SindyModel:
    lib = design_matrix(prob, method, rbf)
    lam = prob.system.stlsq_threshold if lam is None else lam
    return stlsq(lib.matrix, prob.xdot, lam, labels=lib.labels)


def orthogonalized_qsindy(X, dt: float, degree: int, fmap, lam: float,
                          window: int = DEFAULT_WINDOW, p_noise: float = 0.0) -> SindyModel:
    """The whole orthogonalized pipeline on a raw sampled trajectory."""
    traj = Trajectory(dt * np.arange(len(X)), np.asarray(X, dtype=float), dt)
    der = dynamics.estimate_derivative(traj, window)
    Xv = traj.states[der.valid_rows.start:der.valid_rows.stop]
    P = polynomial_features(Xv, degree)
    Q = quantum_library(fmap, Xv, p_noise)
    q_perp = orthogonalize(Q.matrix, P.matrix).q_perp
    lib = concat(P, from_matrix(q_perp, Q.labels, QUANTUM))
    return stlsq(lib.matrix, der.xdot, lam, labels=lib.labels)
