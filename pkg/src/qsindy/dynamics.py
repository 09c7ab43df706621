"""Benchmark ODE systems, RK4 integration, observation noise, derivative
estimation, and a periodic Burgers solver."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

DIVERGENCE_LIMIT = 1e6


class DivergenceError(RuntimeError):
    pass


class WindowTooLargeError(ValueError):
    pass


class MissingLabelError(KeyError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    name: str
    dimension: int
    rhs: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    initial_condition: tuple[float, ...]
    poly_degree: int
    stlsq_threshold: float
    # (state index, monomial label) -> coefficient
    true_coefficients: Mapping[tuple[int, str], float]
    dt: float = 0.01
    duration: float = 10.0
    noise_scale: float = 1.0

    def __post_init__(self):
        if len(self.initial_condition) != self.dimension:
            raise ValueError(f"{self.name}: initial condition has wrong length")
        out = np.asarray(self.rhs(np.asarray(self.initial_condition, dtype=float)))
        if out.shape != (self.dimension,):
            raise ValueError(f"{self.name}: rhs returns shape {out.shape}")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float

    def __post_init__(self):
        if self.states.ndim != 2 or self.states.shape[0] != self.times.shape[0]:
            raise ValueError("times and states disagree in length")
        if self.states.shape[0] < 10:
            raise ValueError("a trajectory needs at least 10 samples")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory contains NaN or Inf")

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    def to_csv(self, path) -> None:
        d = self.dimension
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i}" for i in range(d)])
            for t, row in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


@dataclass(frozen=True)
class DerivativeEstimate:
    xdot: np.ndarray
    valid_rows: range


# --- the benchmark systems -------------------------------------------------

def _duffing(s):
    x, y = s[..., 0], s[..., 1]
    return np.stack([y, -x - 0.3 * x**3 - 0.1 * y], axis=-1)


def _van_der_pol(s, mu=1.0):
    x, y = s[..., 0], s[..., 1]
    return np.stack([y, mu * (1 - x**2) * y - x], axis=-1)


def _lorenz(s):
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return np.stack([10 * (y - x), x * (28 - z) - y, x * y - 8 / 3 * z], axis=-1)


def _lotka_volterra(s):
    x, y = s[..., 0], s[..., 1]
    return np.stack([2 / 3 * x - 4 / 3 * x * y, x * y - y], axis=-1)


def _cubic(s):
    x, y = s[..., 0], s[..., 1]
    return np.stack([y, -x**3], axis=-1)


def _rossler(s):
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return np.stack([-y - z, x + 0.2 * y, 0.2 + z * (x - 5.7)], axis=-1)


SYSTEMS: dict[str, SystemSpec] = {
    s.name: s
    for s in [
        SystemSpec(
            "duffing", 2, _duffing, (1.0, 0.0), 3, 0.05,
            {(0, "x1"): 1.0, (1, "x0"): -1.0, (1, "x0^3"): -0.3, (1, "x1"): -0.1},
        ),
        SystemSpec(
            "vanderpol", 2, _van_der_pol, (2.0, 0.0), 3, 0.05,
            {(0, "x1"): 1.0, (1, "x0"): -1.0, (1, "x1"): 1.0, (1, "x0^2*x1"): -1.0},
        ),
        SystemSpec(
            "lorenz", 3, _lorenz, (1.0, 1.0, 1.0), 2, 0.1,
            {
                (0, "x0"): -10.0, (0, "x1"): 10.0,
                (1, "x0"): 28.0, (1, "x0*x2"): -1.0, (1, "x1"): -1.0,
                (2, "x0*x1"): 1.0, (2, "x2"): -8 / 3,
            },
            dt=0.002, duration=20.0, noise_scale=10.0,
        ),
        SystemSpec(
            "lotka_volterra", 2, _lotka_volterra, (1.0, 1.0), 2, 0.05,
            {(0, "x0"): 2 / 3, (0, "x0*x1"): -4 / 3, (1, "x0*x1"): 1.0, (1, "x1"): -1.0},
        ),
        SystemSpec(
            "cubic", 2, _cubic, (1.0, 0.0), 3, 0.05,
            {(0, "x1"): 1.0, (1, "x0^3"): -1.0},
        ),
        SystemSpec(
            "rossler", 3, _rossler, (1.0, 1.0, 1.0), 2, 0.1,
            {
                (0, "x1"): -1.0, (0, "x2"): -1.0,
                (1, "x0"): 1.0, (1, "x1"): 0.2,
                (2, "1"): 0.2, (2, "x0*x2"): 1.0, (2, "x2"): -5.7,
            },
            dt=0.002, duration=20.0, noise_scale=10.0,
        ),
    ]
}

ALIASES = {"vdp": "vanderpol", "van_der_pol": "vanderpol", "lv": "lotka_volterra",
           "lotka-volterra": "lotka_volterra", "cubic_oscillator": "cubic"}


def get_system(name: str) -> SystemSpec:
    key = name.lower()
    key = ALIASES.get(key, key)
    try:
        return SYSTEMS[key]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {sorted(SYSTEMS)}") from None


# --- operations ------------------------------------------------------------

def rk4_step(f, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(spec: SystemSpec, dt: float | None = None, n_steps: int | None = None) -> Trajectory:
    """Fixed-step RK4 from the system's initial condition; n_steps + 1 samples."""
    dt = spec.dt if dt is None else dt
    n_steps = spec.n_steps if n_steps is None else n_steps
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n_steps < 10:
        raise ValueError("n_steps must be at least 10")
    X = np.empty((n_steps + 1, spec.dimension))
    x = np.asarray(spec.initial_condition, dtype=float)
    X[0] = x
    for i in range(1, n_steps + 1):
        x = rk4_step(spec.rhs, x, dt)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT:
            raise DivergenceError(f"{spec.name} diverged at step {i} (t = {i * dt:g})")
        X[i] = x
    times = dt * np.arange(n_steps + 1)
    return Trajectory(times, X, dt)


def add_noise(traj: Trajectory, sigma: float, seed: int) -> Trajectory:
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return Trajectory(traj.times, traj.states.copy(), traj.dt)
    rng = np.random.default_rng(seed)
    noisy = traj.states + rng.normal(0.0, sigma, size=traj.states.shape)
    return Trajectory(traj.times, noisy, traj.dt)


def moving_average(X: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; returns the N - window + 1 fully covered rows."""
    if window == 1:
        return X.copy()
    c = np.cumsum(np.vstack([np.zeros((1, X.shape[1])), X]), axis=0)
    return (c[window:] - c[:-window]) / window


def estimate_derivative(traj: Trajectory, smooth_window: int = 5) -> DerivativeEstimate:
    """Moving-average smoothing followed by second-order centered differences.

    Rows within ``smooth_window // 2 + 1`` of either boundary are dropped.
    """
    w = int(smooth_window)
    if w < 1 or w % 2 == 0:
        raise ValueError("smooth_window must be an odd integer >= 1")
    N = traj.states.shape[0]
    h = w // 2
    if N - 2 * (h + 1) < 10:
        raise WindowTooLargeError(f"window {w} leaves fewer than 10 rows out of {N}")
    S = moving_average(traj.states, w)  # S[j] is centred on row j + h
    xdot = (S[2:] - S[:-2]) / (2.0 * traj.dt)  # centred on rows h+1 .. N-h-2
    return DerivativeEstimate(xdot, range(h + 1, N - h - 1))


def assemble_true_xi(spec: SystemSpec, column_labels) -> np.ndarray:
    labels = list(column_labels)
    index = {lab: i for i, lab in enumerate(labels)}
    xi = np.zeros((len(labels), spec.dimension))
    for (dim, lab), val in spec.true_coefficients.items():
        if lab not in index:
            raise MissingLabelError(f"{spec.name} needs library column {lab!r}")
        xi[index[lab], dim] = val
    return xi


# --- Burgers ---------------------------------------------------------------

class InstabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class PdeField:
    grid_x: np.ndarray
    grid_t: np.ndarray
    u: np.ndarray
    u_x: np.ndarray
    u_xx: np.ndarray
    nu: float

    @property
    def dx(self) -> float:
        return float(self.grid_x[1] - self.grid_x[0])


def periodic_derivatives(u: np.ndarray, dx: float) -> tuple[np.ndarray, np.ndarray]:
    """Second-order centred first and second differences along the last axis."""
    up = np.roll(u, -1, axis=-1)
    um = np.roll(u, 1, axis=-1)
    return (up - um) / (2 * dx), (up - 2 * u + um) / dx**2


def gaussian_pulse(x: np.ndarray) -> np.ndarray:
    return np.exp(-((x - np.pi) ** 2) / 0.5)


def solve_burgers(
    nu: float = 0.1,
    n_x: int = 256,
    n_t: int = 201,
    domain_length: float = 2 * np.pi,
    t_final: float = 2.0,
    u0: Callable[[np.ndarray], np.ndarray] | np.ndarray = gaussian_pulse,
    substeps: int = 10,
) -> PdeField:
    """Periodic viscous Burgers, u_t = nu u_xx - u u_x, by method of lines.

    ``n_t`` snapshots (including t = 0) are stored, with ``substeps`` RK4 steps
    between consecutive snapshots.
    """
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    x = domain_length * np.arange(n_x) / n_x
    dx = domain_length / n_x
    u = np.asarray(u0(x) if callable(u0) else u0, dtype=float).copy()
    if u.shape != (n_x,):
        raise ValueError("initial profile has wrong length")
    n_steps = (n_t - 1) * substeps
    dt = t_final / n_steps
    # explicit RK4 diffusion limit is about 2.78 dx^2 / (4 nu); keep a margin
    if dt > 0.5 * dx**2 / (2 * nu):
        raise InstabilityError(f"time step {dt:.3g} too large for dx = {dx:.3g}, nu = {nu}")

    def rhs(v):
        vx, vxx = periodic_derivatives(v, dx)
        return nu * vxx - v * vx

    umax0 = max(np.max(np.abs(u)), 1e-300)
    snaps = np.empty((n_t, n_x))
    snaps[0] = u
    for k in range(1, n_t):
        for _ in range(substeps):
            u = rk4_step(rhs, u, dt)
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > 10 * umax0:
            raise InstabilityError(f"Burgers solution blew up before t = {k * substeps * dt:g}")
        snaps[k] = u
    ux, uxx = periodic_derivatives(snaps, dx)
    t = np.linspace(0.0, t_final, n_t)
    return PdeField(x, t, snaps, ux, uxx, nu)


def burgers_time_derivative(field: PdeField) -> tuple[np.ndarray, range]:
    """Centred time differences of the stored snapshots; drops the end frames."""
    dt = field.grid_t[1] - field.grid_t[0]
    ut = (field.u[2:] - field.u[:-2]) / (2 * dt)
    return ut, range(1, field.u.shape[0] - 1)


def load_trajectory_csv(path) -> Trajectory:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    return Trajectory(t, data[:, 1:], float(t[1] - t[0]))
