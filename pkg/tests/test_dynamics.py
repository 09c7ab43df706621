import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsindy import dynamics
from qsindy.dynamics import (
    SYSTEMS,
    DivergenceError,
    MissingLabelError,
    SystemSpec,
    Trajectory,
    WindowTooLargeError,
    add_noise,
    assemble_true_xi,
    estimate_derivative,
    get_system,
    integrate,
    solve_burgers,
)
from qsindy.libraries import polynomial_features


def _traj(f, dt=0.01, n=400):
    t = dt * np.arange(n)
    return Trajectory(t, np.atleast_2d(f(t)).T.copy(), dt)


def test_zero_field_constant():
    spec = SystemSpec("zero", 2, lambda s: np.zeros_like(s), (1.0, 0.0), 1, 0.1, {})
    traj = integrate(spec, dt=0.37, n_steps=20)
    assert traj.states.shape == (21, 2)
    assert np.all(traj.states == [1.0, 0.0])


def test_cubic_energy_conserved():
    X = integrate(get_system("cubic"), dt=0.01, n_steps=5000).states
    E = X[:, 1] ** 2 / 2 + X[:, 0] ** 4 / 4
    assert np.max(np.abs(E - E[0])) / abs(E[0]) < 1e-6


def test_lorenz_bounded():
    X = integrate(get_system("lorenz"), dt=0.002, n_steps=10000).states
    assert np.all(np.abs(X[:, :2]) < 30)
    assert np.all((X[:, 2] > 0) & (X[:, 2] < 60))
    assert get_system("lorenz").initial_condition == (1.0, 1.0, 1.0)


def test_divergence_guard():
    spec = SystemSpec("blowup", 1, lambda s: s**2, (1.0,), 2, 0.1, {})
    with pytest.raises(DivergenceError):
        integrate(spec, dt=0.01, n_steps=500)


def test_rk4_order():
    spec = get_system("cubic")
    T = 2.0
    ref = integrate(spec, dt=0.1 / 16, n_steps=int(T / (0.1 / 16))).states[-1]
    e1 = np.linalg.norm(integrate(spec, dt=0.1, n_steps=20).states[-1] - ref)
    e2 = np.linalg.norm(integrate(spec, dt=0.05, n_steps=40).states[-1] - ref)
    assert 12 <= e1 / e2 <= 20


def test_add_noise():
    traj = integrate(get_system("duffing"))
    same = add_noise(traj, 0.0, 3)
    np.testing.assert_array_equal(same.states, traj.states)
    big = Trajectory(np.arange(10000) * 0.01, np.zeros((10000, 2)), 0.01)
    noisy = add_noise(big, 0.05, 1)
    assert abs(noisy.states.std() - 0.05) / 0.05 < 0.03
    a, b = add_noise(traj, 0.02, 7), add_noise(traj, 0.02, 7)
    assert a.states.tobytes() == b.states.tobytes()
    np.testing.assert_array_equal(a.times, traj.times)
    with pytest.raises(ValueError):
        add_noise(traj, -1, 0)


@pytest.mark.parametrize("w", [1, 3, 5, 11])
def test_derivative_linear_ramp(w):
    d = estimate_derivative(_traj(lambda t: 3 + t), w)
    np.testing.assert_allclose(d.xdot, 1.0, atol=1e-10)
    assert d.valid_rows == range(w // 2 + 1, 400 - w // 2 - 1)
    assert d.xdot.shape[0] == len(d.valid_rows)


def test_derivative_quadratic():
    traj = _traj(lambda t: t**2)
    d = estimate_derivative(traj, 1)
    np.testing.assert_allclose(d.xdot[:, 0], 2 * traj.times[d.valid_rows.start:d.valid_rows.stop], atol=1e-8)


def test_derivative_sine():
    traj = _traj(np.sin, n=1000)
    d = estimate_derivative(traj, 5)
    t = traj.times[d.valid_rows.start:d.valid_rows.stop]
    assert np.max(np.abs(d.xdot[:, 0] - np.cos(t))) < 1e-3


def test_derivative_errors():
    with pytest.raises(WindowTooLargeError):
        estimate_derivative(_traj(np.sin, n=19), 9)
    with pytest.raises(ValueError):
        estimate_derivative(_traj(np.sin), 4)


@pytest.mark.parametrize("name", sorted(SYSTEMS))
def test_derivative_recovers_rhs(name):
    spec = get_system(name)
    traj = integrate(spec)
    d = estimate_derivative(traj, 1)
    X = traj.states[d.valid_rows.start:d.valid_rows.stop]
    f = spec.rhs(X)
    assert np.max(np.abs(d.xdot - f)) / np.max(np.abs(f)) < 0.01


def test_true_xi_duffing_and_lv():
    spec = get_system("duffing")
    P = polynomial_features(np.zeros((1, 2)), 3)
    xi = assemble_true_xi(spec, P.labels)
    col = dict(zip(P.labels, xi[:, 1]))
    assert col.pop("x0") == -1 and col.pop("x1") == -0.1 and col.pop("x0^3") == -0.3
    assert not any(col.values())
    lv = get_system("lotka_volterra")
    P = polynomial_features(np.zeros((1, 2)), 2)
    col = dict(zip(P.labels, assemble_true_xi(lv, P.labels)[:, 0]))
    assert col["x0"] == pytest.approx(2 / 3) and col["x0*x1"] == pytest.approx(-4 / 3)
    with pytest.raises(MissingLabelError):
        assemble_true_xi(spec, ["1", "x0", "x1"])


@pytest.mark.parametrize("name", sorted(SYSTEMS))
def test_library_times_true_xi_is_rhs(name):
    spec = get_system(name)
    X = np.random.default_rng(0).normal(size=(100, spec.dimension))
    P = polynomial_features(X, spec.poly_degree)
    np.testing.assert_allclose(P.matrix @ assemble_true_xi(spec, P.labels), spec.rhs(X), atol=1e-10)


def test_aliases():
    assert get_system("VdP").name == "vanderpol"
    assert get_system("lv").name == "lotka_volterra"
    with pytest.raises(KeyError):
        get_system("pendulum")


def test_trajectory_csv_roundtrip(tmp_path):
    traj = integrate(get_system("duffing"), n_steps=50)
    traj.to_csv(tmp_path / "t.csv")
    back = dynamics.load_trajectory_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.states, traj.states)


# --- Burgers ---

def test_burgers_constant_is_exact():
    f = solve_burgers(u0=lambda x: np.full_like(x, 0.7))
    assert np.max(np.abs(f.u - 0.7)) < 1e-10


def test_burgers_sine_decays():
    L = 2 * np.pi
    f = solve_burgers(nu=1.0, n_x=64, n_t=21, t_final=0.5, substeps=20,
                      u0=lambda x: np.sin(2 * np.pi * x / L))
    amp = np.max(np.abs(f.u), axis=1)
    assert np.all(np.diff(amp) < 0)


def test_burgers_mass_and_grid():
    f = solve_burgers()
    mass = f.u.sum(axis=1) * f.dx  # trapezoid on a periodic grid
    assert np.max(np.abs(mass - mass[0])) / abs(mass[0]) < 1e-8
    assert f.u.shape == (201, 256)
    assert f.grid_t[1] - f.grid_t[0] == pytest.approx(0.01)


def test_burgers_instability_guard():
    with pytest.raises(dynamics.InstabilityError):
        solve_burgers(nu=0.1, n_x=256, n_t=3, substeps=1)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.sampled_from([1, 3, 5, 7]))
def test_derivative_exact_on_affine(a, b, w):
    d = estimate_derivative(_traj(lambda t: a + b * t, n=60), w)
    np.testing.assert_allclose(d.xdot, b, atol=1e-9)
