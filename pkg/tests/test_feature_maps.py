import numpy as np
import pytest

from qsindy import qsim
from qsindy.dynamics import get_system, integrate
from qsindy.feature_maps import (
    REUPLOAD_PARAMS,
    ArityError,
    FeatureMapSpec,
    build_circuit,
    evaluate,
    feature_map,
)

from conftest import dense_expectation


@pytest.fixture(scope="module")
def duffing_X():
    return integrate(get_system("duffing")).states[::5][:200]


def _expect(spec, x):
    s = qsim.run_pure(build_circuit(spec, x))
    return {o.label(): qsim.expectation(s, o) for o in spec.observables}


def test_zz2_at_origin():
    e = _expect(feature_map("zz2"), [0, 0])
    for lab, want in [("Z0", 1), ("Z1", 1), ("Z0Z1", 1), ("X0", 0), ("X1", 0)]:
        assert abs(e[lab] - want) < 1e-12


def test_iqp_at_origin_matches_oracle():
    spec = feature_map("iqp")
    c = build_circuit(spec, [0, 0])
    e = _expect(spec, [0, 0])
    for obs in spec.observables[2:4]:
        assert abs(e[obs.label()] - dense_expectation(c, obs.matrix())) < 1e-12


def test_reupload_zero_params():
    spec = FeatureMapSpec("REUPLOAD", fixed_params=np.zeros((3, 2, 3)))
    e = _expect(spec, [0, 0])
    assert abs(e["Z0"] - 1) < 1e-12 and abs(e["Z1"] - 1) < 1e-12


def test_reupload_params_are_seeded_table():
    want = np.random.default_rng(42).uniform(-np.pi, np.pi, size=(3, 2, 3))
    np.testing.assert_array_equal(REUPLOAD_PARAMS, want)


def test_circuit_wiring():
    zz2 = build_circuit(feature_map("zz2"), [0.3, -0.7])
    assert [g.kind for g in zz2.gates] == ["RX", "RX", "CNOT", "RZ", "CNOT", "RY", "RY"]
    assert zz2.gates[3].angle == pytest.approx(0.3 * -0.7)
    zz3 = build_circuit(feature_map("zz3"), [0.1, 0.2, 0.3])
    ring = [g.qubits for g in zz3.gates if g.kind == "RZZ"]
    assert ring == [(0, 1), (1, 2), (2, 0)]
    iqp = build_circuit(feature_map("iqp"), [0.1, 0.2])
    assert [g.kind for g in iqp.gates] == ["H", "H", "RZ", "RZ", "RZZ"] * 2
    reup = build_circuit(feature_map("reupload"), [0.1, 0.2])
    assert len(reup.gates) == 3 * (2 + 6 + 1)


def test_arity_error():
    with pytest.raises(ArityError):
        build_circuit(feature_map("zz2"), [1.0, 2.0, 3.0])
    with pytest.raises(ArityError):
        evaluate(feature_map("zz3"), np.ones((4, 2)))


def test_duplicate_rows_identical():
    X = np.array([[0.1, 0.4], [1.2, -0.3], [0.1, 0.4]])
    for name in ("zz2", "iqp", "reupload"):
        Q = evaluate(feature_map(name), X).Q
        np.testing.assert_array_equal(Q[0], Q[2])


def test_zz2_on_duffing_nondegenerate(duffing_X):
    Q = evaluate(feature_map("zz2"), duffing_X).Q
    assert Q.shape == (200, 6)
    assert np.all(np.abs(Q) <= 1)
    assert Q.var(axis=0).max() > 1e-6


def test_zz3_rescaling_hits_half_pi():
    X = integrate(get_system("lorenz"), n_steps=2000).states
    feats = evaluate(feature_map("zz3"), X)
    assert np.max(np.abs(X * feats.scale)) == pytest.approx(np.pi / 2, abs=1e-15)
    assert feats.Q.shape[1] == 9
    assert list(feats.column_labels) == ["q:Z0", "q:Z1", "q:Z2", "q:X0", "q:X1", "q:X2",
                                   "q:Z0Z1", "q:Z1Z2", "q:Z0Z2"]


def test_deterministic(duffing_X):
    a = evaluate(feature_map("iqp"), duffing_X, p_noise=0.01).Q
    b = evaluate(feature_map("iqp"), duffing_X, p_noise=0.01).Q
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("name", ["zz2", "iqp", "reupload"])
def test_noise_contracts_column_means(name, duffing_X):
    X = duffing_X[:60]
    spec = feature_map(name)
    pure = evaluate(spec, X).Q
    for p in (0.01, 0.1, 0.5):
        noisy = evaluate(spec, X, p_noise=p, check_states=True).Q
        assert np.all(np.abs(noisy) <= 1)
        assert np.all(np.abs(noisy).mean(axis=0) <= np.abs(pure).mean(axis=0) + 1e-12)


def test_maps_are_distinct(duffing_X):
    Qs = [evaluate(feature_map(n), duffing_X).Q for n in ("zz2", "iqp", "reupload")]
    for i in range(3):
        for j in range(i + 1, 3):
            assert np.linalg.norm(Qs[i] - Qs[j]) > 1e-3


def test_map_aliases():
    assert feature_map("zz").kind == "ZZ2"
    assert feature_map("reup").kind == "REUPLOAD"
    assert feature_map("zz3").rescale and not feature_map("zz2").rescale
    with pytest.raises(ValueError):
        feature_map("nope")
