import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as quad_int
from scipy.special import gammaln

from qsindy.diagnostics import (
    DegenerateError,
    LabelMismatchError,
    betainc_reg,
    frac_variance_in_p,
    leave_k_out,
    leave_k_out_mae,
    pearson,
    pearson_p_value,
    r2_q,
    severity,
    tpr,
)
from qsindy.libraries import orthogonalize
from qsindy.pipeline import clean_problem
from qsindy.regression import SindyModel


def _model(xi, labels=None):
    xi = np.asarray(xi, dtype=float)
    labels = labels or [f"c{i}" for i in range(xi.shape[0])]
    return SindyModel(xi, xi != 0, labels, 0.1, 1)


def test_tpr_examples():
    truth = np.array([[1.0, 0.0], [0.0, -2.0], [0.5, 0.0]])
    assert tpr(_model(truth), truth).tpr == 1.0
    assert tpr(_model(np.zeros_like(truth)), truth).tpr == 0.0
    one = np.array([[1.0]])
    assert tpr(_model([[1.49]]), one).tpr == 1.0
    assert tpr(_model([[1.5]]), one).tpr == 1.0
    assert tpr(_model([[1.51]]), one).tpr == 0.0
    assert tpr(_model([[-1.0]]), one).tpr == 0.0


def test_tpr_label_errors():
    with pytest.raises(LabelMismatchError):
        tpr(_model([[1.0], [0.0]]), np.ones((2, 2)))
    with pytest.raises(LabelMismatchError):
        tpr(_model([[1.0]], ["x0"]), np.array([[1.0]]), ["x9"])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_tpr_monotone(seed):
    r = np.random.default_rng(seed)
    truth = r.choice([0.0, 1.0, -1.0], size=(6, 2))
    if not truth.any():
        truth[0, 0] = 1.0
    est = truth * r.choice([0.0, 1.0, 3.0], size=truth.shape)
    base = tpr(_model(est), truth).tpr
    i, j = np.argwhere(truth != 0)[0]
    est[i, j] = truth[i, j]
    assert tpr(_model(est), truth).tpr >= base


def test_frac_var_examples(rng):
    P = rng.normal(size=(100, 5))
    assert abs(frac_variance_in_p(P, P @ rng.normal(size=(5, 3))) - 1) < 1e-10
    assert frac_variance_in_p(P, orthogonalize(rng.normal(size=(100, 3)), P).q_perp) < 1e-10
    with pytest.raises(DegenerateError):
        frac_variance_in_p(P, np.zeros((100, 2)))


def test_frac_var_duffing_zz2():
    prob = clean_problem("duffing", "zz2")
    frac = frac_variance_in_p(prob.P.matrix, prob.Q.matrix)
    assert 0.90 <= frac <= 0.99, f"frac_var_in_p = {frac:.4f}"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_frac_var_recombination_invariant(seed):
    r = np.random.default_rng(seed)
    P = r.normal(size=(80, 4))
    Q = r.normal(size=(80, 3)) + P[:, :3]
    G = r.normal(size=(4, 4)) + 4 * np.eye(4)
    assert abs(frac_variance_in_p(P, Q) - frac_variance_in_p(P @ G, Q)) < 1e-10


def test_r2q_examples():
    r = np.random.default_rng(0)
    y = r.normal(size=(500, 2))
    assert abs(r2_q(np.c_[y, r.normal(size=500)], y) - 1) < 1e-10
    assert r2_q(r.normal(size=(500, 6)), y) < 0.05
    with pytest.raises(DegenerateError):
        r2_q(r.normal(size=(20, 2)), np.ones(20))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_r2q_rotation_and_nesting(seed):
    r = np.random.default_rng(seed)
    Q = r.normal(size=(60, 4))
    y = Q @ r.normal(size=4) + r.normal(size=60)
    O, _ = np.linalg.qr(r.normal(size=(4, 4)))
    assert abs(r2_q(Q, y) - r2_q(Q @ O, y)) < 1e-10
    assert r2_q(Q[:, :3], y) <= r2_q(Q, y) + 1e-12


def test_severity():
    assert severity(1.0, 0.40) == pytest.approx(0.60)
    assert severity(1.0, 1.0) == 0.0
    assert severity(1.0, 0.0) == 1.0


def test_pearson_examples():
    x = np.arange(10.0)
    r, p = pearson(x, 2 * x + 1)
    assert r == pytest.approx(1.0) and p < 1e-12
    assert pearson(x, -x)[0] == pytest.approx(-1.0)
    with pytest.raises(DegenerateError):
        pearson(x, np.ones(10))


def _t_tail_oracle(t, df):
    """Two-sided Student-t tail by direct quadrature of the density."""
    logc = gammaln((df + 1) / 2) - gammaln(df / 2) - 0.5 * math.log(df * math.pi)
    dens = lambda s: math.exp(logc) * (1 + s * s / df) ** (-(df + 1) / 2)
    val, _ = quad_int.quad(dens, abs(t), np.inf, epsabs=1e-14, epsrel=1e-13)
    return 2 * val


def test_pearson_p_value_n10_r070():
    p = pearson_p_value(0.70, 10)
    t = 0.70 * math.sqrt(8 / (1 - 0.49))
    assert abs(p - _t_tail_oracle(t, 8)) < 1e-10
    assert abs(p - 0.023) < 0.002
    assert abs(p - 0.024) < 0.002


def test_pearson_p_value_n10_r055():
    assert pearson_p_value(0.55, 10) == pytest.approx(0.0996, abs=0.002)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.99, 0.99), st.integers(3, 60))
def test_p_value_matches_quadrature(r, n):
    t = r * math.sqrt((n - 2) / (1 - r * r))
    assert abs(pearson_p_value(r, n) - _t_tail_oracle(t, n - 2)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 20), st.floats(0.1, 20), st.floats(0, 1))
def test_betainc_matches_quadrature(a, b, x):
    from scipy.special import betainc
    assert abs(betainc_reg(a, b, x) - betainc(a, b, x)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 10), st.floats(-5, 5))
def test_pearson_affine_invariant(seed, scale, shift):
    r = np.random.default_rng(seed)
    x, y = r.normal(size=12), r.normal(size=12)
    assert abs(pearson(x, y)[0] - pearson(scale * x + shift, y)[0]) < 1e-12


def _brute_lko(x, y, k):
    errs = []
    for held in combinations(range(len(x)), k):
        keep = [i for i in range(len(x)) if i not in held]
        xs, ys = x[keep], y[keep]
        if np.ptp(xs) == 0:
            pred = lambda v: ys.mean()
        else:
            A = np.c_[xs, np.ones_like(xs)]
            (b, a), *_ = np.linalg.lstsq(A, ys, rcond=None)
            pred = lambda v: b * v + a
        errs += [abs(y[i] - pred(x[i])) for i in held]
    return float(np.mean(errs))


def test_leave_k_out_examples():
    r = np.random.default_rng(9)
    x = r.uniform(size=10)
    for k, n in ((1, 10), (2, 45), (3, 120)):
        res = leave_k_out(x, 3 * x - 1, k)
        assert res.n_splits == n and res.mae < 1e-12
    y = r.uniform(size=10)
    for k in (1, 2, 3):
        assert abs(leave_k_out_mae(np.full(10, 0.4), y, k) - _brute_lko(np.full(10, 0.4), y, k)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([1, 2, 3]))
def test_leave_k_out_oracle(seed, k):
    r = np.random.default_rng(seed)
    x, y = r.uniform(size=10), r.uniform(size=10)
    assert abs(leave_k_out_mae(x, y, k) - _brute_lko(x, y, k)) < 1e-10
