"""Recovery scoring, cannibalization diagnostics, correlation and
leave-k-out cross-validation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .libraries import projection_onto


class DegenerateError(ValueError):
    pass


class LabelMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TermResult:
    label: str
    target_dim: int
    recovered: bool
    recovered_value: float
    true_value: float


@dataclass(frozen=True)
class RecoveryScore:
    tpr: float
    per_term: list[TermResult]

    @property
    def n_recovered(self) -> int:
        return sum(t.recovered for t in self.per_term)


@dataclass(frozen=True)
class DiagnosticRecord:
    system: str
    feature_map: str
    frac_var_in_p: float
    r2_q: float
    severity: float


def tpr(model, xi_true, true_labels=None) -> RecoveryScore:
    """Fraction of nonzero true terms recovered with correct sign and within
    50% (inclusive) of the true value.

    ``xi_true`` rows follow ``true_labels`` (default: the model's own labels),
    which must be a prefix-compatible subset of the model's labels.
    """
    xi_true = np.asarray(xi_true, dtype=float)
    labels = list(model.labels)
    true_labels = labels[: xi_true.shape[0]] if true_labels is None else list(true_labels)
    if len(true_labels) != xi_true.shape[0] or xi_true.shape[1] != model.xi.shape[1]:
        raise LabelMismatchError("true coefficient matrix does not match the model shape")
    index = {lab: i for i, lab in enumerate(labels)}
    terms = []
    for r, lab in enumerate(true_labels):
        if lab not in index:
            if np.any(xi_true[r]):
                raise LabelMismatchError(f"model has no column {lab!r}")
            continue
        i = index[lab]
        for j in range(xi_true.shape[1]):
            c = xi_true[r, j]
            if c == 0:
                continue
            v = float(model.xi[i, j])
            ok = bool(model.active[i, j]) and np.sign(v) == np.sign(c) and abs(v - c) <= 0.5 * abs(c)
            terms.append(TermResult(lab, j, ok, v, float(c)))
    if not terms:
        raise LabelMismatchError("ground truth has no nonzero terms")
    return RecoveryScore(sum(t.recovered for t in terms) / len(terms), terms)


def frac_variance_in_p(P, Q) -> float:
    """||P (P^T P)^{-1} P^T Q||_F^2 / ||Q||_F^2."""
    Q = np.asarray(Q, dtype=float)
    qn = np.linalg.norm(Q) ** 2
    if qn == 0:
        raise DegenerateError("Q is identically zero")
    return float(np.linalg.norm(projection_onto(P, Q)) ** 2 / qn)


def r2_q(Q, Xdot) -> float:
    """R^2 of regressing Xdot on Q alone (no intercept), against centred
    total variance."""
    Q = np.asarray(Q, dtype=float)
    Y = np.atleast_2d(np.asarray(Xdot, dtype=float).T).T
    centred = Y - Y.mean(axis=0)
    tss = np.linalg.norm(centred) ** 2
    if tss == 0:
        raise DegenerateError("Xdot has no variance")
    coef, *_ = np.linalg.lstsq(Q, Y, rcond=None)
    rss = np.linalg.norm(Y - Q @ coef) ** 2
    return float(1 - rss / tss)


def severity(tpr_vanilla: float, tpr_naive: float) -> float:
    return tpr_vanilla - tpr_naive


# --- Student-t tail through the regularized incomplete beta ----------------

def _betacf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 1e-15) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x in (0.0, 1.0):
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation and its two-sided p-value (n - 2 dof)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n != y.size or n < 3:
        raise ValueError("need two equal-length samples of at least 3 points")
    xc, yc = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt(xc @ xc), np.sqrt(yc @ yc)
    if sx == 0 or sy == 0:
        raise DegenerateError("zero variance in an input")
    r = float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))
    return r, pearson_p_value(r, n)


def pearson_p_value(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return t_two_sided_p(t, n - 2)


# --- leave-k-out -----------------------------------------------------------

def _ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        return 0.0, ym  # constant predictor: training mean
    slope = np.sum((x - xm) * (y - ym)) / sxx
    return slope, ym - slope * xm


@dataclass(frozen=True)
class CVResult:
    k: int
    mae: float
    n_splits: int


def leave_k_out_mae(diagnostic, sev, k: int) -> float:
    """Exhaustive leave-k-out MAE of a univariate OLS predictor of ``sev``."""
    return leave_k_out(diagnostic, sev, k).mae


def leave_k_out(diagnostic, sev, k: int) -> CVResult:
    """Fit slope + intercept on every size-(n-k) subset and average the
    absolute errors over all held-out points of all splits."""
    x = np.asarray(diagnostic, dtype=float)
    y = np.asarray(sev, dtype=float)
    n = x.size
    if y.size != n:
        raise ValueError("diagnostic and severity lengths differ")
    if not 1 <= k < n - 1:
        raise ValueError(f"k must be in [1, {n - 2}]")
    errs = []
    n_splits = 0
    for held in combinations(range(n), k):
        mask = np.ones(n, dtype=bool)
        mask[list(held)] = False
        slope, icpt = _ols_line(x[mask], y[mask])
        errs.extend(np.abs(y[~mask] - (slope * x[~mask] + icpt)))
        n_splits += 1
    return CVResult(k, float(np.mean(errs)), n_splits)
