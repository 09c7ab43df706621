"""Least squares, STLSQ, and the polynomial-coefficient bias identities."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .libraries import RankDeficiencyError, checked_qr, orthogonalize

THEOREM_TOL = 1e-12
STLSQ_TOL = 1e-10


class VerificationError(AssertionError):
    def __init__(self, message: str, report: "BiasReport | None" = None):
        super().__init__(message)
        self.report = report


def least_squares(Theta, Xdot, refine: int = 2, extended: bool = False) -> np.ndarray:
    """argmin ||Xdot - Theta Xi||_F via Householder QR.

    A few steps of iterative refinement with residuals accumulated in
    extended precision pull the forward error down towards eps. With
    ``extended=True`` the refined solution is returned as ``np.longdouble``
    so differences of nearly equal fits keep their significant digits.
    """
    Theta = np.asarray(Theta, dtype=float)
    Xdot = np.asarray(Xdot, dtype=float)
    vector = Xdot.ndim == 1
    if vector:
        Xdot = Xdot[:, None]
    U, R = checked_qr(Theta)
    Xi = np.linalg.solve(R, U.T @ Xdot).astype(np.longdouble)
    if extended:
        refine = max(refine, 4)
    if refine:
        T_ext = Theta.astype(np.longdouble)
        Y_ext = Xdot.astype(np.longdouble)
        for _ in range(refine):
            resid = (Y_ext - T_ext @ Xi).astype(float)
            # seminormal correction: R^T R d = Theta^T r
            g = Theta.T @ resid
            Xi = Xi + np.linalg.solve(R, np.linalg.solve(R.T, g))
    if not extended:
        Xi = Xi.astype(float)
    return Xi[:, 0] if vector else Xi


@dataclass
class SindyModel:
    xi: np.ndarray
    active: np.ndarray
    labels: list[str]
    threshold: float
    iterations: int
    history: list[np.ndarray] = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps({
            "labels": list(self.labels),
            "xi": self.xi.tolist(),
            "active": self.active.tolist(),
            "threshold": self.threshold,
            "iterations": self.iterations,
        })

    @classmethod
    def from_json(cls, text: str) -> "SindyModel":
        d = json.loads(text)
        return cls(np.array(d["xi"], dtype=float), np.array(d["active"], dtype=bool),
                   d["labels"], d["threshold"], d["iterations"])

    def equations(self, state_names=None, precision: int = 4) -> list[str]:
        lines = []
        for j in range(self.xi.shape[1]):
            name = state_names[j] if state_names else f"x{j}"
            terms = [f"{self.xi[i, j]:+.{precision}f} {lab}"
                     for i, lab in enumerate(self.labels) if self.active[i, j]]
            lines.append(f"d{name}/dt = " + (" ".join(terms) if terms else "0"))
        return lines


def _stlsq_column(Theta, y, lam, max_iter, history):
    m = Theta.shape[1]
    active = np.ones(m, dtype=bool)
    coef = np.zeros(m)
    it = 0
    while True:
        coef = np.zeros(m)
        if active.any():
            coef[active] = least_squares(Theta[:, active], y)
        history.append(active.copy())
        new_active = active & (np.abs(coef) >= lam)
        it += 1
        if np.array_equal(new_active, active) or it >= max_iter:
            break
        active = new_active
    coef[~active] = 0.0
    return coef, active, it


def stlsq(Theta, Xdot, lam: float, max_iter: int = 20, labels=None) -> SindyModel:
    """Sequentially thresholded least squares, run independently per target.

    Each pass fits the current support, drops coefficients below ``lam`` and
    refits; it stops when the support no longer changes. ``history`` holds the
    support used at every pass, one list per target column.
    """
    if lam <= 0:
        raise ValueError("threshold must be positive")
    Theta = np.asarray(Theta, dtype=float)
    Xdot = np.atleast_2d(np.asarray(Xdot, dtype=float).T).T
    m, d = Theta.shape[1], Xdot.shape[1]
    xi = np.zeros((m, d))
    active = np.zeros((m, d), dtype=bool)
    hist = []
    iters = 0
    for j in range(d):
        h: list[np.ndarray] = []
        xi[:, j], active[:, j], it = _stlsq_column(Theta, Xdot[:, j], lam, max_iter, h)
        hist.append(h)
        iters = max(iters, it)
    labels = list(labels) if labels is not None else [f"c{i}" for i in range(m)]
    return SindyModel(xi, active, labels, lam, iters, hist)


def predict_bias(P, Q, xi_q_hat) -> np.ndarray:
    """(P^T P)^{-1} P^T Q xi_Q, evaluated through a QR factorization of P."""
    xi_q_hat = np.asarray(xi_q_hat, dtype=float)
    if not np.any(xi_q_hat):
        return np.zeros((np.shape(P)[1],) + xi_q_hat.shape[1:])
    U, R = checked_qr(P)
    return np.linalg.solve(R, U.T @ (np.asarray(Q, dtype=float) @ xi_q_hat))


@dataclass
class BiasReport:
    system: str
    feature_map: str
    predicted_bias: np.ndarray
    observed_bias: np.ndarray
    max_relative_error: float
    orth_deviation: float
    stlsq_deviation: float | None = None

    @property
    def passed(self) -> bool:
        ok = self.max_relative_error < THEOREM_TOL and self.orth_deviation < THEOREM_TOL
        if self.stlsq_deviation is not None:
            ok = ok and self.stlsq_deviation < STLSQ_TOL
        return ok

    def to_dict(self) -> dict:
        d = asdict(self)
        d["predicted_bias"] = self.predicted_bias.tolist()
        d["observed_bias"] = self.observed_bias.tolist()
        d["passed"] = self.passed
        return d


def bias_identities(P, Q, Xdot, corrupt: float = 0.0) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Fit P-only, [P, Q] and [P, Q_perp]; return (predicted, observed,
    relative prediction error, max |orth - vanilla|) for the polynomial block.

    ``corrupt`` is added to one entry of Q_perp after projection (negative
    control for the verification path).
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    p = P.shape[1]
    xi_vanilla = least_squares(P, Xdot, extended=True)
    xi_naive = least_squares(np.hstack([P, Q]), Xdot, extended=True)
    q_perp = orthogonalize(Q, P).q_perp
    if corrupt:
        q_perp = q_perp.copy()
        q_perp[0, 0] += corrupt
    xi_orth = least_squares(np.hstack([P, q_perp]), Xdot, extended=True)
    observed = (xi_vanilla - xi_naive[:p]).astype(float)
    predicted = predict_bias(P, Q, xi_naive[p:].astype(float))
    denom = np.linalg.norm(observed)
    rel = np.linalg.norm(predicted - observed) / denom if denom > 0 else float(np.linalg.norm(predicted))
    dev = float(np.max(np.abs((xi_orth[:p] - xi_vanilla).astype(float))))
    return predicted, observed, float(rel), dev


def verify_theorems(system, fmap, *, P=None, Q=None, Xdot=None, strict: bool = True,
                    corrupt: float = 0.0) -> BiasReport:
    """Check the bias formula and the orthogonalization identity on clean data.

    When P, Q, Xdot are not supplied they are built from the noise-free
    trajectory of ``system`` (see :func:`qsindy.pipeline.clean_problem`).
    """
    if P is None or Q is None or Xdot is None:
        from .pipeline import clean_problem

        prob = clean_problem(system, fmap)
        P, Q, Xdot = prob.P.matrix, prob.Q.matrix, prob.xdot
    name = getattr(system, "name", str(system))
    kind = getattr(fmap, "kind", str(fmap))
    predicted, observed, rel, dev = bias_identities(P, Q, Xdot, corrupt)
    report = BiasReport(name, kind, predicted, observed, rel, dev)
    if strict and not (rel < THEOREM_TOL and dev < THEOREM_TOL):
        raise VerificationError(
            f"{name}/{kind}: bias relative error {rel:.3g}, orth deviation {dev:.3g}", report
        )
    return report


def verify_stlsq_preservation(Theta_orth, Xdot, lam: float, n_poly: int, max_iter: int = 20) -> float:
    """Max |difference| between the polynomial coefficients of STLSQ on
    [P, Q_perp] and a plain least-squares refit on P restricted to the same
    final polynomial support, checked at every STLSQ pass."""
    Theta_orth = np.asarray(Theta_orth, dtype=float)
    Xdot = np.atleast_2d(np.asarray(Xdot, dtype=float).T).T
    P = Theta_orth[:, :n_poly]
    model = stlsq(Theta_orth, Xdot, lam, max_iter)
    worst = 0.0
    for j in range(Xdot.shape[1]):
        # every iterate's restricted fit, not just the final one
        for support in model.history[j]:
            sup_p = support[:n_poly]
            if not sup_p.any():
                continue
            full = least_squares(Theta_orth[:, support], Xdot[:, j])
            poly_part = full[: sup_p.sum()]
            ref = least_squares(P[:, sup_p], Xdot[:, j])
            worst = max(worst, float(np.max(np.abs(poly_part - ref))))
        sup_p = model.active[:n_poly, j]
        if sup_p.any():
            ref = least_squares(P[:, sup_p], Xdot[:, j])
            worst = max(worst, float(np.max(np.abs(model.xi[:n_poly, j][sup_p] - ref))))
    return worst


__all__ = [
    "BiasReport", "RankDeficiencyError", "SindyModel", "VerificationError", "bias_identities",
    "least_squares", "predict_bias", "stlsq", "verify_stlsq_preservation", "verify_theorems",
]
