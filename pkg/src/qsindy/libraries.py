"""Candidate feature libraries and the orthogonal projection of one library
against the polynomial column space."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

POLY, QUANTUM, RBF = "POLY", "QUANTUM", "RBF"
MAX_CONDITION = 1e12


class RankDeficiencyError(np.linalg.LinAlgError):
    pass


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureLibrary:
    matrix: np.ndarray
    labels: tuple[str, ...]
    family: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "family", tuple(self.family))
        m = self.matrix.shape[1]
        if len(self.labels) != m or len(self.family) != m:
            raise ValueError("labels/family must match the column count")
        if len(set(self.labels)) != m:
            raise ValueError("library labels must be unique")
        # polynomial block must be a leading contiguous span
        fam = list(self.family)
        n_poly = fam.count(POLY)
        if fam[:n_poly] != [POLY] * n_poly:
            raise ValueError("polynomial columns must come first")

    @property
    def n_poly(self) -> int:
        return self.family.count(POLY)

    def __add__(self, other: "FeatureLibrary") -> "FeatureLibrary":
        return concat(self, other)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.labels)
            w.writerows([repr(float(v)) for v in row] for row in self.matrix)


def concat(*libs: FeatureLibrary) -> FeatureLibrary:
    return FeatureLibrary(
        np.hstack([lib.matrix for lib in libs]),
        sum((lib.labels for lib in libs), ()),
        sum((lib.family for lib in libs), ()),
    )


def from_matrix(matrix: np.ndarray, labels, family: str) -> FeatureLibrary:
    labels = list(labels)
    return FeatureLibrary(np.asarray(matrix, dtype=float), labels, [family] * len(labels))


def monomial_label(powers) -> str:
    parts = []
    for i, k in enumerate(powers):
        if k == 1:
            parts.append(f"x{i}")
        elif k > 1:
            parts.append(f"x{i}^{k}")
    return "*".join(parts) or "1"


def monomial_exponents(d: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent vectors of all monomials of total degree <= degree, graded-lex."""
    out = []
    for deg in range(degree + 1):
        for combo in combinations_with_replacement(range(d), deg):
            out.append(tuple(combo.count(i) for i in range(d)))
    return out


def polynomial_features(X, degree: int) -> FeatureLibrary:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = X.shape[1]
    if degree not in (1, 2, 3) or d > 3:
        raise ValueError("supported: degree 1-3 over at most 3 variables")
    exps = monomial_exponents(d, degree)
    cols = [np.prod(X ** np.array(e), axis=1) for e in exps]
    labels = [monomial_label(e) for e in exps]
    return FeatureLibrary(np.column_stack(cols), labels, [POLY] * len(labels))


def evaluate_label(label: str, x) -> float:
    """Evaluate a monomial label such as ``x0^2*x1`` at a point."""
    val = 1.0
    if label == "1":
        return val
    for factor in label.split("*"):
        var, _, power = factor.partition("^")
        val *= float(x[int(var[1:])]) ** int(power or 1)
    return val


def rbf_features(X, landmarks, gamma: float) -> FeatureLibrary:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    L = np.atleast_2d(np.asarray(landmarks, dtype=float))
    sq = np.sum((X[:, None, :] - L[None, :, :]) ** 2, axis=-1)
    labels = [f"rbf:{j}" for j in range(L.shape[0])]
    return FeatureLibrary(np.exp(-gamma * sq), labels, [RBF] * len(labels))


def median_bandwidth(X, max_points: int = 500) -> float:
    """1 / median squared pairwise distance over a strided subsample."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    if n > max_points:
        X = X[np.floor(np.arange(max_points) * n / max_points).astype(int)]
    i, j = np.triu_indices(X.shape[0], k=1)
    med = np.median(np.sum((X[i] - X[j]) ** 2, axis=1))
    if med == 0:
        raise DegenerateDataError("median pairwise distance is zero")
    return 1.0 / med


def select_landmarks(X, L: int, seed: int | None = None) -> np.ndarray:
    """Uniform stride sampling of rows ``round(k N / L)``; ``seed`` is unused
    and only kept so callers can treat selection rules interchangeably."""
    X = np.atleast_2d(np.asarray(X))
    n = X.shape[0]
    if not 1 <= L <= n:
        raise ValueError(f"cannot pick {L} landmarks from {n} rows")
    idx = np.round(np.arange(L) * n / L).astype(int)
    return X[idx]


@dataclass(frozen=True)
class OrthogonalizedLibrary:
    q_perp: np.ndarray
    projection_coeffs: np.ndarray


def checked_qr(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR of P, refusing matrices with condition number above 1e12."""
    P = np.asarray(P, dtype=float)
    if P.shape[0] < P.shape[1]:
        raise RankDeficiencyError(f"{P.shape[0]} rows cannot support {P.shape[1]} columns")
    s = np.linalg.svd(P, compute_uv=False)
    if s[-1] == 0 or s[0] / s[-1] > MAX_CONDITION:
        cond = np.inf if s[-1] == 0 else s[0] / s[-1]
        raise RankDeficiencyError(f"library is rank deficient (condition number {cond:.3g})")
    return np.linalg.qr(P)


def orthogonalize(Q, P) -> OrthogonalizedLibrary:
    """Project Q onto the orthogonal complement of col(P): Q - P A with
    A = (P^T P)^{-1} P^T Q computed through a QR factorization."""
    Q = np.asarray(Q, dtype=float)
    U, R = checked_qr(P)
    UtQ = U.T @ Q
    A = np.linalg.solve(R, UtQ)
    q_perp = Q - U @ UtQ
    # one re-orthogonalization pass removes the residual O(eps * cond) component
    q_perp -= U @ (U.T @ q_perp)
    return OrthogonalizedLibrary(q_perp, A)


def projection_onto(P, Q) -> np.ndarray:
    """P (P^T P)^{-1} P^T Q."""
    U, _ = checked_qr(P)
    return U @ (U.T @ np.asarray(Q, dtype=float))
