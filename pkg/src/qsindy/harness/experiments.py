"""The experiment drivers behind each CLI subcommand.

Every driver is a pure function of its config; randomness enters only through
:func:`cell_seed`, so all methods compared in one (system, sigma, trial) cell
see the same noisy data.
"""
from __future__ import annotations

import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .. import dynamics, pipeline
from ..diagnostics import frac_variance_in_p, leave_k_out, pearson, r2_q, severity, tpr
from ..libraries import (
    QUANTUM,
    concat,
    from_matrix,
    orthogonalize,
    polynomial_features,
)
from ..regression import stlsq, verify_stlsq_preservation, verify_theorems
from .config import ExperimentConfig


def cell_seed(base_seed: int, system: str, sigma: float, trial: int) -> int:
    return int(base_seed) + zlib.crc32(f"{system}|{float(sigma)!r}|{int(trial)}".encode())


@dataclass
class ExperimentRecord:
    system: str
    method: str
    feature_map: str
    sigma: float
    trial: int
    seed: int
    tpr: float
    r2_q: float
    frac_var_in_p: float
    wall_time_ms: float = 0.0


RECORD_COLUMNS = [f.name for f in fields(ExperimentRecord) if f.name != "wall_time_ms"]


def _map_for(cfg: ExperimentConfig, system: str) -> str:
    return cfg.feature_map or pipeline.default_map(system)


def _map_kind(name: str) -> str:
    return pipeline._as_map(name).kind


# --- sweep -----------------------------------------------------------------

def _sweep_cell(args) -> list[ExperimentRecord]:
    cfg, system, sigma, trial = args
    fmap = _map_for(cfg, system)
    seed = cell_seed(cfg.base_seed, system, sigma, trial)
    needs_q = any(m in ("naive_q", "orth_q") for m in cfg.methods)
    prob = pipeline.build_problem(system, sigma, seed, fmap if needs_q else None,
                                  cfg.depolarizing_p, cfg.smooth_window)
    xi_true = prob.xi_true
    out = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        rbf = (cfg.rbf_landmarks, cfg.rbf_gamma_multiplier)
        lib = pipeline.design_matrix(prob, method, rbf)
        model = stlsq(lib.matrix, prob.xdot, prob.system.stlsq_threshold, labels=lib.labels)
        score = tpr(model, xi_true, prob.P.labels).tpr
        aug = lib.matrix[:, prob.P.n_poly:]
        if method == "orth_q":
            aug = prob.Q.matrix  # diagnostics describe Q before projection
        if aug.shape[1]:
            r2, frac = r2_q(aug, prob.xdot), frac_variance_in_p(prob.P.matrix, aug)
        else:
            r2 = frac = float("nan")
        ms = 1e3 * (time.perf_counter() - t0)
        out.append(ExperimentRecord(system, method, _map_kind(fmap) if method in ("naive_q", "orth_q") else "-",
                                    float(sigma), trial, seed, score, r2, frac, ms))
    return out


def _run_cells(fn, cells, jobs: int):
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


def run_sweep(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    cells = [(cfg, s, sig, t) for s in cfg.systems for sig in cfg.noise_grid(s)
             for t in range(cfg.n_trials)]
    results = _run_cells(_sweep_cell, cells, cfg.jobs)
    records = [r for batch in results for r in batch]
    sys_order = {s: i for i, s in enumerate(cfg.systems)}
    meth_order = {m: i for i, m in enumerate(cfg.methods)}
    records.sort(key=lambda r: (sys_order[r.system], r.sigma, r.trial, meth_order[r.method]))
    return records


def summarize(records: list[ExperimentRecord]) -> list[dict]:
    """Mean/min/max TPR per (system, method, sigma), in first-seen order."""
    groups: dict[tuple, list[float]] = {}
    for r in records:
        groups.setdefault((r.system, r.method, r.sigma), []).append(r.tpr)
    return [
        {"system": k[0], "method": k[1], "sigma": k[2], "mean_tpr": float(np.mean(v)),
         "min_tpr": float(np.min(v)), "max_tpr": float(np.max(v)), "n": len(v)}
        for k, v in groups.items()
    ]


# --- rbf grid --------------------------------------------------------------

def _rbf_trial(args):
    cfg, trial = args
    system, sigma = cfg.rbf_system, cfg.rbf_sigma
    seed = cell_seed(cfg.base_seed, system, sigma, trial)
    prob = pipeline.build_problem(system, sigma, seed, None, 0.0, cfg.smooth_window)
    xi_true = prob.xi_true
    vanilla = tpr(pipeline.fit(prob, "vanilla"), xi_true, prob.P.labels).tpr
    grid = {}
    for mult in cfg.gamma_multipliers:
        for n_land in cfg.landmark_counts:
            model = pipeline.fit(prob, "rbf", rbf=(n_land, mult))
            grid[(mult, n_land)] = tpr(model, xi_true, prob.P.labels).tpr
    return vanilla, grid


def run_rbf_grid(cfg: ExperimentConfig) -> tuple[list[dict], float]:
    """Mean TPR per (gamma multiplier, landmark count) cell, and vanilla's mean."""
    results = _run_cells(_rbf_trial, [(cfg, t) for t in range(cfg.n_trials)], cfg.jobs)
    vanilla = float(np.mean([v for v, _ in results]))
    rows = []
    for mult in cfg.gamma_multipliers:
        for n_land in cfg.landmark_counts:
            vals = [g[(mult, n_land)] for _, g in results]
            rows.append({"gamma_multiplier": float(mult), "landmarks": int(n_land),
                         "mean_tpr": float(np.mean(vals)), "min_tpr": float(np.min(vals)),
                         "max_tpr": float(np.max(vals)), "vanilla_tpr": vanilla})
    return rows, vanilla


# --- diagnostic study ------------------------------------------------------

def _diagnostic_combo(args) -> dict:
    cfg, system, fmap = args
    clean = pipeline.clean_problem(system, fmap, cfg.smooth_window)
    frac = frac_variance_in_p(clean.P.matrix, clean.Q.matrix)
    r2 = r2_q(clean.Q.matrix, clean.xdot)
    sigma = cfg.reference_sigma[dynamics.get_system(system).name]
    tv, tn = [], []
    for trial in range(cfg.n_trials):
        seed = cell_seed(cfg.base_seed, system, sigma, trial)
        prob = pipeline.build_problem(system, sigma, seed, fmap, 0.0, cfg.smooth_window)
        tv.append(tpr(pipeline.fit(prob, "vanilla"), prob.xi_true, prob.P.labels).tpr)
        tn.append(tpr(pipeline.fit(prob, "naive_q"), prob.xi_true, prob.P.labels).tpr)
    return {"system": system, "feature_map": _map_kind(fmap), "frac_var_in_p": frac, "r2_q": r2,
            "severity": severity(float(np.mean(tv)), float(np.mean(tn))), "reference_sigma": sigma}


def run_diagnostic_study(cfg: ExperimentConfig) -> dict:
    table2 = _run_cells(_diagnostic_combo, [(cfg, s, m) for s, m in cfg.combos], cfg.jobs)
    frac = [r["frac_var_in_p"] for r in table2]
    r2 = [r["r2_q"] for r in table2]
    sev = [r["severity"] for r in table2]
    corr = {}
    for name, diag in (("frac_var_in_p", frac), ("r2_q", r2)):
        try:
            r, p = pearson(diag, sev)
        except ValueError:
            r, p = float("nan"), float("nan")
        corr[name] = {"r": r, "p": p}
    table1 = []
    n = len(table2)
    for k in (1, 2, 3):
        if k >= n - 1:
            continue
        a, b = leave_k_out(frac, sev, k), leave_k_out(r2, sev, k)
        table1.append({"k": k, "splits": a.n_splits, "frac_var_mae": a.mae, "r2_q_mae": b.mae})
    return {"table2": table2, "correlations": corr, "table1": table1}


# --- hardware noise --------------------------------------------------------

def _hw_cell(args) -> list[dict]:
    cfg, p, trial = args
    system, sigma = cfg.hw_system, cfg.hw_sigma
    seed = cell_seed(cfg.base_seed, system, sigma, trial)
    fmap = _map_for(cfg, system)
    prob = pipeline.build_problem(system, sigma, seed, fmap, p, cfg.smooth_window, check_states=True)
    rows = []
    for method in ("vanilla", "naive_q", "orth_q"):
        score = tpr(pipeline.fit(prob, method), prob.xi_true, prob.P.labels).tpr
        rows.append({"p": float(p), "trial": trial, "seed": seed, "method": method, "tpr": score})
    return rows


def run_hw_noise(cfg: ExperimentConfig) -> list[dict]:
    cells = [(cfg, p, t) for p in cfg.hw_p_grid for t in range(cfg.n_trials)]
    return [r for batch in _run_cells(_hw_cell, cells, cfg.jobs) for r in batch]


# --- Burgers ---------------------------------------------------------------

BURGERS_NAMES = {"x0": "u", "x1": "u_x", "x2": "u_xx"}
BURGERS_TRUTH = {"x2": 0.1, "x0*x1": -1.0}


def burgers_label(label: str) -> str:
    parts = []
    for f in label.split("*"):
        var, _, pw = f.partition("^")
        parts.append(BURGERS_NAMES.get(var, var) + (f"^{pw}" if pw else ""))
    return "*".join(parts)


def burgers_data(cfg: ExperimentConfig, seed: int = 0):
    """Features (u, u_x, u_xx) and target u_t over all interior snapshots."""
    field = dynamics.solve_burgers(cfg.burgers_nu, cfg.burgers_nx, cfg.burgers_nt,
                                   t_final=cfg.burgers_t_final)
    if cfg.burgers_sigma > 0:
        rng = np.random.default_rng(seed)
        u = field.u + rng.normal(0.0, cfg.burgers_sigma, field.u.shape)
        ux, uxx = dynamics.periodic_derivatives(u, field.dx)
        field = dynamics.PdeField(field.grid_x, field.grid_t, u, ux, uxx, field.nu)
    ut, rows = dynamics.burgers_time_derivative(field)
    sl = slice(rows.start, rows.stop)
    feats = np.stack([field.u[sl].ravel(), field.u_x[sl].ravel(), field.u_xx[sl].ravel()], axis=1)
    return feats, ut.ravel()[:, None]


def run_burgers(cfg: ExperimentConfig) -> dict:
    feats, ut = burgers_data(cfg, cell_seed(cfg.base_seed, "burgers", cfg.burgers_sigma, 0))
    P = polynomial_features(feats, 2)
    Q = pipeline.quantum_library("zz3", feats)
    xi_true = np.zeros((len(P.labels), 1))
    for lab, val in BURGERS_TRUTH.items():
        xi_true[P.labels.index(lab), 0] = val
    q_perp = orthogonalize(Q.matrix, P.matrix).q_perp
    libs = {
        "vanilla": P,
        "naive_q": concat(P, Q),
        "orth_q": concat(P, from_matrix(q_perp, Q.labels, QUANTUM)),
    }
    out = {"r2_q": r2_q(Q.matrix, ut), "frac_var_in_p": frac_variance_in_p(P.matrix, Q.matrix),
           "n_samples": int(feats.shape[0]), "methods": {}}
    for name, lib in libs.items():
        model = stlsq(lib.matrix, ut, cfg.burgers_threshold, labels=lib.labels)
        score = tpr(model, xi_true, P.labels)
        coeffs = {burgers_label(lab) if not lab.startswith("q:") else lab: float(model.xi[i, 0])
                  for i, lab in enumerate(lib.labels) if model.active[i, 0]}
        out["methods"][name] = {
            "tpr": score.tpr,
            "coefficients": coeffs,
            "u_xx": float(model.xi[lib.labels.index("x2"), 0]),
            "u*u_x": float(model.xi[lib.labels.index("x0*x1"), 0]),
        }
    return out


# --- theorem verification --------------------------------------------------

def run_verify(cfg: ExperimentConfig) -> list[dict]:
    pairs = cfg.verify_pairs or list(cfg.combos)
    reports = []
    for system, fmap in pairs:
        spec = dynamics.get_system(system)
        prob = pipeline.clean_problem(spec, fmap, cfg.smooth_window)
        rep = verify_theorems(spec, pipeline._as_map(fmap), P=prob.P.matrix, Q=prob.Q.matrix,
                              Xdot=prob.xdot, strict=False, corrupt=cfg.corrupt_q)
        q_perp = orthogonalize(prob.Q.matrix, prob.P.matrix).q_perp
        if cfg.corrupt_q:
            q_perp[0, 0] += cfg.corrupt_q
        theta = np.hstack([prob.P.matrix, q_perp])
        rep.stlsq_deviation = verify_stlsq_preservation(theta, prob.xdot, spec.stlsq_threshold,
                                                        prob.P.n_poly)
        reports.append(rep.to_dict())
    return reports


def record_rows(records: list[ExperimentRecord]) -> list[dict]:
    return [{k: v for k, v in asdict(r).items() if k in RECORD_COLUMNS} for r in records]
