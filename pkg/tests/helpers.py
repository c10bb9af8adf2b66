"""Shared independent oracles used by the unit tests and the acceptance suite.

These deliberately re-derive quantities with straight-line code (finite
differences, explicit per-step inequalities, brute-force re-simulation) so
the library is checked against something other than itself.
"""

from __future__ import annotations

import numpy as np

from dsgdlab.losses import project_ball


def central_difference_grad(value_fn, theta: np.ndarray, step: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(theta, dtype=np.float64)
    for k in range(len(theta)):
        e = np.zeros_like(theta, dtype=np.float64)
        e[k] = step
        g[k] = (value_fn(theta + e) - value_fn(theta - e)) / (2.0 * step)
    return g


def expansivity_max_defect(loss, X, Y, num_pairs: int, seed: int, eta_max: float,
                           factor_fn, radius: float | None = None) -> float:
    """Max over random (theta, theta', z, eta) of ||G(a)-G(b)|| - factor(eta) ||a-b||.

    G is the gradient-update map theta -> theta - eta grad(theta; z);
    ``factor_fn(eta)`` gives the allowed expansivity modulus. When ``radius``
    is set the pair is projected into the ball first.
    """
    rng = np.random.default_rng(seed)
    d = X.shape[1]
    worst = -np.inf
    for _ in range(num_pairs):
        k = int(rng.integers(0, len(Y)))
        x, y = X[k], float(Y[k])
        eta = float(rng.uniform(0.0, eta_max))
        a = rng.normal(size=d) * 3.0
        b = rng.normal(size=d) * 3.0
        if radius is not None:
            a = project_ball(a, radius)
            b = project_ball(b, radius)
        ga = a - eta * loss.grad(a, x, y)
        gb = b - eta * loss.grad(b, x, y)
        defect = np.linalg.norm(ga - gb) - factor_fn(eta) * np.linalg.norm(a - b)
        worst = max(worst, float(defect))
    return worst


def growth_recursion_max_defect(delta_trace: np.ndarray, schedule, i_swapped: int,
                                etas: np.ndarray, L: float) -> float:
    """Single-agent coupled trace: delta_{t+1} <= delta_t + 2 eta_t L [selected]."""
    worst = -np.inf
    T = delta_trace.shape[0] - 1
    for t in range(T):
        allowed = delta_trace[t, 0]
        if schedule.indices[t, 0] == i_swapped:
            allowed += 2.0 * etas[t] * L
        worst = max(worst, float(delta_trace[t + 1, 0] - allowed))
    return worst


def coordinate_recursion_max_defect(delta_trace: np.ndarray, W, schedule, i: int, j: int,
                                    etas: np.ndarray, L: float) -> float:
    """Coupled multi-agent trace: delta^{t+1} <= W delta^t + 2 eta_t L [selected] e_j."""
    worst = -np.inf
    T = delta_trace.shape[0] - 1
    for t in range(T):
        allowed = W.weights @ delta_trace[t]
        if schedule.indices[t, j] == i:
            allowed[j] += 2.0 * etas[t] * L
        worst = max(worst, float((delta_trace[t + 1] - allowed).max()))
    return worst


def empirical_lipschitz(loss, *datasets) -> float:
    """Largest per-sample gradient-norm bound over the given datasets."""
    feats = np.concatenate([ds.features.reshape(-1, ds.features.shape[-1]) for ds in datasets])
    labs = np.concatenate([ds.labels.reshape(-1) for ds in datasets])
    return loss.constants(feats, labs).L
