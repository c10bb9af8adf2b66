"""Closed-form generalization bounds and stepsize admissibility checks.

Averaged / per-agent bounds (graph enters only through admissibility):

* convex:            2 L^2 (sum_t eta_t) / (m n)
* strongly convex:   4 L^2 / (mu m n)
* bounded nonconvex: (1 + 1/(beta c)) (2 c L^2)^(1/(beta c + 1))
                       T^(beta c/(beta c + 1)) / (n m^(1/(beta c + 1)))
* data-dependent:    2 sqrt(2) L sqrt(T eta) sqrt(init_gap) / (m n)
                       + 2 L sigma eta T / (m n)
                       + 2 L sqrt(beta) sigma eta^(3/2) T / (m n)
                       + 2 L^2 T eta C_W / (m n)

Worst-case (per-agent supremum) companions multiply in the graph:

* convex x sum_j sup_k W_kj; its spectral-gap relaxation
  uses (1 + m (1 - rho)); strongly convex x sum_j sup_k W_kj;
* nonconvex: same leading constant with ||W||_max^(1/(beta c + 1)) / n.

The worst-case spectral bound is computed as the convex bound times
(1 + m (1 - rho)) -- algebraically identical to the displayed
(1/(mn) + (1 - rho)/n) form -- so the comparison with the connectivity-sum
bound reduces to comparing the two graph factors and inherits the
monotonicity of correctly rounded multiplication.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .datagen import FederatedDataset
from .engine import Stepsize
from .losses import LogisticLoss, RidgeLoss, project_ball
from .topology import MixingMatrix, TopologyDiagnostics

__all__ = [
    "BoundInputs",
    "BoundReport",
    "StepsizeChecks",
    "bound_convex",
    "bound_data_dependent",
    "bound_nonconvex",
    "bound_strongly",
    "bound_worst_convex",
    "bound_worst_convex_spectral",
    "bound_worst_nonconvex",
    "bound_worst_strongly",
    "check_stepsize",
    "compute_init_gap",
    "descent_lemma_defect",
    "empirical_sigma",
    "local_optimization_error_bound",
]


@dataclass(frozen=True)
class BoundInputs:
    """Everything a bound evaluator may need; optional pieces stay None."""

    L: float
    beta: float
    T: int
    m: int
    n: int
    stepsize: Stepsize
    topology: TopologyDiagnostics
    mu: float | None = None
    sigma: float | None = None
    c: float | None = None
    init_gap: float | None = None

    def __post_init__(self) -> None:
        if self.L <= 0 or self.beta <= 0:
            raise ValueError("L and beta must be positive")
        if self.T < 0 or self.m < 1 or self.n < 1:
            raise ValueError("need T >= 0, m >= 1, n >= 1")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.init_gap is not None and self.init_gap < 0:
            raise ValueError(f"init_gap must be >= 0, got {self.init_gap}")

    def decay_constant(self) -> float | None:
        if self.c is not None:
            return self.c
        if self.stepsize.kind == "decaying":
            return self.stepsize.value
        return None


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bound with its stepsize admissibility flag and input echo."""

    name: str
    value: float
    admissible: bool
    inputs_echo: dict = field(default_factory=dict)


def _echo(inputs: BoundInputs) -> dict:
    top = inputs.topology
    return {
        "L": inputs.L, "beta": inputs.beta, "mu": inputs.mu, "sigma": inputs.sigma,
        "c": inputs.decay_constant(), "eta_kind": inputs.stepsize.kind,
        "eta_value": inputs.stepsize.value, "T": inputs.T, "m": inputs.m, "n": inputs.n,
        "spectral_gap": top.spectral_gap, "max_norm": top.max_norm,
        "connectivity_sum": top.connectivity_sum, "min_diag": top.min_diag,
        "lambda_min": top.smallest_eigenvalue, "cw_limit": top.cw_limit,
        "init_gap": inputs.init_gap,
    }


def bound_convex(inputs: BoundInputs) -> BoundReport:
    """Expected generalization error of the final iterates, convex loss."""
    value = 2.0 * inputs.L ** 2 * inputs.stepsize.sum_first(inputs.T) / (inputs.m * inputs.n)
    admissible = inputs.stepsize.max_first(inputs.T) <= 2.0 * inputs.topology.min_diag / inputs.beta
    return BoundReport("convex", value, admissible, _echo(inputs))


def bound_strongly(inputs: BoundInputs) -> BoundReport:
    """Strongly convex bound; independent of T and of the schedule's values."""
    if inputs.mu is None:
        raise ValueError("strongly convex bound requires mu")
    value = 4.0 * inputs.L ** 2 / (inputs.mu * inputs.m * inputs.n)
    admissible = (inputs.stepsize.kind == "constant"
                  and inputs.stepsize.max_first(max(inputs.T, 1))
                  <= inputs.topology.min_diag / inputs.beta)
    return BoundReport("strongly_convex", value, admissible, _echo(inputs))


def _nonconvex_pieces(inputs: BoundInputs) -> tuple[float, float, float]:
    c = inputs.decay_constant()
    if c is None:
        raise ValueError("nonconvex bound requires the decay constant c "
                         "(a decaying stepsize schedule)")
    bc = inputs.beta * c
    a = bc / (bc + 1.0)
    c_tilde = (1.0 + 1.0 / bc) * (2.0 * c * inputs.L ** 2) ** (1.0 / (bc + 1.0))
    return c, a, c_tilde


def _nonconvex_admissible(inputs: BoundInputs, c: float) -> bool:
    # eta_t <= c/(t+1) for every t reduces to the t = 0 comparison.
    return inputs.stepsize.kind == "decaying" and inputs.stepsize.value <= c


def bound_nonconvex(inputs: BoundInputs) -> BoundReport:
    """Bounded nonconvex loss with eta_t <= c/(t+1)."""
    c, a, c_tilde = _nonconvex_pieces(inputs)
    value = c_tilde * inputs.T ** a / (inputs.n * inputs.m ** (1.0 - a))
    admissible = _nonconvex_admissible(inputs, c) and inputs.topology.min_diag > 0.0
    return BoundReport("nonconvex", value, admissible, _echo(inputs))


def bound_data_dependent(inputs: BoundInputs) -> BoundReport:
    """Four-term data-dependent convex bound using the C_W mixing series."""
    if inputs.stepsize.kind != "constant":
        raise ValueError("data-dependent bound requires a constant stepsize")
    if inputs.sigma is None or inputs.init_gap is None:
        raise ValueError("data-dependent bound requires sigma and init_gap")
    if not inputs.topology.cw_converged:
        raise ValueError(
            "the C_W series did not converge within its term budget "
            f"(partial sum {inputs.topology.cw_limit:.6g} after "
            f"{len(inputs.topology.cw_partial_sums) - 1} terms); refusing to use a wrong limit")
    L, beta, sigma = inputs.L, inputs.beta, inputs.sigma
    eta, T, mn = inputs.stepsize.value, inputs.T, inputs.m * inputs.n
    value = (2.0 * np.sqrt(2.0) * L * np.sqrt(T * eta) * np.sqrt(inputs.init_gap) / mn
             + 2.0 * L * sigma * eta * T / mn
             + 2.0 * L * np.sqrt(beta) * sigma * eta ** 1.5 * T / mn
             + 2.0 * L ** 2 * T * eta * inputs.topology.cw_limit / mn)
    admissible = inputs.stepsize.max_first(inputs.T) <= 2.0 * inputs.topology.min_diag / inputs.beta
    return BoundReport("data_dependent", float(value), admissible, _echo(inputs))


def bound_worst_convex(inputs: BoundInputs) -> BoundReport:
    """Worst agent, convex: the averaged bound times the connectivity sum."""
    value = bound_convex(inputs).value * inputs.topology.connectivity_sum
    admissible = inputs.stepsize.max_first(inputs.T) <= 2.0 / inputs.beta
    return BoundReport("worst_convex", value, admissible, _echo(inputs))


def bound_worst_convex_spectral(inputs: BoundInputs) -> BoundReport:
    """Looser worst-case convex bound through the spectral gap rho."""
    graph_factor = 1.0 + inputs.m * (1.0 - inputs.topology.spectral_gap)
    value = bound_convex(inputs).value * graph_factor
    admissible = inputs.stepsize.max_first(inputs.T) <= 2.0 / inputs.beta
    return BoundReport("worst_convex_spectral", value, admissible, _echo(inputs))


def bound_worst_strongly(inputs: BoundInputs) -> BoundReport:
    """Worst agent, strongly convex: 4 L^2/(mu m n) times the connectivity sum."""
    value = bound_strongly(inputs).value * inputs.topology.connectivity_sum
    admissible = (inputs.stepsize.kind == "constant"
                  and inputs.stepsize.value <= 1.0 / inputs.beta)
    return BoundReport("worst_strongly_convex", value, admissible, _echo(inputs))


def bound_worst_nonconvex(inputs: BoundInputs) -> BoundReport:
    """Worst agent, bounded nonconvex, through the max norm of W."""
    c, a, c_tilde = _nonconvex_pieces(inputs)
    value = c_tilde * inputs.T ** a / inputs.n * inputs.topology.max_norm ** (1.0 - a)
    return BoundReport("worst_nonconvex", value, _nonconvex_admissible(inputs, c),
                       _echo(inputs))


@dataclass(frozen=True)
class StepsizeChecks:
    """Report-only admissibility of the schedule under each regime's condition."""

    convex: bool            # eta_t <= 2 min_k(W_kk) / beta
    strongly_convex: bool   # constant eta <= min_k(W_kk) / beta
    nonconvex: bool         # eta_t <= c/(t+1) and min_k(W_kk) > 0
    lambda_min: bool        # eta_t <= lambda_min(W) / beta


def check_stepsize(inputs: BoundInputs) -> StepsizeChecks:
    """Evaluate every stepsize condition against the graph diagnostics.

    The ``lambda_min`` condition is the strictest of the diagonal-based ones:
    lambda_min(W) <= min_k W_kk for symmetric W, so passing it implies
    passing the strongly convex (and hence convex) checks.
    """
    top = inputs.topology
    horizon = max(inputs.T, 1)
    eta_max = inputs.stepsize.max_first(horizon)
    c = inputs.decay_constant()
    nonconvex = (c is not None and inputs.stepsize.kind == "decaying"
                 and inputs.stepsize.value <= c and top.min_diag > 0.0)
    return StepsizeChecks(
        convex=eta_max <= 2.0 * top.min_diag / inputs.beta,
        strongly_convex=(inputs.stepsize.kind == "constant"
                         and eta_max <= top.min_diag / inputs.beta),
        nonconvex=nonconvex,
        lambda_min=eta_max <= top.smallest_eigenvalue / inputs.beta,
    )


def compute_init_gap(loss, dataset: FederatedDataset, theta0: np.ndarray,
                     grad_tol: float = 1e-10, max_iter: int = 200_000) -> float:
    """Average local optimization gap (1/m) sum_j [R_Sj(theta0) - R_Sj(theta*_j)].

    Ridge: theta*_j solves the regularized normal equations exactly; if it
    falls outside the projection ball it is projected there first (a warning
    flags this, since the gap is then measured at the projected point).
    Logistic: theta*_j is approximated by full-batch gradient descent down to
    gradient norm ``grad_tol``.
    """
    theta0 = np.asarray(theta0, dtype=np.float64)
    gaps = []
    for j in range(dataset.m):
        X, Y = dataset.features[j], dataset.labels[j]
        if isinstance(loss, RidgeLoss):
            nloc = len(Y)
            lhs = X.T @ X / nloc + loss.mu * np.eye(dataset.d)
            star = np.linalg.solve(lhs, X.T @ Y / nloc)
            if np.linalg.norm(star) > loss.projection_radius:
                star = project_ball(star, loss.projection_radius)
                warnings.warn("local ridge minimizer fell outside the projection ball; "
                              "gap measured at the projected point", stacklevel=2)
        elif isinstance(loss, LogisticLoss):
            star = _logistic_local_minimizer(loss, X, Y, theta0, grad_tol, max_iter)
        else:
            raise ValueError(f"no local-minimizer oracle for loss kind {loss.kind!r}")
        gaps.append(loss.risk(theta0, X, Y) - loss.risk(star, X, Y))
    return float(np.mean(gaps))


def _logistic_local_minimizer(loss: LogisticLoss, X: np.ndarray, Y: np.ndarray,
                              theta0: np.ndarray, grad_tol: float, max_iter: int) -> np.ndarray:
    beta = loss.constants(X, Y).beta
    if beta == 0.0:
        return theta0.copy()
    step = 1.0 / beta
    theta = theta0.copy()
    for _ in range(max_iter):
        g = loss.grad_mean(theta, X, Y)
        if float(np.linalg.norm(g)) <= grad_tol:
            break
        theta = theta - step * g
    return theta


def empirical_sigma(loss, dataset: FederatedDataset, trajectory: np.ndarray) -> float:
    """Gradient-variance bound, maximized over agents and visited iterates.

    A global supremum over all parameters is unobtainable, so this reports
    the supremum over the trajectory actually visited; it under-estimates the
    assumption's constant.
    """
    worst = 0.0
    T_plus_1, m, _ = trajectory.shape
    for t in range(T_plus_1):
        for j in range(m):
            X, Y = dataset.features[j], dataset.labels[j]
            theta = trajectory[t, j]
            grads = loss.grad_each(np.broadcast_to(theta, X.shape), X, Y)
            centered = grads - loss.grad_mean(theta, X, Y)
            worst = max(worst, float(np.mean(np.sum(centered * centered, axis=1))))
    return float(np.sqrt(worst))


def descent_lemma_defect(trajectory: np.ndarray, loss, dataset: FederatedDataset,
                         W: MixingMatrix, eta: float, beta: float,
                         sigma: float | None = None) -> float:
    """LHS minus RHS of the telescoped descent inequality on one trajectory.

    LHS: (eta/m) sum_t sum_j ||grad R_Sj(theta_j^t)||^2 for t < T.
    RHS: (2/m) sum_j [R_Sj(theta_j^0) - R_Sj(theta_j^T)] + T beta sigma^2 eta^2
         + sum_t (1/(m eta)) sum_j ||(W theta^t)_j - theta_j^t||^2.
    Negative or ~zero in Monte Carlo mean when the lemma applies.
    """
    T = trajectory.shape[0] - 1
    m = dataset.m
    if sigma is None:
        sigma = empirical_sigma(loss, dataset, trajectory)

    grad_sq = 0.0
    for t in range(T):
        for j in range(m):
            g = loss.grad_mean(trajectory[t, j], dataset.features[j], dataset.labels[j])
            grad_sq += float(np.dot(g, g))
    lhs = eta * grad_sq / m

    drop = 0.0
    for j in range(m):
        drop += (loss.risk(trajectory[0, j], dataset.features[j], dataset.labels[j])
                 - loss.risk(trajectory[T, j], dataset.features[j], dataset.labels[j]))
    mix_sq = 0.0
    for t in range(T):
        mixed = W.weights @ trajectory[t]
        mix_sq += float(np.sum((mixed - trajectory[t]) ** 2))
    rhs = 2.0 * drop / m + T * beta * sigma ** 2 * eta ** 2 + mix_sq / (m * eta)
    return lhs - rhs


def local_optimization_error_bound(trajectory: np.ndarray, loss, dataset: FederatedDataset,
                                   stepsize: Stepsize, L: float, sigma: float) -> float:
    """Generalization bound through the local optimization errors of one run.

    (2 L sigma / (m n)) sum_t eta_t
      + (2 L / (m n)) sum_t eta_t (1/m) sum_j ||grad R_Sj(theta_j^t)||.
    """
    T = trajectory.shape[0] - 1
    m, n = dataset.m, dataset.n
    weighted_norms = 0.0
    for t in range(T):
        norms = 0.0
        for j in range(m):
            g = loss.grad_mean(trajectory[t, j], dataset.features[j], dataset.labels[j])
            norms += float(np.linalg.norm(g))
        weighted_norms += stepsize.at(t) * norms / m
    return (2.0 * L * sigma / (m * n)) * stepsize.sum_first(T) + (2.0 * L / (m * n)) * weighted_norms
