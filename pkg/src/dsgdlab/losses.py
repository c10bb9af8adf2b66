"""Loss models with explicit regularity constants.

Three concrete losses cover the regimes the analysis distinguishes:

* ``LogisticLoss`` -- binary cross-entropy on a linear score, convex.
* ``RidgeLoss`` -- squared error plus a Tikhonov term, mu-strongly convex,
  only Lipschitz over a centered projection ball of the given radius.
* ``BoundedNonconvexLoss`` -- ``1 - exp(-(x.theta - y)^2 / 2)``, a smooth
  non-convex loss with values in [0, 1).

Each loss exposes a pointwise value/gradient, vectorized risk helpers used by
the simulation engine, and closed-form Lipschitz (L) and smoothness (beta)
constants computed from a dataset. Constants are per-experiment: features are
unbounded Gaussians, so the empirical max over the observed data stands in
for the global constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundedNonconvexLoss",
    "LogisticLoss",
    "LossConstants",
    "RidgeLoss",
    "estimate_constants",
    "make_loss",
    "project_ball",
]


def _sigmoid(u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u, dtype=np.float64)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def _softplus(u: np.ndarray) -> np.ndarray:
    # log(1 + e^u) without overflow on either tail
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


@dataclass(frozen=True)
class LossConstants:
    """Dataset-empirical Lipschitz and smoothness constants."""

    L: float
    beta: float


class LogisticLoss:
    """Binary logistic loss -y log s(x.theta) - (1-y) log(1 - s(x.theta)).

    Evaluated through softplus so values and gradients stay finite for any
    finite inputs. Gradient: (sigmoid(x.theta) - y) x.
    """

    kind = "logistic"
    convexity = "convex"
    mu = None

    def __init__(self, projection_radius: float | None = None):
        self.projection_radius = projection_radius

    def value(self, theta: np.ndarray, x: np.ndarray, y: float) -> float:
        u = float(np.dot(x, theta))
        return float(y * _softplus(np.float64(-u)) + (1.0 - y) * _softplus(np.float64(u)))

    def grad(self, theta: np.ndarray, x: np.ndarray, y: float) -> np.ndarray:
        u = np.dot(x, theta)
        return (float(_sigmoid(np.atleast_1d(u))[0]) - y) * np.asarray(x, dtype=np.float64)

    def values(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        u = X @ theta
        return Y * _softplus(-u) + (1.0 - Y) * _softplus(u)

    def risk(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> float:
        return float(self.values(theta, X, Y).mean())

    def risk_many(self, thetas: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        u = thetas @ X.T  # (k, N)
        return (Y * _softplus(-u) + (1.0 - Y) * _softplus(u)).mean(axis=1)

    def grad_each(self, thetas: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        u = np.einsum("...d,...d->...", thetas, X)
        return (_sigmoid(u) - Y)[..., None] * X

    def grad_mean(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return X.T @ (_sigmoid(X @ theta) - Y) / len(Y)

    def constants(self, X: np.ndarray, Y: np.ndarray) -> LossConstants:
        # |sigmoid - y| <= 1 gives L = max ||x||; sigmoid' <= 1/4 gives beta.
        norms = np.linalg.norm(X, axis=1)
        mx = float(norms.max()) if len(norms) else 0.0
        return LossConstants(L=mx, beta=mx * mx / 4.0)


class RidgeLoss:
    """Squared error with a Tikhonov term: (x.theta - y)^2 / 2 + mu ||theta||^2 / 2.

    Strongly convex for mu > 0, but only Lipschitz over a bounded domain, so
    a projection radius is mandatory; the declared L is valid on that ball.
    """

    kind = "ridge_quadratic"

    def __init__(self, mu: float, projection_radius: float | None):
        if projection_radius is None or projection_radius <= 0:
            raise ValueError("ridge loss needs a positive projection_radius: "
                             "its Lipschitz constant only exists on a bounded domain")
        if mu < 0:
            raise ValueError(f"mu must be >= 0, got {mu}")
        self.mu = float(mu)
        self.projection_radius = float(projection_radius)
        self.convexity = "strongly_convex" if mu > 0 else "convex"

    def value(self, theta: np.ndarray, x: np.ndarray, y: float) -> float:
        r = float(np.dot(x, theta)) - y
        return 0.5 * r * r + 0.5 * self.mu * float(np.dot(theta, theta))

    def grad(self, theta: np.ndarray, x: np.ndarray, y: float) -> np.ndarray:
        r = float(np.dot(x, theta)) - y
        return r * np.asarray(x, dtype=np.float64) + self.mu * np.asarray(theta, dtype=np.float64)

    def values(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        r = X @ theta - Y
        return 0.5 * r * r + 0.5 * self.mu * float(np.dot(theta, theta))

    def risk(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> float:
        return float(self.values(theta, X, Y).mean())

    def risk_many(self, thetas: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        r = thetas @ X.T - Y
        return (0.5 * r * r).mean(axis=1) + 0.5 * self.mu * np.einsum("kd,kd->k", thetas, thetas)

    def grad_each(self, thetas: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        r = np.einsum("...d,...d->...", thetas, X) - Y
        return r[..., None] * X + self.mu * thetas

    def grad_mean(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return X.T @ (X @ theta - Y) / len(Y) + self.mu * theta

    def constants(self, X: np.ndarray, Y: np.ndarray) -> LossConstants:
        norms = np.linalg.norm(X, axis=1)
        mx = float(norms.max()) if len(norms) else 0.0
        my = float(np.abs(Y).max()) if len(Y) else 0.0
        r = self.projection_radius
        return LossConstants(L=mx * (mx * r + my) + self.mu * r, beta=mx * mx + self.mu)


class BoundedNonconvexLoss:
    """Bounded smooth non-convex loss 1 - exp(-(x.theta - y)^2 / 2) in [0, 1).

    Gradient (x.theta - y) exp(-(x.theta - y)^2 / 2) x. The scalar map
    u -> u exp(-u^2/2) peaks at |u| = 1 with value e^{-1/2}, giving
    L = e^{-1/2} max ||x||; its derivative (1 - u^2) exp(-u^2/2) is bounded
    by 1, giving beta = max ||x||^2.
    """

    kind = "bounded_nonconvex"
    convexity = "nonconvex"
    mu = None
    projection_radius = None

    @staticmethod
    def _core(r: np.ndarray) -> np.ndarray:
        return 1.0 - np.exp(-0.5 * r * r)

    def value(self, theta: np.ndarray, x: np.ndarray, y: float) -> float:
        r = float(np.dot(x, theta)) - y
        return float(self._core(np.float64(r)))

    def grad(self, theta: np.ndarray, x: np.ndarray, y: float) -> np.ndarray:
        r = float(np.dot(x, theta)) - y
        return r * np.exp(-0.5 * r * r) * np.asarray(x, dtype=np.float64)

    def values(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return self._core(X @ theta - Y)

    def risk(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> float:
        return float(self.values(theta, X, Y).mean())

    def risk_many(self, thetas: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return self._core(thetas @ X.T - Y).mean(axis=1)

    def grad_each(self, thetas: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        r = np.einsum("...d,...d->...", thetas, X) - Y
        return (r * np.exp(-0.5 * r * r))[..., None] * X

    def grad_mean(self, theta: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        r = X @ theta - Y
        return X.T @ (r * np.exp(-0.5 * r * r)) / len(Y)

    def constants(self, X: np.ndarray, Y: np.ndarray) -> LossConstants:
        norms = np.linalg.norm(X, axis=1)
        mx = float(norms.max()) if len(norms) else 0.0
        return LossConstants(L=np.exp(-0.5) * mx, beta=mx * mx)


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, tuple):
        X, Y = data
        return np.asarray(X, dtype=np.float64), np.asarray(Y, dtype=np.float64)
    feats = np.asarray(data.features, dtype=np.float64)
    labels = np.asarray(data.labels, dtype=np.float64)
    return feats.reshape(-1, feats.shape[-1]), labels.reshape(-1)


def estimate_constants(loss, data) -> LossConstants:
    """Closed-form per-sample L and beta, maximized over a dataset.

    ``data`` may be a ``(X, Y)`` pair, a ``SampleBatch``, or a
    ``FederatedDataset``.
    """
    X, Y = _as_xy(data)
    if X.size == 0:
        raise ValueError("cannot estimate constants from an empty dataset")
    return loss.constants(X, Y)


def project_ball(theta: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the centered ball of the given radius."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    theta = np.asarray(theta, dtype=np.float64)
    norm = float(np.linalg.norm(theta))
    if norm <= radius:
        return theta.copy()
    return theta * (radius / norm)


_LOSS_KINDS = ("logistic", "ridge_quadratic", "bounded_nonconvex")


def make_loss(kind: str, mu: float | None = None, projection_radius: float | None = None):
    """Build a loss model from config-style parameters."""
    if kind == "logistic":
        return LogisticLoss(projection_radius=projection_radius)
    if kind == "ridge_quadratic":
        if mu is None:
            raise ValueError("ridge_quadratic loss requires mu")
        return RidgeLoss(mu=mu, projection_radius=projection_radius)
    if kind == "bounded_nonconvex":
        return BoundedNonconvexLoss()
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {_LOSS_KINDS}")
