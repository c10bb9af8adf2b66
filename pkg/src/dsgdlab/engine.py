"""Deterministic execution of gossip-averaged SGD, Variants A and B.

One iteration: every agent k samples one index I_k uniformly from its local
dataset, then

* Variant A: takes the gradient step first and mixes the results,
  ``theta_k <- sum_l W_kl (theta_l - eta grad_l)``;
* Variant B: mixes first and applies the gradient taken at the pre-mix local
  parameter, ``theta_k <- sum_l W_kl theta_l - eta grad_k``.

The projected extension applies the Euclidean ball projection per agent
before mixing (A) or to the combined update (B).

The sample schedule is materialized up front from the seed (one uniform per
agent per step, index = floor(u * n), a rejection-free bounded mapping), so
two runs given the same seed are bit-identical, and coupled paired runs on
datasets differing in one point share the exact same index draws. That shared
schedule is what turns the proofs' almost-sure recursions into assertable
properties of recorded trajectories.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .datagen import DataPoint, FederatedDataset
from .losses import estimate_constants
from .topology import MixingMatrix, validate

__all__ = [
    "DsgdConfig",
    "DsgdRun",
    "SampleSchedule",
    "Stepsize",
    "StepsizeAdmissibilityWarning",
    "average_iterate",
    "run",
    "run_paired",
    "simulate",
    "step_variant_a",
    "step_variant_b",
    "warn_if_stepsize_inadmissible",
]


class StepsizeAdmissibilityWarning(UserWarning):
    """The configured stepsize exceeds a stability bound's admissible range.

    The simulation itself stays valid; only the matching closed-form bound
    loses its guarantee.
    """


@dataclass(frozen=True)
class Stepsize:
    """Constant eta or decaying c/(t+1) stepsize schedule."""

    kind: str  # "constant" | "decaying"
    value: float

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "decaying"):
            raise ValueError(f"unknown stepsize kind {self.kind!r}")
        if self.kind == "constant" and self.value < 0:
            raise ValueError(f"constant stepsize must be >= 0, got {self.value}")
        if self.kind == "decaying" and self.value <= 0:
            raise ValueError(f"decay constant must be > 0, got {self.value}")

    @classmethod
    def constant(cls, eta: float) -> "Stepsize":
        return cls("constant", float(eta))

    @classmethod
    def decaying(cls, c: float) -> "Stepsize":
        return cls("decaying", float(c))

    def at(self, t: int) -> float:
        if self.kind == "constant":
            return self.value
        return self.value / (t + 1)

    def sum_first(self, T: int) -> float:
        """sum_{t=0}^{T-1} eta_t."""
        if self.kind == "constant":
            return self.value * T
        return float(self.value * np.sum(1.0 / np.arange(1, T + 1))) if T > 0 else 0.0

    def max_first(self, T: int) -> float:
        if T <= 0:
            return 0.0
        return self.value  # both schedules peak at t = 0


@dataclass(frozen=True)
class DsgdConfig:
    """Run configuration shared by every simulation entry point.

    ``init`` is the common starting parameter of all agents (zeros of the
    data dimension when omitted).
    """

    variant: str
    T: int
    stepsize: Stepsize
    seed: int
    projected: bool = False
    record_trajectory: bool = False
    init: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.variant not in ("A", "B"):
            raise ValueError(f"variant must be 'A' or 'B', got {self.variant!r}")
        if self.T < 0:
            raise ValueError(f"T must be >= 0, got {self.T}")


@dataclass(frozen=True)
class SampleSchedule:
    """Per-step, per-agent sample indices, fixed before the run starts."""

    indices: np.ndarray  # (T, m) int64 in [0, n)
    n: int

    @classmethod
    def from_seed(cls, seed: int, T: int, m: int, n: int) -> "SampleSchedule":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
        u = rng.random((T, m))
        idx = np.minimum((u * n).astype(np.int64), n - 1)
        return cls(indices=idx, n=n)


@dataclass(frozen=True)
class DsgdRun:
    """Final per-agent parameters plus optional full trajectory."""

    final_params: np.ndarray        # (m, d)
    average_final: np.ndarray       # (d,)
    schedule: SampleSchedule
    trajectory: np.ndarray | None = field(default=None)  # (T+1, m, d)


def _project_rows(rows: np.ndarray, radius: float) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=-1)
    over = norms > radius
    if np.any(over):
        rows = rows.copy()
        rows[over] *= (radius / norms[over])[:, None]
    return rows


def _check_step_shapes(theta_all: np.ndarray, x_row: np.ndarray, y_row: np.ndarray, W: MixingMatrix) -> None:
    if theta_all.shape != x_row.shape or y_row.shape != theta_all.shape[:-1]:
        raise ValueError(f"dimension mismatch: theta {theta_all.shape}, "
                         f"x {x_row.shape}, y {y_row.shape}")
    if theta_all.shape[0] != W.m:
        raise ValueError(f"{theta_all.shape[0]} agents but W is {W.m}x{W.m}")


def step_variant_a(theta_all: np.ndarray, W: MixingMatrix, loss, x_row: np.ndarray,
                   y_row: np.ndarray, eta: float, *, projected: bool = False,
                   radius: float | None = None) -> np.ndarray:
    """One gradient-then-mix step; ``x_row``/``y_row`` hold agent k's sample in row k."""
    _check_step_shapes(theta_all, x_row, y_row, W)
    local = theta_all - eta * loss.grad_each(theta_all, x_row, y_row)
    if projected:
        local = _project_rows(local, radius)
    return W.weights @ local


def step_variant_b(theta_all: np.ndarray, W: MixingMatrix, loss, x_row: np.ndarray,
                   y_row: np.ndarray, eta: float, *, projected: bool = False,
                   radius: float | None = None) -> np.ndarray:
    """One parallel mix-and-gradient step (gradient at the pre-mix parameter)."""
    _check_step_shapes(theta_all, x_row, y_row, W)
    mixed = W.weights @ theta_all - eta * loss.grad_each(theta_all, x_row, y_row)
    if projected:
        mixed = _project_rows(mixed, radius)
    return mixed


def simulate(W: MixingMatrix, loss, dataset: FederatedDataset, schedule: SampleSchedule,
             config: DsgdConfig) -> np.ndarray:
    """Run the configured variant and return the full trajectory (T+1, m, d)."""
    m, n, d = dataset.m, dataset.n, dataset.d
    T = config.T
    if schedule.indices.shape != (T, m) or schedule.n != n:
        raise ValueError(f"schedule shape {schedule.indices.shape} (n={schedule.n}) does not "
                         f"match T={T}, m={m}, n={n}")
    if config.projected and loss.projection_radius is None:
        raise ValueError("projected run requires a loss with a projection_radius")

    init = np.zeros(d) if config.init is None else np.asarray(config.init, dtype=np.float64)
    if init.shape != (d,):
        raise ValueError(f"init has shape {init.shape}, expected ({d},)")

    step = step_variant_a if config.variant == "A" else step_variant_b
    radius = loss.projection_radius
    agents = np.arange(m)
    X, Y = dataset.features, dataset.labels

    traj = np.empty((T + 1, m, d))
    theta = np.tile(init, (m, 1))
    traj[0] = theta
    for t in range(T):
        idx = schedule.indices[t]
        theta = step(theta, W, loss, X[agents, idx], Y[agents, idx], config.stepsize.at(t),
                     projected=config.projected, radius=radius)
        traj[t + 1] = theta
    return traj


def warn_if_stepsize_inadmissible(W: MixingMatrix, loss, dataset: FederatedDataset,
                                  config: DsgdConfig) -> None:
    """Warn (never raise) when the stepsize leaves the bounds' admissible ranges."""
    if config.T == 0:
        return
    eta_max = config.stepsize.max_first(config.T)
    if eta_max <= 0:
        return
    min_diag = float(W.weights.diagonal().min())
    if min_diag == 0.0:
        warnings.warn(
            "min_k W_kk = 0 with a positive stepsize: the admissible range "
            "eta_t <= 2 min_k(W_kk)/beta collapses to eta = 0, where the stability "
            "bound holds only trivially",
            StepsizeAdmissibilityWarning, stacklevel=2)
        return
    beta = estimate_constants(loss, dataset).beta
    if beta <= 0:
        return
    if getattr(loss, "convexity", None) == "strongly_convex":
        if config.stepsize.kind != "constant" or eta_max > min_diag / beta:
            warnings.warn(
                "stepsize exceeds the strongly-convex admissible range "
                "(constant eta <= min_k(W_kk)/beta)",
                StepsizeAdmissibilityWarning, stacklevel=2)
    elif getattr(loss, "convexity", None) == "convex":
        if eta_max > 2.0 * min_diag / beta:
            warnings.warn(
                "stepsize exceeds the convex admissible range (eta_t <= 2 min_k(W_kk)/beta)",
                StepsizeAdmissibilityWarning, stacklevel=2)


def _require_valid(W: MixingMatrix, dataset: FederatedDataset) -> None:
    report = validate(W)
    if not report.ok:
        raise ValueError("mixing matrix failed validation: " + "; ".join(report.failures))
    if dataset.m != W.m:
        raise ValueError(f"dataset has {dataset.m} agents but W is {W.m}x{W.m}")


def run(W: MixingMatrix, loss, dataset: FederatedDataset, config: DsgdConfig) -> DsgdRun:
    """Execute T steps with the seeded schedule; bit-identical per (inputs, seed)."""
    _require_valid(W, dataset)
    warn_if_stepsize_inadmissible(W, loss, dataset, config)
    schedule = SampleSchedule.from_seed(config.seed, config.T, dataset.m, dataset.n)
    traj = simulate(W, loss, dataset, schedule, config)
    return DsgdRun(final_params=traj[-1].copy(),
                   average_final=traj[-1].mean(axis=0),
                   schedule=schedule,
                   trajectory=traj if config.record_trajectory else None)


def run_paired(W: MixingMatrix, loss, dataset: FederatedDataset,
               swap: tuple[int, int, DataPoint], config: DsgdConfig
               ) -> tuple[DsgdRun, DsgdRun, np.ndarray]:
    """Coupled runs on S and on S with point (i, j) swapped, sharing one schedule.

    ``swap`` is ``(i, j, replacement)`` with 0-based point index i and agent
    index j. Returns both runs plus ``delta_trace`` of shape (T+1, m) holding
    ``||theta_k^(t) - theta~_k^(t)||`` for every step and agent.
    """
    i, j, point = swap
    if not (0 <= i < dataset.n):
        raise ValueError(f"swap point index i={i} out of range [0, {dataset.n})")
    if not (0 <= j < dataset.m):
        raise ValueError(f"swap agent index j={j} out of range [0, {dataset.m})")
    _require_valid(W, dataset)
    warn_if_stepsize_inadmissible(W, loss, dataset, config)

    swapped = dataset.with_swapped(i, j, point)
    schedule = SampleSchedule.from_seed(config.seed, config.T, dataset.m, dataset.n)
    traj_a = simulate(W, loss, dataset, schedule, config)
    traj_b = simulate(W, loss, swapped, schedule, config)
    delta = np.linalg.norm(traj_a - traj_b, axis=2)

    def _mk(traj: np.ndarray) -> DsgdRun:
        return DsgdRun(final_params=traj[-1].copy(),
                       average_final=traj[-1].mean(axis=0),
                       schedule=schedule,
                       trajectory=traj if config.record_trajectory else None)

    return _mk(traj_a), _mk(traj_b), delta


def average_iterate(run_result: DsgdRun) -> np.ndarray:
    """Arithmetic mean of the agents' final parameters."""
    return run_result.final_params.mean(axis=0)
