"""Doubly stochastic mixing matrices and their graph diagnostics.

The mixing matrix W encodes one gossip round: agent k replaces its parameter
vector with the row-k-weighted average of its neighbors'. Everything
downstream (stability estimates, generalization bounds) consumes a handful of
graph quantities derived here: the spectral gap 1 - |lambda_2|, the max norm
sup_kj W_kj, the connectivity sum sum_j sup_k W_kj, the minimum self-weight
min_k W_kk, the smallest eigenvalue, and the mixing series
C_W = sum_s ||W^s - W^(s+1)||_2.

All constructors return exactly symmetric matrices. ``diagnostics`` rejects
asymmetric input: the spectral quantities are only defined here for a real
spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DOUBLY_STOCHASTIC_TOL",
    "MixingMatrix",
    "TopologyDiagnostics",
    "ValidationReport",
    "diagnostics",
    "make_complete_uniform",
    "make_identity",
    "make_lazy_complete",
    "make_ring",
    "matrix_power",
    "mixing_matrix",
    "validate",
]

DOUBLY_STOCHASTIC_TOL = 1e-9
SYMMETRY_TOL = 1e-12
# Eigenvalues this close to 1 belong to the stationary part of the spectrum
# when summing the C_W series; 1e-9 matches the double-stochasticity tolerance
# of the matrices themselves.
UNIT_EIGENVALUE_TOL = 1e-9


@dataclass(frozen=True)
class MixingMatrix:
    """A validated doubly stochastic gossip weight matrix."""

    m: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", np.ascontiguousarray(self.weights, dtype=np.float64))
        self.weights.setflags(write=False)

    @property
    def symmetric(self) -> bool:
        return bool(np.abs(self.weights - self.weights.T).max() <= SYMMETRY_TOL)


@dataclass(frozen=True)
class ValidationReport:
    """Report-only double-stochasticity check; never raises."""

    ok: bool
    max_row_deviation: float
    max_col_deviation: float
    min_entry: float
    max_entry: float
    failures: tuple[str, ...]


@dataclass(frozen=True)
class TopologyDiagnostics:
    """Graph quantities entering the stability and generalization bounds."""

    spectral_gap: float
    max_norm: float
    connectivity_sum: float
    min_diag: float
    smallest_eigenvalue: float
    cw_partial_sums: tuple[float, ...]
    cw_limit: float
    cw_converged: bool


def validate(weights: np.ndarray | MixingMatrix, tol: float = DOUBLY_STOCHASTIC_TOL) -> ValidationReport:
    """Check that a square matrix is doubly stochastic with entries in [0, 1].

    Accepts raw arrays so that invalid candidates can be inspected; the
    report lists every violated property instead of raising.
    """
    a = np.asarray(getattr(weights, "weights", weights), dtype=np.float64)
    failures: list[str] = []
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return ValidationReport(False, math.inf, math.inf, math.nan, math.nan,
                                (f"not a square matrix: shape {a.shape}",))
    row_dev = float(np.abs(a.sum(axis=1) - 1.0).max())
    col_dev = float(np.abs(a.sum(axis=0) - 1.0).max())
    min_entry = float(a.min())
    max_entry = float(a.max())
    if row_dev > tol:
        failures.append(f"row sums deviate from 1 by up to {row_dev:.3e}")
    if col_dev > tol:
        failures.append(f"column sums deviate from 1 by up to {col_dev:.3e}")
    if min_entry < -tol:
        failures.append(f"negative entry {min_entry:.3e}")
    if max_entry > 1.0 + tol:
        failures.append(f"entry above 1: {max_entry:.3e}")
    return ValidationReport(not failures, row_dev, col_dev, min_entry, max_entry, tuple(failures))


def mixing_matrix(weights: np.ndarray) -> MixingMatrix:
    """Wrap an array as a MixingMatrix, rejecting invalid weights."""
    report = validate(weights)
    if not report.ok:
        raise ValueError("not a doubly stochastic mixing matrix: " + "; ".join(report.failures))
    a = np.asarray(weights, dtype=np.float64)
    return MixingMatrix(m=a.shape[0], weights=a)


def make_complete_uniform(m: int) -> MixingMatrix:
    """Complete graph with uniform weights 1/m."""
    if m < 1:
        raise ValueError(f"agent count must be >= 1, got {m}")
    return mixing_matrix(np.full((m, m), 1.0 / m))


def make_identity(m: int) -> MixingMatrix:
    """Identity graph: no communication, m independent local SGD runs."""
    if m < 1:
        raise ValueError(f"agent count must be >= 1, got {m}")
    return mixing_matrix(np.eye(m))


def make_ring(m: int) -> MixingMatrix:
    """Circle graph with self-edges, all three weights equal to 1/3."""
    if m < 3:
        raise ValueError(f"ring graph needs m >= 3 so the 1/3 self-weight fits, got {m}")
    w = np.zeros((m, m))
    for k in range(m):
        w[k, k] = w[k, (k + 1) % m] = w[k, (k - 1) % m] = 1.0 / 3.0
    return mixing_matrix(w)


def make_lazy_complete(m: int, self_weight: float) -> MixingMatrix:
    """Complete graph with diagonal ``self_weight``, rest uniform.

    ``self_weight`` may be as low as 1/m (which recovers the uniform complete
    graph) and must stay below 1.
    """
    if m < 2:
        raise ValueError(f"lazy complete graph needs m >= 2, got {m}")
    if not (1.0 / m <= self_weight < 1.0):
        raise ValueError(f"self_weight must lie in [1/m, 1) = [{1.0 / m:.6g}, 1), got {self_weight}")
    off = (1.0 - self_weight) / (m - 1)
    w = np.full((m, m), off)
    np.fill_diagonal(w, self_weight)
    return mixing_matrix(w)


def matrix_power(W: MixingMatrix, t: int) -> MixingMatrix:
    """W^t, revalidated: powers of doubly stochastic matrices stay doubly stochastic."""
    if t < 0:
        raise ValueError(f"power must be >= 0, got {t}")
    return mixing_matrix(np.linalg.matrix_power(W.weights, t))


def _require_symmetric(W: MixingMatrix, what: str) -> None:
    if not W.symmetric:
        raise ValueError(
            f"{what} requires a symmetric mixing matrix (real spectrum); "
            f"got max |W - W^T| = {np.abs(W.weights - W.weights.T).max():.3e}"
        )


def diagnostics(W: MixingMatrix, cw_tol: float = 1e-12, cw_max_terms: int = 10_000) -> TopologyDiagnostics:
    """Compute all graph quantities used by the bounds.

    The C_W series is summed through the eigenvalues: for symmetric W,
    ||W^s - W^(s+1)||_2 = max over eigenvalues lambda != 1 of
    |lambda|^s |1 - lambda|. Terms are accumulated until one falls below
    ``cw_tol`` (converged) or ``cw_max_terms`` terms have been added
    (reported as non-converged rather than returning a wrong limit).
    """
    if cw_tol <= 0:
        raise ValueError("cw_tol must be positive")
    _require_symmetric(W, "diagnostics (spectral gap and C_W)")
    w = W.weights
    m = W.m

    eigs = np.linalg.eigvalsh(w)
    smallest = float(eigs[0])
    if m == 1:
        # Single agent: the 1x1 matrix is simultaneously the identity and the
        # complete graph; the stationary direction is the whole space.
        spectral_gap = 1.0
    else:
        moduli = np.sort(np.abs(eigs))[::-1]
        spectral_gap = 1.0 - float(moduli[1])

    # Eigenvalues numerically equal to 1 contribute nothing to W^s - W^(s+1).
    lam = eigs[np.abs(eigs - 1.0) > UNIT_EIGENVALUE_TOL]
    lam_abs = np.minimum(np.abs(lam), 1.0)
    one_minus = np.abs(1.0 - lam)

    partial_sums = [0.0]
    converged = False
    if lam.size == 0:
        converged = True
    else:
        powers = np.ones_like(lam_abs)
        for _ in range(cw_max_terms):
            a_s = float((powers * one_minus).max())
            if a_s < cw_tol:
                converged = True
                break
            partial_sums.append(partial_sums[-1] + a_s)
            powers *= lam_abs

    return TopologyDiagnostics(
        spectral_gap=spectral_gap,
        max_norm=float(w.max()),
        connectivity_sum=math.fsum(w.max(axis=0)),
        min_diag=float(w.diagonal().min()),
        smallest_eigenvalue=smallest,
        cw_partial_sums=tuple(partial_sums),
        cw_limit=partial_sums[-1],
        cw_converged=converged,
    )
