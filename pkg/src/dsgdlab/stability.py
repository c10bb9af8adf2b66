"""Monte Carlo estimators for model stability and generalization gaps.

Stability: redraw the federated dataset ``num_mc`` times; for every
repetition and every (point, agent) pair in the chosen subset, rerun the
algorithm on the dataset with that single point replaced by an i.i.d. copy,
sharing the sample schedule with the base run, and average the final
parameter displacement. Three displacement modes are computed on the same
coupled runs:

* ``averaged_iterate`` -- ||mean_k theta_k - mean_k theta~_k||,
* ``per_agent_mean``   -- (1/m) sum_k ||theta_k - theta~_k||,
* ``worst_model``      -- max_k ||theta_k - theta~_k||.

Generalization: redraw train and test sets per repetition, record the full
trajectory, and at every step average the per-agent (test risk - train risk)
gap; signed gaps are averaged across repetitions and runs first, and the
absolute value is taken last.

Seed layout: repetition r of a root seed s derives its streams via
``subseed(s, r, tag)`` with tags 0 = train data, 1 = swap pool,
2 = test data, (3, run_index) = sample schedule. The derivation never
involves the graph, so every graph sees the same datasets and schedules and
cross-graph comparisons are paired.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .datagen import DataPoint, FederatedDataset, MixtureSpec, partition, sample, subseed
from .engine import DsgdConfig, SampleSchedule, simulate, warn_if_stepsize_inadmissible
from .losses import estimate_constants
from .topology import MixingMatrix

__all__ = [
    "STABILITY_MODES",
    "GenError",
    "GenExperiment",
    "StabilityEstimate",
    "StabilityRun",
    "bootstrap_ordering_fraction",
    "estimate_generalization",
    "estimate_on_average_stability",
    "estimate_worst_model_stability",
    "generalization_experiment",
    "sample_pair_subset",
    "stability_experiment",
    "swap_dataset",
]

STABILITY_MODES = ("averaged_iterate", "per_agent_mean", "worst_model")

_TAG_TRAIN = 0
_TAG_SWAP = 1
_TAG_TEST = 2
_TAG_SCHEDULE = 3


def swap_dataset(dataset: FederatedDataset, i: int, j: int, point: DataPoint) -> FederatedDataset:
    """Copy of the dataset with agent j's point i replaced (0-based indices)."""
    return dataset.with_swapped(i, j, point)


def sample_pair_subset(n: int, m: int, size: int, seed: int) -> tuple[tuple[int, int], ...]:
    """Uniform subset of the (point, agent) grid, without replacement."""
    total = n * m
    if not 1 <= size <= total:
        raise ValueError(f"pair subset size must be in [1, {total}], got {size}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    flat = rng.permutation(total)[:size]
    return tuple(sorted((int(f) % n, int(f) // n) for f in flat))


@dataclass(frozen=True)
class StabilityEstimate:
    """Monte Carlo stability estimate with its sampling error."""

    epsilon_hat: float
    std_error: float
    num_pairs: int
    num_mc: int
    mode: str


@dataclass(frozen=True)
class StabilityRun:
    """Per-repetition stability values, kept for paired bound checks.

    ``values[mode]`` has one entry per Monte Carlo repetition; ``lipschitz``
    and ``smoothness`` hold the per-repetition empirical L and beta over the
    training set plus the swap pool (every gradient either coupled run can
    see), so bound and admissibility checks can pair each repetition with its
    own constants.
    """

    values: dict[str, np.ndarray]
    lipschitz: np.ndarray
    smoothness: np.ndarray
    sum_eta: float
    num_pairs: int
    num_mc: int

    def estimate(self, mode: str) -> StabilityEstimate:
        v = self.values[mode]
        se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
        return StabilityEstimate(epsilon_hat=float(v.mean()), std_error=se,
                                 num_pairs=self.num_pairs, num_mc=self.num_mc, mode=mode)


def stability_experiment(W: MixingMatrix, loss, spec: MixtureSpec, n: int,
                         config: DsgdConfig, num_mc: int,
                         pair_subset: tuple[tuple[int, int], ...] | None = None,
                         threads: int = 1) -> StabilityRun:
    """Coupled-run stability experiment over ``num_mc`` dataset redraws.

    ``pair_subset`` lists 0-based (i, j) pairs; the full n x m grid when
    omitted. The base trajectory is simulated once per repetition and reused
    against every swapped rerun (all of them share the repetition's
    schedule).
    """
    if num_mc < 1:
        raise ValueError(f"num_mc must be >= 1, got {num_mc}")
    m = W.m
    if pair_subset is None:
        pairs = tuple((i, j) for j in range(m) for i in range(n))
    else:
        pairs = tuple(pair_subset)
        if not pairs:
            raise ValueError("pair_subset must not be empty")
        for (i, j) in pairs:
            if not (0 <= i < n and 0 <= j < m):
                raise ValueError(f"pair ({i}, {j}) outside the {n} x {m} grid")

    def _rep(rep: int):
        train = partition(sample(spec, m * n, subseed(config.seed, rep, _TAG_TRAIN)), m, n)
        swap_pool = partition(sample(spec, m * n, subseed(config.seed, rep, _TAG_SWAP)), m, n)
        schedule = SampleSchedule.from_seed(subseed(config.seed, rep, _TAG_SCHEDULE, 0),
                                            config.T, m, n)
        base = simulate(W, loss, train, schedule, config)
        acc = dict.fromkeys(STABILITY_MODES, 0.0)
        for (i, j) in pairs:
            swapped = train.with_swapped(i, j, swap_pool.point(j, i))
            other = simulate(W, loss, swapped, schedule, config)
            d_final = np.linalg.norm(base[-1] - other[-1], axis=1)
            acc["per_agent_mean"] += float(d_final.mean())
            acc["worst_model"] += float(d_final.max())
            acc["averaged_iterate"] += float(np.linalg.norm(base[-1].mean(axis=0)
                                                            - other[-1].mean(axis=0)))
        feats = np.concatenate([train.features.reshape(-1, train.d),
                                swap_pool.features.reshape(-1, train.d)])
        labs = np.concatenate([train.labels.reshape(-1), swap_pool.labels.reshape(-1)])
        consts = estimate_constants(loss, (feats, labs))
        return rep, {mode: acc[mode] / len(pairs) for mode in STABILITY_MODES}, consts

    # Admissibility checked once on the first repetition's dataset.
    first_train = partition(sample(spec, m * n, subseed(config.seed, 0, _TAG_TRAIN)), m, n)
    warn_if_stepsize_inadmissible(W, loss, first_train, config)

    results = _map_deterministic(_rep, range(num_mc), threads)
    values = {mode: np.array([results[r][0][mode] for r in range(num_mc)])
              for mode in STABILITY_MODES}
    lipschitz = np.array([results[r][1].L for r in range(num_mc)])
    smoothness = np.array([results[r][1].beta for r in range(num_mc)])
    return StabilityRun(values=values, lipschitz=lipschitz, smoothness=smoothness,
                        sum_eta=config.stepsize.sum_first(config.T),
                        num_pairs=len(pairs), num_mc=num_mc)


def _map_deterministic(fn, items, threads: int) -> dict:
    """Run independent jobs, possibly on threads, and key results by job id."""
    out = {}
    if threads <= 1:
        for it in items:
            key, *rest = fn(it)
            out[key] = tuple(rest)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for key, *rest in pool.map(fn, items):
                out[key] = tuple(rest)
    return out


def estimate_on_average_stability(W: MixingMatrix, loss, spec: MixtureSpec, n: int,
                                  config: DsgdConfig, num_mc: int,
                                  pair_subset=None, mode: str = "per_agent_mean",
                                  threads: int = 1) -> StabilityEstimate:
    """On-average model stability estimate (averaged-iterate or per-agent-mean)."""
    if mode not in ("averaged_iterate", "per_agent_mean"):
        raise ValueError(f"on-average stability mode must be averaged_iterate or "
                         f"per_agent_mean, got {mode!r}")
    return stability_experiment(W, loss, spec, n, config, num_mc,
                                pair_subset=pair_subset, threads=threads).estimate(mode)


def estimate_worst_model_stability(W: MixingMatrix, loss, spec: MixtureSpec, n: int,
                                   config: DsgdConfig, num_mc: int,
                                   pair_subset=None, threads: int = 1) -> StabilityEstimate:
    """Worst-model stability: supremum over agents inside the pair average."""
    return stability_experiment(W, loss, spec, n, config, num_mc,
                                pair_subset=pair_subset, threads=threads).estimate("worst_model")


@dataclass(frozen=True)
class GenError:
    """|mean signed generalization gap| per iteration; ``final`` is the last entry."""

    per_iteration: np.ndarray  # (T+1,)
    final: float
    reps: int


@dataclass(frozen=True)
class GenExperiment:
    """Signed per-iteration generalization gaps for several graphs.

    ``signed[name]`` has shape (reps, runs, T+1). All graphs share the same
    per-repetition train/test draws and per-run schedules.
    """

    graph_names: tuple[str, ...]
    signed: dict[str, np.ndarray]

    @property
    def reps(self) -> int:
        return self.signed[self.graph_names[0]].shape[0]

    @property
    def runs(self) -> int:
        return self.signed[self.graph_names[0]].shape[1]

    def summary(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """(|mean signed gap| per t, standard error per t) over reps x runs."""
        flat = self.signed[name].reshape(-1, self.signed[name].shape[2])
        mean = flat.mean(axis=0)
        if flat.shape[0] > 1:
            se = flat.std(axis=0, ddof=1) / np.sqrt(flat.shape[0])
        else:
            se = np.zeros_like(mean)
        return np.abs(mean), se

    def gen_error(self, name: str) -> GenError:
        abs_mean, _ = self.summary(name)
        return GenError(per_iteration=abs_mean, final=float(abs_mean[-1]), reps=self.reps)

    def final_signed_by_rep(self, name: str) -> np.ndarray:
        """Per-repetition signed final gap (runs averaged within the repetition)."""
        return self.signed[name][:, :, -1].mean(axis=1)


def generalization_experiment(graphs: list[tuple[str, MixingMatrix]], loss, spec: MixtureSpec,
                              n: int, config: DsgdConfig, reps: int, runs: int,
                              test_size: int, threads: int = 1) -> GenExperiment:
    """Train/test gap curves for each graph under shared data and schedules."""
    if reps < 1 or runs < 1 or test_size < 1:
        raise ValueError("reps, runs, and test_size must all be >= 1")
    names = tuple(name for name, _ in graphs)
    if len(set(names)) != len(names):
        raise ValueError("graph names must be unique")
    m = graphs[0][1].m
    for name, W in graphs:
        if W.m != m:
            raise ValueError(f"graph {name!r} has m={W.m}, expected {m}")
    T = config.T

    def _rep(rep: int):
        train = partition(sample(spec, m * n, subseed(config.seed, rep, _TAG_TRAIN)), m, n)
        test = sample(spec, test_size, subseed(config.seed, rep, _TAG_TEST))
        train_flat = train.flatten()
        gaps = np.empty((len(graphs), runs, T + 1))
        for ri in range(runs):
            schedule = SampleSchedule.from_seed(subseed(config.seed, rep, _TAG_SCHEDULE, ri),
                                                T, m, n)
            for gi, (_, W) in enumerate(graphs):
                traj = simulate(W, loss, train, schedule, config)
                thetas = traj.reshape((T + 1) * m, train.d)
                test_risk = loss.risk_many(thetas, test.features, test.labels)
                train_risk = loss.risk_many(thetas, train_flat.features, train_flat.labels)
                gaps[gi, ri] = (test_risk - train_risk).reshape(T + 1, m).mean(axis=1)
        return rep, gaps

    first_train = partition(sample(spec, m * n, subseed(config.seed, 0, _TAG_TRAIN)), m, n)
    warn_if_stepsize_inadmissible(graphs[0][1], loss, first_train, config)

    results = _map_deterministic(_rep, range(reps), threads)
    signed = {name: np.stack([results[r][0][gi] for r in range(reps)])
              for gi, name in enumerate(names)}
    return GenExperiment(graph_names=names, signed=signed)


def estimate_generalization(W: MixingMatrix, loss, spec: MixtureSpec, n: int,
                            config: DsgdConfig, reps: int, test_size: int,
                            runs: int = 1, threads: int = 1) -> GenError:
    """Empirical generalization error curve for a single graph."""
    exp = generalization_experiment([("graph", W)], loss, spec, n, config,
                                    reps, runs, test_size, threads=threads)
    return exp.gen_error("graph")


def bootstrap_ordering_fraction(final_a: np.ndarray, final_b: np.ndarray,
                                n_boot: int, seed: int) -> float:
    """Fraction of bootstrap resamples (over repetitions) with |mean a| < |mean b|.

    Both inputs are per-repetition signed final gaps and are resampled with
    the same indices, matching the shared-dataset pairing of the experiment.
    """
    a = np.asarray(final_a, dtype=np.float64)
    b = np.asarray(final_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("per-repetition gap arrays must have identical shapes")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    idx = rng.integers(0, len(a), size=(n_boot, len(a)))
    return float(np.mean(np.abs(a[idx].mean(axis=1)) < np.abs(b[idx].mean(axis=1))))
