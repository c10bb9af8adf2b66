"""Monte Carlo stability and generalization estimators."""

import numpy as np
import pytest

from dsgdlab.datagen import DataPoint, MixtureSpec, partition, sample
from dsgdlab.engine import DsgdConfig, Stepsize
from dsgdlab.losses import LogisticLoss, RidgeLoss
from dsgdlab.stability import (
    bootstrap_ordering_fraction,
    estimate_generalization,
    estimate_on_average_stability,
    estimate_worst_model_stability,
    generalization_experiment,
    sample_pair_subset,
    stability_experiment,
    swap_dataset,
)
from dsgdlab.topology import make_complete_uniform, make_identity, make_ring

SPEC = MixtureSpec()


def config(T=10, eta=0.05, seed=11, **kw):
    return DsgdConfig(variant="B", T=T, stepsize=Stepsize.constant(eta), seed=seed, **kw)


class TestSwapDataset:
    def test_swap_with_same_value_is_identity(self):
        S = partition(sample(SPEC, 6, 1), 2, 3)
        out = swap_dataset(S, 1, 0, S.point(0, 1))
        assert np.array_equal(out.features, S.features)
        assert np.array_equal(out.labels, S.labels)

    def test_swap_then_swap_back(self):
        S = partition(sample(SPEC, 6, 2), 2, 3)
        original = S.point(1, 2)  # agent 1, point 2
        once = swap_dataset(S, 2, 1, DataPoint(x=np.array([7.0, 7.0]), y=0.0))
        back = swap_dataset(once, 2, 1, original)
        assert np.array_equal(back.features, S.features)
        assert np.array_equal(back.labels, S.labels)

    def test_exactly_one_entry_differs(self):
        S = partition(sample(SPEC, 6, 3), 2, 3)
        out = swap_dataset(S, 0, 1, DataPoint(x=np.array([7.0, 7.0]), y=0.0))
        diff = (S.features != out.features).any(axis=2) | (S.labels != out.labels)
        assert diff.sum() == 1 and diff[1, 0]

    def test_bad_indices(self):
        S = partition(sample(SPEC, 6, 4), 2, 3)
        with pytest.raises(ValueError):
            swap_dataset(S, 3, 0, S.point(0, 0))


class TestPairSubset:
    def test_deterministic_and_valid(self):
        a = sample_pair_subset(4, 3, 5, seed=9)
        assert a == sample_pair_subset(4, 3, 5, seed=9)
        assert len(set(a)) == 5
        assert all(0 <= i < 4 and 0 <= j < 3 for i, j in a)

    def test_size_validation(self):
        with pytest.raises(ValueError):
            sample_pair_subset(2, 2, 5, seed=0)
        with pytest.raises(ValueError):
            sample_pair_subset(2, 2, 0, seed=0)


class TestStabilityEstimates:
    def test_t_zero_gives_zero(self):
        est = estimate_on_average_stability(make_ring(3), LogisticLoss(), SPEC, 2,
                                            config(T=0), num_mc=2)
        assert est.epsilon_hat == 0.0

    def test_zero_stepsize_gives_zero(self):
        est = estimate_on_average_stability(make_ring(3), LogisticLoss(), SPEC, 2,
                                            config(T=8, eta=0.0), num_mc=2)
        assert est.epsilon_hat == 0.0

    def test_reports_pair_and_mc_counts(self):
        est = estimate_on_average_stability(make_ring(3), LogisticLoss(), SPEC, 4,
                                            config(T=5), num_mc=3)
        assert est.num_pairs == 12 and est.num_mc == 3
        sub = sample_pair_subset(4, 3, 4, seed=2)
        est2 = estimate_on_average_stability(make_ring(3), LogisticLoss(), SPEC, 4,
                                             config(T=5), num_mc=3, pair_subset=sub)
        assert est2.num_pairs == 4

    def test_single_agent_worst_equals_mean(self):
        W = make_complete_uniform(1)
        r = stability_experiment(W, LogisticLoss(), SPEC, 3, config(T=10), num_mc=4)
        assert np.array_equal(r.values["worst_model"], r.values["per_agent_mean"])
        assert np.array_equal(r.values["worst_model"], r.values["averaged_iterate"])

    def test_identity_worst_is_swapped_agents_own_deviation(self):
        # at W = I only the swapped agent diverges, so sup_k = m * mean_k
        m = 3
        r = stability_experiment(make_identity(m), LogisticLoss(), SPEC, 2,
                                 config(T=12), num_mc=4)
        assert np.allclose(r.values["worst_model"], m * r.values["per_agent_mean"])

    def test_worst_dominates_mean_dominates_average(self):
        r = stability_experiment(make_ring(4), LogisticLoss(), SPEC, 3,
                                 config(T=15), num_mc=5)
        assert np.all(r.values["worst_model"] >= r.values["per_agent_mean"] - 1e-15)
        assert np.all(r.values["per_agent_mean"] >= r.values["averaged_iterate"] - 1e-15)

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            estimate_on_average_stability(make_ring(3), LogisticLoss(), SPEC, 2,
                                          config(), num_mc=1, mode="worst_model")
        with pytest.raises(ValueError):
            stability_experiment(make_ring(3), LogisticLoss(), SPEC, 2, config(),
                                 num_mc=0)
        with pytest.raises(ValueError):
            stability_experiment(make_ring(3), LogisticLoss(), SPEC, 2, config(),
                                 num_mc=1, pair_subset=())

    def test_worst_model_estimator_runs(self):
        est = estimate_worst_model_stability(make_ring(3), LogisticLoss(), SPEC, 2,
                                             config(T=10), num_mc=3)
        assert est.mode == "worst_model" and est.epsilon_hat >= 0.0

    def test_threads_do_not_change_values(self):
        kwargs = dict(num_mc=6)
        a = stability_experiment(make_ring(3), LogisticLoss(), SPEC, 2, config(T=10), **kwargs)
        b = stability_experiment(make_ring(3), LogisticLoss(), SPEC, 2, config(T=10),
                                 threads=4, **kwargs)
        for mode in a.values:
            assert np.array_equal(a.values[mode], b.values[mode])

    def test_stderr_shrinks_with_sqrt_num_mc(self):
        est_small = estimate_on_average_stability(make_ring(3), LogisticLoss(), SPEC, 2,
                                                  config(T=10), num_mc=40)
        est_big = estimate_on_average_stability(make_ring(3), LogisticLoss(), SPEC, 2,
                                                config(T=10), num_mc=80)
        ratio = est_small.std_error / est_big.std_error
        assert ratio == pytest.approx(np.sqrt(2.0), rel=0.30)

    def test_convex_bound_mini_monte_carlo(self):
        # per-agent-mean stability <= 2 L sum(eta) / (m n) + 3 stderr, each graph
        for W in (make_identity(3), make_ring(3), make_complete_uniform(3)):
            r = stability_experiment(W, LogisticLoss(), SPEC, 3, config(T=15, eta=0.01),
                                     num_mc=30)
            defect = r.values["per_agent_mean"] - 2.0 * r.lipschitz * r.sum_eta / (3 * 3)
            assert defect.mean() <= 3.0 * defect.std(ddof=1) / np.sqrt(len(defect))

    def test_strongly_convex_plateau_mini(self):
        # small-beta data so an admissible constant stepsize actually plateaus
        spec = MixtureSpec(mean0=(0.1, -0.1), mean1=(-0.1, 0.1), feature_std=0.1)
        loss = RidgeLoss(mu=0.5, projection_radius=10.0)
        W = make_complete_uniform(2)
        ests = []
        for T in (80, 160):
            cfg = DsgdConfig(variant="B", T=T, stepsize=Stepsize.constant(0.3),
                             seed=5, projected=True)
            r = stability_experiment(W, loss, spec, 2, cfg, num_mc=40)
            defect = r.values["per_agent_mean"] - 4.0 * r.lipschitz / (0.5 * 2 * 2)
            assert defect.mean() <= 3.0 * defect.std(ddof=1) / np.sqrt(len(defect))
            ests.append(r.estimate("per_agent_mean"))
        gap = abs(ests[0].epsilon_hat - ests[1].epsilon_hat)
        combined = np.hypot(ests[0].std_error, ests[1].std_error)
        assert gap <= 3.0 * combined


class TestGeneralization:
    def test_gap_zero_at_initialization(self):
        # logistic at theta = 0 costs log 2 on every point: the gap is exactly 0
        ge = estimate_generalization(make_ring(3), LogisticLoss(), SPEC, 2,
                                     config(T=5), reps=3, test_size=20)
        assert ge.per_iteration[0] == 0.0

    def test_zero_stepsize_freezes_gap(self):
        ge = estimate_generalization(make_ring(3), LogisticLoss(), SPEC, 2,
                                     config(T=6, eta=0.0), reps=3, test_size=20)
        assert np.all(ge.per_iteration == ge.per_iteration[0])

    def test_single_rep_single_run_summary_is_abs_gap(self):
        exp = generalization_experiment([("g", make_ring(3))], LogisticLoss(), SPEC, 2,
                                        config(T=5), reps=1, runs=1, test_size=20)
        abs_mean, stderr = exp.summary("g")
        assert np.array_equal(abs_mean, np.abs(exp.signed["g"][0, 0]))
        assert np.all(stderr == 0.0)

    def test_signed_average_before_abs(self):
        exp = generalization_experiment([("g", make_ring(3))], LogisticLoss(), SPEC, 2,
                                        config(T=5), reps=4, runs=2, test_size=20)
        signed = exp.signed["g"].reshape(8, 6)
        assert np.allclose(exp.summary("g")[0], np.abs(signed.mean(axis=0)))

    def test_graphs_share_data_and_schedules(self):
        exp = generalization_experiment([("a", make_ring(3)), ("b", make_ring(3))],
                                        LogisticLoss(), SPEC, 2, config(T=5),
                                        reps=2, runs=1, test_size=10)
        assert np.array_equal(exp.signed["a"], exp.signed["b"])

    def test_lemma_generalization_via_stability(self):
        # |mean gap| <= L * per-agent-mean stability + 3 combined stderr
        cfg = config(T=20, eta=0.03, seed=17)
        W = make_complete_uniform(2)
        exp = generalization_experiment([("g", W)], LogisticLoss(), SPEC, 3, cfg,
                                        reps=120, runs=1, test_size=60)
        gaps = exp.signed["g"][:, 0, -1]
        stab = stability_experiment(W, LogisticLoss(), SPEC, 3, cfg, num_mc=120)
        L = stab.lipschitz.max()
        lhs = abs(gaps.mean())
        rhs = L * stab.values["per_agent_mean"].mean()
        se = np.hypot(gaps.std(ddof=1) / np.sqrt(len(gaps)),
                      L * stab.values["per_agent_mean"].std(ddof=1) / np.sqrt(stab.num_mc))
        assert lhs <= rhs + 3.0 * se

    def test_input_validation(self):
        with pytest.raises(ValueError):
            estimate_generalization(make_ring(3), LogisticLoss(), SPEC, 2, config(),
                                    reps=0, test_size=10)
        with pytest.raises(ValueError):
            generalization_experiment([("a", make_ring(3)), ("a", make_ring(3))],
                                      LogisticLoss(), SPEC, 2, config(), 1, 1, 10)


class TestBootstrap:
    def test_clear_ordering(self):
        rng = np.random.default_rng(0)
        small = rng.normal(0.01, 0.001, size=30)
        big = rng.normal(0.5, 0.001, size=30)
        assert bootstrap_ordering_fraction(small, big, 200, seed=1) == 1.0
        assert bootstrap_ordering_fraction(big, small, 200, seed=1) == 0.0

    def test_symmetric_case_is_ambiguous(self):
        rng = np.random.default_rng(2)
        a = rng.normal(0.1, 0.05, size=40)
        b = rng.normal(0.1, 0.05, size=40)
        frac = bootstrap_ordering_fraction(a, b, 400, seed=3)
        assert 0.05 < frac < 0.95

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            bootstrap_ordering_fraction(np.zeros(3), np.zeros(4), 10, seed=0)
