"""Loss values, gradients, declared constants, projection, and expansivity."""

import math

import numpy as np
import pytest

from dsgdlab.losses import (
    BoundedNonconvexLoss,
    LogisticLoss,
    RidgeLoss,
    estimate_constants,
    make_loss,
    project_ball,
)
from helpers import central_difference_grad, expansivity_max_defect


def random_points(rng, count, d=3, scale=2.0):
    X = rng.normal(size=(count, d)) * scale
    Y = (rng.random(count) < 0.5).astype(float)
    return X, Y


class TestLogistic:
    def test_value_and_grad_at_zero(self):
        loss = LogisticLoss()
        theta = np.zeros(3)
        x = np.array([0.7, -1.2, 0.4])
        for y in (0.0, 1.0):
            assert loss.value(theta, x, y) == pytest.approx(math.log(2.0))
            assert np.allclose(loss.grad(theta, x, y), (0.5 - y) * x)

    def test_saturation_limit(self):
        loss = LogisticLoss()
        x = np.array([1.0, 0.0])
        assert loss.value(np.array([40.0, 0.0]), x, 1.0) < 1e-15
        # extreme scores stay finite on both branches
        assert math.isfinite(loss.value(np.array([1e4, 0.0]), x, 0.0))
        assert np.all(np.isfinite(loss.grad(np.array([-1e4, 0.0]), x, 1.0)))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        loss = LogisticLoss()
        for _ in range(30):
            theta = rng.normal(size=4)
            x = rng.normal(size=4) * 2
            y = float(rng.integers(0, 2))
            fd = central_difference_grad(lambda th: loss.value(th, x, y), theta)
            g = loss.grad(theta, x, y)
            assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))

    def test_vectorized_paths_match_scalar(self):
        rng = np.random.default_rng(3)
        loss = LogisticLoss()
        X, Y = random_points(rng, 20)
        theta = rng.normal(size=3)
        vals = loss.values(theta, X, Y)
        assert np.allclose(vals, [loss.value(theta, X[k], Y[k]) for k in range(20)])
        assert loss.risk(theta, X, Y) == pytest.approx(vals.mean())
        many = loss.risk_many(np.stack([theta, 2 * theta]), X, Y)
        assert many[0] == pytest.approx(loss.risk(theta, X, Y))
        grads = loss.grad_each(np.tile(theta, (20, 1)), X, Y)
        assert np.allclose(grads[7], loss.grad(theta, X[7], Y[7]))
        gm = loss.grad_mean(theta, X, Y)
        assert np.allclose(gm, grads.mean(axis=0))


class TestRidge:
    def test_value_and_grad_at_zero(self):
        loss = RidgeLoss(mu=0.5, projection_radius=10.0)
        x = np.array([1.0, 2.0])
        y = 3.0
        assert loss.value(np.zeros(2), x, y) == pytest.approx(0.5 * y * y)
        assert np.allclose(loss.grad(np.zeros(2), x, y), -y * x)

    def test_pure_regularizer_minimized_at_origin(self):
        loss = RidgeLoss(mu=1.0, projection_radius=5.0)
        x = np.zeros(2)
        vals = [loss.value(np.array([t, 0.0]), x, 0.0) for t in (-1.0, 0.0, 1.0)]
        assert vals[1] == 0.0 and vals[0] > 0 and vals[2] > 0

    def test_missing_radius_rejected(self):
        with pytest.raises(ValueError, match="projection_radius"):
            RidgeLoss(mu=0.5, projection_radius=None)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        loss = RidgeLoss(mu=0.7, projection_radius=10.0)
        for _ in range(30):
            theta = rng.normal(size=3)
            x = rng.normal(size=3)
            y = float(rng.normal())
            fd = central_difference_grad(lambda th: loss.value(th, x, y), theta)
            assert np.linalg.norm(loss.grad(theta, x, y) - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))

    def test_declared_constants_hold_on_random_pairs_in_ball(self):
        rng = np.random.default_rng(17)
        radius = 4.0
        loss = RidgeLoss(mu=0.5, projection_radius=radius)
        X, Y = rng.normal(size=(25, 3)), rng.normal(size=25)
        consts = loss.constants(X, Y)
        for _ in range(1000):
            k = int(rng.integers(0, 25))
            a = project_ball(rng.normal(size=3) * 4, radius)
            b = project_ball(rng.normal(size=3) * 4, radius)
            dv = abs(loss.value(a, X[k], Y[k]) - loss.value(b, X[k], Y[k]))
            dg = np.linalg.norm(loss.grad(a, X[k], Y[k]) - loss.grad(b, X[k], Y[k]))
            sep = np.linalg.norm(a - b)
            assert dv <= consts.L * sep + 1e-9
            assert dg <= consts.beta * sep + 1e-9


class TestBoundedNonconvex:
    def test_global_minimum_slice(self):
        loss = BoundedNonconvexLoss()
        x = np.array([1.0, 1.0])
        theta = np.array([0.5, 0.5])  # x.theta = 1
        assert loss.value(theta, x, 1.0) == 0.0
        assert np.allclose(loss.grad(theta, x, 1.0), 0.0)

    def test_bounded_in_unit_interval(self):
        rng = np.random.default_rng(2)
        loss = BoundedNonconvexLoss()
        X, Y = random_points(rng, 200, scale=5.0)
        vals = loss.values(rng.normal(size=3) * 10, X, Y)
        assert np.all((vals >= 0.0) & (vals <= 1.0))  # exp underflow saturates at 1
        assert loss.value(np.array([1e8, 0.0, 0.0]), np.array([1.0, 0, 0]), 0.0) == pytest.approx(1.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        loss = BoundedNonconvexLoss()
        for _ in range(30):
            theta = rng.normal(size=3)
            x = rng.normal(size=3)
            y = float(rng.normal())
            fd = central_difference_grad(lambda th: loss.value(th, x, y), theta)
            assert np.linalg.norm(loss.grad(theta, x, y) - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))

    def test_gradient_norm_scan_below_declared_L(self):
        # scan the scalar residual u = x.theta - y; grad norm = |u| e^{-u^2/2} ||x||
        loss = BoundedNonconvexLoss()
        x = np.array([2.0, -1.0])
        consts = loss.constants(x[None, :], np.zeros(1))
        us = np.linspace(-8.0, 8.0, 20001)
        norms = np.abs(us) * np.exp(-0.5 * us * us) * np.linalg.norm(x)
        assert norms.max() <= consts.L + 1e-12
        assert norms.max() == pytest.approx(consts.L, rel=1e-6)  # scan hits the peak


class TestEstimateConstants:
    def test_single_point_logistic(self):
        X = np.array([[1.0, -1.0]])
        Y = np.array([1.0])
        consts = estimate_constants(LogisticLoss(), (X, Y))
        assert consts.L == pytest.approx(math.sqrt(2.0))
        assert consts.beta == pytest.approx(0.5)

    def test_zero_features(self):
        consts = estimate_constants(LogisticLoss(), (np.zeros((3, 2)), np.ones(3)))
        assert consts.L == 0.0 and consts.beta == 0.0

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(9)
        X, Y = random_points(rng, 40)
        base = estimate_constants(LogisticLoss(), (X, Y))
        scaled = estimate_constants(LogisticLoss(), (2.0 * X, Y))
        assert scaled.L == pytest.approx(2.0 * base.L)
        assert scaled.beta == pytest.approx(4.0 * base.beta)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            estimate_constants(LogisticLoss(), (np.zeros((0, 2)), np.zeros(0)))


class TestProjectBall:
    def test_inside_unchanged(self):
        theta = np.array([0.3, 0.4])
        assert np.array_equal(project_ball(theta, 1.0), theta)

    def test_rescaling(self):
        assert np.allclose(project_ball(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])

    def test_non_expansive_on_random_pairs(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            a, b = rng.normal(size=2) * 3, rng.normal(size=2) * 3
            pa, pb = project_ball(a, 1.5), project_ball(b, 1.5)
            assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            project_ball(np.ones(2), 0.0)


class TestExpansivity:
    """Gradient-update map G(theta) = theta - eta grad; moduli per regime."""

    def test_nonconvex_any_eta(self):
        rng = np.random.default_rng(31)
        loss = BoundedNonconvexLoss()
        X, Y = random_points(rng, 30)
        beta = loss.constants(X, Y).beta
        worst = expansivity_max_defect(loss, X, Y, 1000, seed=101, eta_max=3.0 / beta,
                                       factor_fn=lambda eta: 1.0 + eta * beta)
        assert worst <= 1e-8

    def test_logistic_one_expansive(self):
        rng = np.random.default_rng(37)
        loss = LogisticLoss()
        X, Y = random_points(rng, 30)
        beta = loss.constants(X, Y).beta
        worst = expansivity_max_defect(loss, X, Y, 1000, seed=102, eta_max=2.0 / beta,
                                       factor_fn=lambda eta: 1.0)
        assert worst <= 1e-8

    def test_ridge_contractive_inside_ball(self):
        rng = np.random.default_rng(41)
        radius = 5.0
        loss = RidgeLoss(mu=0.6, projection_radius=radius)
        X, Y = rng.normal(size=(30, 3)), rng.normal(size=30)
        consts = loss.constants(X, Y)
        beta, mu = consts.beta, loss.mu
        worst = expansivity_max_defect(loss, X, Y, 1000, seed=103,
                                       eta_max=2.0 / (beta + mu),
                                       factor_fn=lambda eta: 1.0 - eta * beta * mu / (beta + mu),
                                       radius=radius)
        assert worst <= 1e-8


class TestMakeLoss:
    def test_factory_kinds(self):
        assert make_loss("logistic").kind == "logistic"
        assert make_loss("ridge_quadratic", mu=0.5, projection_radius=10.0).mu == 0.5
        assert make_loss("bounded_nonconvex").convexity == "nonconvex"

    def test_factory_rejects_unknown_and_incomplete(self):
        with pytest.raises(ValueError):
            make_loss("hinge")
        with pytest.raises(ValueError):
            make_loss("ridge_quadratic", projection_radius=10.0)  # mu missing
