import numpy as np
import pytest

from insfv.control import (ScoreField, control_from_score, hjb_residual, log_potential_from_grid,
                           score_matching_loss, zero_function)
from insfv.core import InvalidInputError, PeriodicBox, cosine_problem, gaussian_mixture_problem
from insfv.oracle import build_generator, principal_eigenpair

SOFT_KILL = {"kind": "sine", "params": {"offset": 1.0, "amplitude": 0.5, "frequency": 1.0}}


def _normal(m=200_000, seed=0):
    return np.random.default_rng(seed).normal(size=(m, 1))


def test_zero_score_has_zero_loss():
    s = ScoreField(lambda X: np.zeros_like(X))
    assert score_matching_loss(s, _normal(100)) == 0.0


def test_true_normal_score_loss_is_minus_one():
    # E|x|^2 - 2 = -1 for the standard normal score s(x) = -x
    s = ScoreField(lambda X: -X, divergence=lambda X: -np.ones(len(X)))
    assert -1.05 <= score_matching_loss(s, _normal()) <= -0.95


def test_shifted_score_loss():
    # E (0.5 - x)^2 - 2 = 1.25 - 2
    s = ScoreField(lambda X: -X + 0.5)
    assert score_matching_loss(s, _normal()) == pytest.approx(-0.75, abs=0.02)
    with pytest.raises(InvalidInputError):
        score_matching_loss(s, np.zeros((0, 1)))


def test_finite_difference_divergence():
    s = ScoreField(lambda X: np.stack([X[:, 0] ** 2, np.sin(X[:, 1])], axis=1))
    X = np.random.default_rng(2).uniform(-1, 1, (20, 2))
    np.testing.assert_allclose(s.div(X), 2 * X[:, 0] + np.cos(X[:, 1]), atol=1e-7)
    box = PeriodicBox([0.0, 0.0], [4.0, 4.0])
    assert ScoreField(s.evaluate, box=box).step == pytest.approx(4e-4)
    assert ScoreField(s.evaluate, fd_step=1e-3).step == 1e-3


def test_control_scales_by_root_epsilon():
    s = ScoreField(lambda X: np.tile([1.0, 0.0], (len(X), 1)), divergence=lambda X: np.zeros(len(X)))
    u = control_from_score(s, 4.0)
    np.testing.assert_allclose(u(np.zeros((3, 2))), [[2.0, 0.0]] * 3)
    np.testing.assert_allclose(u.div(np.zeros((3, 2))), 0.0)
    with pytest.raises(InvalidInputError):
        control_from_score(s, 0.0)


def test_hjb_residual_vanishes_for_gibbs_case():
    x = np.linspace(-1, 1, 9)[:, None]
    np.testing.assert_array_equal(hjb_residual(zero_function(), cosine_problem(0.2), 0.0, x), 0.0)
    p = gaussian_mixture_problem()
    assert hjb_residual(zero_function(), p, 0.0, [1.3, 2.2]) == 0.0


def test_hjb_residual_vanishes_for_constant_rate():
    p = cosine_problem(0.2, c={"kind": "constant", "params": {"value": 0.6}})
    np.testing.assert_allclose(hjb_residual(zero_function(), p, 0.6, np.linspace(-1, 1, 9)[:, None]), 0.0,
                               atol=1e-15)


def test_hjb_residual_of_grid_eigenfunction_shrinks_under_refinement():
    p = cosine_problem(0.2, c=SOFT_KILL)
    x = np.linspace(-1, 1, 41)[:-1, None] + 0.013
    res = []
    for n in (100, 200, 400):
        G = build_generator(p, n)
        pair = principal_eigenpair(G)
        Phi = log_potential_from_grid(G.points[:, 0], pair.right, p.box)
        res.append(np.abs(hjb_residual(Phi, p, pair.lam, x)).max())
    assert res[0] > res[1] > res[2]
    assert res[2] < 1e-3


def test_grid_potential_is_periodic_and_checks_input():
    box = PeriodicBox([-1.0], [1.0])
    z = np.linspace(-1, 1, 33)[:-1]
    Phi = log_potential_from_grid(z, np.exp(np.sin(np.pi * z)), box)
    x = np.array([[0.3], [-0.77]])
    np.testing.assert_allclose(Phi.value(x), Phi.value(x + 2.0), atol=1e-12)
    np.testing.assert_allclose(Phi.value(x), -np.sin(np.pi * x[:, 0]), atol=1e-4)
    with pytest.raises(InvalidInputError):
        log_potential_from_grid(z, -np.ones_like(z), box)
    with pytest.raises(InvalidInputError):
        log_potential_from_grid(z, np.ones_like(z), PeriodicBox([0.0, 0.0], [1.0, 1.0]))
