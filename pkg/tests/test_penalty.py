import math

import numpy as np
import pandas as pd
import pytest

from intake_ctrl.exceptions import ConfigurationError, DivergenceError
from intake_ctrl.penalty import (CoordinatorSchedule, PenaltyProblem,
                                 augmented_objective, constraint_values,
                                 coordinator_tick, grad_L, objective,
                                 penalty_alpha, penalty_terms, solve_offline,
                                 write_trace)
from intake_ctrl.validation import (check_penalty_convergence,
                                    conflicting_problem, gradient_error,
                                    penalty_minimizers)


def _problem(**kwargs):

    return PenaltyProblem(p1_set=65.0, p2_set=130.0, **kwargs)


def test_objective_values():

    prob = _problem()

    assert objective(65, 130, prob) == 0
    assert objective(66, 130, prob) == 1
    assert objective(68, 126, prob) == 25


def test_constraint_values():

    prob = _problem()

    assert constraint_values(66, 130, prob) == (-24, -9)
    assert constraint_values(65, 134, prob) == (-25, 7)
    assert constraint_values(70, 130, prob)[0] == 0


def test_penalty_values():

    prob = _problem()

    assert penalty_alpha(66, 130, prob) == 0.0
    assert np.isclose(penalty_alpha(65, 134, prob), 5.25744e-3, rtol=1e-5)
    assert np.isclose(penalty_alpha(65 + math.sqrt(32), 130, prob),
                      4.93444e-5, rtol=1e-5)


def test_augmented_objective_value():

    prob = _problem(gamma=0.5)

    assert np.isclose(augmented_objective(65, 134, prob), 16.0026287,
                      rtol=0, atol=1e-7)


def test_penalty_saturates_without_overflow():

    prob = _problem(gamma=1e8)

    alpha, saturated = penalty_terms(65, 1000, prob)

    assert saturated
    assert math.isfinite(alpha)
    assert all(math.isfinite(g) for g in grad_L(65, 1000, prob))


def test_gradient_values():

    prob = _problem()

    assert grad_L(65, 130, prob) == (0, 0)
    assert grad_L(66, 130, prob) == (2, 0)

    # The penalty steepens the gradient outside the V2 bound.
    assert grad_L(65, 134, prob)[1] > 2 * 4


def test_gradient_matches_finite_differences():

    assert gradient_error() < 1e-6


def test_exact_on_feasible_set():

    prob = _problem(gamma=100.0)
    np.random.seed(2)

    for _ in range(200):
        P1 = 65 + np.random.uniform(-4.9, 4.9)
        P2 = 130 + np.random.uniform(-2.9, 2.9)
        assert augmented_objective(P1, P2, prob) == objective(P1, P2, prob)
        assert np.allclose(grad_L(P1, P2, prob),
                           (2 * (P1 - 65), 2 * (P2 - 130)))


def test_invalid_problem():

    with pytest.raises(ConfigurationError):
        _problem(gamma=0.0)

    with pytest.raises(ConfigurationError):
        _problem(omega=0.5)


def test_feasible_optimum_is_found():

    trace = solve_offline(_problem(xi=1e-300), (60.0, 140.0))

    P1, P2 = trace.solution

    assert trace.status == 'converged'
    assert abs(P1 - 65) < 1e-3 and abs(P2 - 130) < 1e-3


def test_start_at_optimum_converges_immediately():

    trace = solve_offline(_problem(), (65.0, 130.0))

    assert trace.status == 'converged'
    assert len(trace.iterates) - 1 <= 2


def test_conflicting_problem_projects_onto_bound():

    trace = solve_offline(conflicting_problem(1e6), (66.0, 130.0))

    assert abs(trace.solution[0] - 68.0) < 1e-2


def test_penalized_minimizers_are_monotone_in_gamma():

    rows = penalty_minimizers([1.0, 10.0, 100.0, 1e4, 1e6])

    for (_, _, f_a, alpha_a, theta_a), (_, _, f_b, alpha_b, theta_b) in \
            zip(rows, rows[1:]):
        assert alpha_b <= alpha_a + 1e-9
        assert f_b >= f_a - 1e-9
        assert theta_b >= theta_a - 1e-9


def test_penalty_vanishes_for_large_gamma():

    prob = conflicting_problem(1e8)
    P1, P2 = solve_offline(prob, (66.0, 130.0)).solution

    alpha = penalty_alpha(P1, P2, prob)

    assert prob.gamma * alpha < 1e-6
    assert abs(augmented_objective(P1, P2, prob) -
               objective(P1, P2, prob)) < 1e-6
    assert abs(P1 - 70) - 2 < 1e-4


def test_penalty_convergence_check():

    passed, _ = check_penalty_convergence()

    assert passed


def test_descent_with_small_learning_rate():

    prob = _problem(lr=0.1, adaptive_lr=False)
    trace = solve_offline(prob, (62.0, 132.0))

    L = trace.to_frame()['L'].values

    assert np.all(np.diff(L) <= 1e-12)


def test_divergence_is_reported():

    prob = _problem(lr=1.5, adaptive_lr=False)

    with pytest.raises(DivergenceError):
        solve_offline(prob, (66.0, 130.0))


def test_trace_columns(tmp_path):

    trace = solve_offline(_problem(), (63.0, 131.0))
    path = tmp_path / 'trace.csv'

    write_trace(trace, path)
    frame = pd.read_csv(path)

    assert list(frame.columns) == ['iter', 'P1', 'P2', 'f', 'alpha', 'L',
                                   'gamma']
    assert len(frame) == len(trace.iterates)
    assert frame['iter'].iloc[0] == 0


def test_coordinator_grows_and_resets_gamma():

    prob = _problem(gamma=0.5, omega=2.0, gamma_max=1e4)
    schedule = CoordinatorSchedule(gamma0=0.5, n_grow=50, m_reset=200)

    for _ in range(100):
        _, prob, schedule = coordinator_tick((65.0, 134.0), prob, schedule)

    assert prob.gamma == 0.5 * 2.0**2

    for _ in range(199):
        grad, prob, schedule = coordinator_tick((65.0, 130.0), prob,
                                                schedule)

    assert grad == (0, 0)
    assert prob.gamma == 2.0

    _, prob, schedule = coordinator_tick((65.0, 130.0), prob, schedule)

    assert prob.gamma == 0.5


def test_coordinator_respects_gamma_max():

    prob = _problem(gamma=0.5, omega=2.0, gamma_max=1.0)
    schedule = CoordinatorSchedule(gamma0=0.5, n_grow=1)

    for _ in range(10):
        _, prob, schedule = coordinator_tick((65.0, 134.0), prob, schedule)

    assert prob.gamma == 1.0
