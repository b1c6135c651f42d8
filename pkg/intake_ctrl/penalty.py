"""Exterior exponential penalty on the chamber pressure bounds, its offline
gradient solver and the per-tick coordination gradient. Pressures in kPa."""
import logging
import math
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional

import numpy as np
import pandas as pd

from intake_ctrl.exceptions import ConfigurationError, DivergenceError

logger = logging.getLogger(__name__)

# Largest exponent evaluated; beyond it the penalty saturates. Squared
# terms stay finite.
MAX_EXPONENT = 300.0

DIVERGENCE_WINDOW = 50


@dataclass(frozen=True)
class PenaltyProblem:
    """ Objective, constraints and solver settings.

    mu weights the V1 constraint and sigma the V2 constraint. The constraint
    centres c1 and c2 default to the setpoints.
    """

    p1_set: float
    p2_set: float
    eps1: float = 5.0
    eps2: float = 3.0
    gamma: float = 0.5
    mu: float = 0.001
    sigma: float = 0.01
    lr: float = 0.2
    omega: float = 2.0
    xi: float = 1e-6
    gamma_max: float = 1e8
    max_iters: int = 10000
    c1: Optional[float] = None
    c2: Optional[float] = None
    tol: float = 1e-10
    adaptive_lr: bool = True

    def __post_init__(self):

        checks = {
            'gamma': self.gamma > 0,
            'mu': self.mu > 0,
            'sigma': self.sigma > 0,
            'eps1': self.eps1 > 0,
            'eps2': self.eps2 > 0,
            'lr': self.lr > 0,
            'omega': self.omega >= 1,
            'xi': self.xi > 0,
            'gamma_max': self.gamma_max >= self.gamma,
            'max_iters': self.max_iters >= 1,
            'tol': self.tol > 0,
        }

        bad = [name for name, ok in checks.items() if not ok]

        if bad:
            raise ConfigurationError(
                f'Invalid penalty problem: {", ".join(bad)} out of range')

    @property
    def centers(self):
        c1 = self.p1_set if self.c1 is None else self.c1
        c2 = self.p2_set if self.c2 is None else self.c2
        return c1, c2

    @property
    def weights(self):
        return self.mu, self.sigma


class TraceRow(NamedTuple):

    iter: int
    P1: float
    P2: float
    f: float
    alpha: float
    L: float
    gamma: float


class SolveTrace(NamedTuple):

    iterates: List[TraceRow]
    status: str

    @property
    def solution(self):
        last = self.iterates[-1]
        return last.P1, last.P2

    def to_frame(self):
        return pd.DataFrame(self.iterates, columns=TraceRow._fields)


class CoordinatorSchedule(NamedTuple):
    """ Penalty-factor schedule of the online coordinator.

    gamma grows by omega once every n_grow consecutive violating ticks and
    falls back to gamma0 after m_reset consecutive feasible ticks.
    """

    gamma0: float
    n_grow: int = 50
    m_reset: int = 200
    violation_ticks: int = 0
    feasible_ticks: int = 0


def objective(P1, P2, prob):

    e1, e2 = P1 - prob.p1_set, P2 - prob.p2_set

    return e1 * e1 + e2 * e2


def constraint_values(P1, P2, prob):
    """g_i <= 0 exactly when chamber i lies within eps_i of its centre."""

    c1, c2 = prob.centers

    d1, d2 = P1 - c1, P2 - c2

    return d1 * d1 - prob.eps1**2, d2 * d2 - prob.eps2**2


def _exponents(P1, P2, prob):

    g = constraint_values(P1, P2, prob)
    raw = [max(0.0, eta * g_i) for eta, g_i in zip(prob.weights, g)]
    saturated = any(m > MAX_EXPONENT for m in raw)

    return g, [min(m, MAX_EXPONENT) for m in raw], saturated


def penalty_terms(P1, P2, prob):
    """ Penalty value and whether an exponent hit the saturation limit.

    Returns:
        The pair (alpha, saturated).
    """

    _, exponents, saturated = _exponents(P1, P2, prob)

    # expm1 keeps the tiny violations near the boundary accurate.
    alpha = sum(math.expm1(m) * math.expm1(m) for m in exponents)

    return alpha, saturated


def penalty_alpha(P1, P2, prob):

    return penalty_terms(P1, P2, prob)[0]


def augmented_objective(P1, P2, prob):

    return objective(P1, P2, prob) + prob.gamma * penalty_alpha(P1, P2, prob)


def grad_L(P1, P2, prob):
    """ Analytic gradient of the augmented objective.

    The penalty is continuously differentiable across g_i = 0, so the
    feasible side contributes exactly zero.

    Returns:
        The pair (dL/dP1, dL/dP2).
    """

    g, exponents, _ = _exponents(P1, P2, prob)
    points = (P1, P2)
    sets = (prob.p1_set, prob.p2_set)

    grad = []

    for P, P_set, c, eta, g_i, m in zip(points, sets, prob.centers,
                                        prob.weights, g, exponents):
        value = 2 * (P - P_set)
        if g_i > 0:
            E = math.exp(m)
            value += prob.gamma * 2 * math.expm1(m) * E * eta * 2 * (P - c)
        grad.append(value)

    return grad[0], grad[1]


def curvature(P1, P2, prob):
    """ Diagonal of the Hessian of L. The problem is separable, so the
    Hessian has no off-diagonal terms.
    """

    g, exponents, _ = _exponents(P1, P2, prob)

    result = []

    for P, c, eta, g_i, m in zip((P1, P2), prob.centers, prob.weights, g,
                                 exponents):
        value = 2.0
        if g_i > 0:
            E = math.exp(m)
            dg = 2 * (P - c)
            value += prob.gamma * 2 * eta * E * (
                eta * dg * dg * (2 * E - 1) + math.expm1(m) * 2)
        result.append(value)

    return result[0], result[1]


def _trace_row(k, P1, P2, prob):

    f = objective(P1, P2, prob)
    alpha = penalty_alpha(P1, P2, prob)

    return TraceRow(iter=k, P1=P1, P2=P2, f=f, alpha=alpha,
                    L=f + prob.gamma * alpha, gamma=prob.gamma)


def _step_sizes(P1, P2, prob):

    if not prob.adaptive_lr:
        return prob.lr, prob.lr

    # Cap the learning rate by the local curvature so that large penalty
    # factors do not overshoot.
    return tuple(min(prob.lr, 1 / h) for h in curvature(P1, P2, prob))


def solve_offline(prob, start):
    """ Minimises the augmented objective by gradient descent with a growing
    penalty factor.

    Each iteration takes a componentwise gradient step, then multiplies gamma
    by omega up to gamma_max. The solver stops when the step falls below tol,
    when 0 < gamma * alpha < xi, or after max_iters iterations.

    Args:
        prob: The penalty problem; prob.gamma is the initial penalty factor.
        start: Initial pressures (P1, P2) [kPa].

    Returns:
        A SolveTrace with one row per iterate, the start included.

    Raises:
        DivergenceError: if L grows for DIVERGENCE_WINDOW consecutive
            iterations or stops being finite.
    """

    P1, P2 = map(float, start)
    rows = [_trace_row(0, P1, P2, prob)]
    growing = 0
    status = 'max_iters'

    for k in range(1, prob.max_iters + 1):

        L_before = augmented_objective(P1, P2, prob)
        d1, d2 = grad_L(P1, P2, prob)
        lr1, lr2 = _step_sizes(P1, P2, prob)

        step = np.array([lr1 * d1, lr2 * d2])
        P1, P2 = P1 - step[0], P2 - step[1]

        row = _trace_row(k, P1, P2, prob)
        rows.append(row)

        logger.debug(f'iter {k}: P=({P1:.6f}, {P2:.6f}) L={row.L:.6e} '
                     f'gamma={prob.gamma:.3e}')

        if not math.isfinite(row.L):
            raise DivergenceError(k, row.L)

        growing = growing + 1 if row.L > L_before else 0

        if growing >= DIVERGENCE_WINDOW:
            logger.warning(f'Penalty solver diverging at iteration {k}; '
                           f'learning rate {prob.lr} is too large')
            raise DivergenceError(k, row.L)

        if np.linalg.norm(step) < prob.tol:
            status = 'converged'
            break

        if 0 < prob.gamma * row.alpha < prob.xi:
            status = 'penalty_below_xi'
            break

        prob = replace(prob, gamma=min(prob.omega * prob.gamma,
                                       prob.gamma_max))

    logger.info(f'Penalty solver stopped after {len(rows) - 1} iterations: '
                f'{status}, P=({P1:.6f}, {P2:.6f})')

    return SolveTrace(iterates=rows, status=status)


def write_trace(trace, path):

    trace.to_frame().to_csv(path, index=False, float_format='%.17g')


def coordinator_tick(estimates, prob, schedule):
    """ One tick of the online coordinator.

    Args:
        estimates: Observer pressure estimates (z11, z21) [kPa].
        prob: Penalty problem with the current gamma.
        schedule: Schedule counters.

    Returns:
        The tuple (gradient, prob, schedule): the gradient of L at the
        estimates under the current gamma, then the problem and schedule
        for the next tick.
    """

    P1, P2 = estimates
    grad = grad_L(P1, P2, prob)
    violated = any(g > 0 for g in constraint_values(P1, P2, prob))

    gamma = prob.gamma

    if violated:
        violation_ticks = schedule.violation_ticks + 1
        schedule = schedule._replace(violation_ticks=violation_ticks,
                                     feasible_ticks=0)
        if violation_ticks % schedule.n_grow == 0:
            gamma = min(prob.omega * gamma, prob.gamma_max)
    else:
        feasible_ticks = schedule.feasible_ticks + 1
        schedule = schedule._replace(violation_ticks=0,
                                     feasible_ticks=feasible_ticks)
        if feasible_ticks >= schedule.m_reset:
            gamma = schedule.gamma0

    if gamma != prob.gamma:
        logger.debug(f'Coordinator penalty factor {prob.gamma:.4g} -> '
                     f'{gamma:.4g}')
        prob = replace(prob, gamma=gamma)

    return grad, prob, schedule
