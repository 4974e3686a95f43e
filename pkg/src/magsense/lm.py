"""Levenberg-Marquardt solver for small dense nonlinear least-squares problems."""

from __future__ import annotations

import dataclasses
from typing import Callable, Optional

import numpy as np
import numpy.typing as npt

Vector = npt.NDArray[np.float64]


@dataclasses.dataclass
class LMOptions:
    max_iter: int = 200
    step_tol: float = 1e-10
    cost_tol: float = 1e-12
    lambda0: float = 1e-3
    factor: float = 10.0
    fd_step: float = 1e-6


@dataclasses.dataclass
class LMResult:
    theta: Vector
    converged: bool
    iterations: int
    cost: float
    message: str


def numeric_jacobian(residual_fn: Callable[[Vector], Vector], theta: Vector, rel_step: float = 1e-6) -> Vector:
    """Central-difference Jacobian with per-parameter step ``rel_step * max(|theta_j|, 1)``."""
    theta = np.asarray(theta, dtype=float)
    r0 = np.asarray(residual_fn(theta), dtype=float)
    jac = np.empty((r0.size, theta.size))
    for j in range(theta.size):
        hj = rel_step * max(abs(theta[j]), 1.0)
        tp = theta.copy()
        tm = theta.copy()
        tp[j] += hj
        tm[j] -= hj
        jac[:, j] = (np.asarray(residual_fn(tp)) - np.asarray(residual_fn(tm))) / (2.0 * hj)
    return jac


def levenberg_marquardt(residual_fn: Callable[[Vector], Vector], theta0,
                        jacobian_fn: Optional[Callable[[Vector], Vector]] = None,
                        options: Optional[LMOptions] = None) -> LMResult:
    """
    Minimize ``0.5 * sum(residual_fn(theta)**2)``.

    The damped normal equations use Marquardt's diagonal scaling.  A trial step
    is accepted only if it lowers the cost; the damping is divided by
    ``options.factor`` after an accepted step and multiplied by it after a
    rejected one.  Convergence is declared when the accepted step norm drops
    below ``step_tol`` (relative to the parameter norm) or the relative cost
    change drops below ``cost_tol``.  Hitting ``max_iter`` returns the current
    iterate with ``converged=False``.
    """
    opts = options or LMOptions()
    theta = np.array(theta0, dtype=float)
    jac_fn = jacobian_fn or (lambda t: numeric_jacobian(residual_fn, t, opts.fd_step))

    r = np.asarray(residual_fn(theta), dtype=float)
    cost = 0.5 * float(r @ r)
    if cost == 0.0:
        return LMResult(theta, True, 0, 0.0, "zero residual at start")

    lam = opts.lambda0
    iterations = 0
    while iterations < opts.max_iter:
        iterations += 1
        jac = np.asarray(jac_fn(theta), dtype=float)
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag == 0.0] = 1.0

        accepted = False
        while not accepted:
            try:
                delta = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= opts.factor
                if lam > 1e16:
                    return LMResult(theta, False, iterations, cost, "singular normal equations")
                continue
            trial = theta + delta
            r_trial = np.asarray(residual_fn(trial), dtype=float)
            cost_trial = 0.5 * float(r_trial @ r_trial)
            if np.isfinite(cost_trial) and cost_trial <= cost:
                accepted = True
            else:
                lam *= opts.factor
                if lam > 1e16:
                    return LMResult(theta, True, iterations, cost, "no further decrease possible")

        step_norm = float(np.linalg.norm(delta))
        rel_change = (cost - cost_trial) / cost if cost > 0 else 0.0
        theta, r, cost = trial, r_trial, cost_trial
        lam = max(lam / opts.factor, 1e-15)

        if cost == 0.0:
            return LMResult(theta, True, iterations, cost, "zero residual")
        if step_norm < opts.step_tol * (float(np.linalg.norm(theta)) + opts.step_tol):
            return LMResult(theta, True, iterations, cost, "step tolerance")
        if rel_change < opts.cost_tol:
            return LMResult(theta, True, iterations, cost, "cost tolerance")
    return LMResult(theta, False, iterations, cost, "maximum iterations reached")
