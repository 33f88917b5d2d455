"""Accelerated proximal gradient shared by every block update.

All subproblems have the form

    minimize  ||b - A x||^2 + ridge * ||x||^2 + g(x)

with A a linear operator (``scipy.sparse.linalg.LinearOperator``) and g
either an L1 penalty (soft-thresholding prox) or the indicator of a product
of unit balls (projection prox).
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import numpy.typing as npt
import structlog
from scipy.sparse.linalg import LinearOperator

from krusco.exceptions import ConfigError, NumericalError, StructuralError
from krusco.utils.logging import get_fit_logger

logger = structlog.get_logger(__name__)
fit_logger = get_fit_logger(__name__)

ProxOperator = Callable[[np.ndarray, float], np.ndarray]
PenaltyValue = Callable[[np.ndarray], float]


@dataclass
class SolverBudget:
    """Iteration and tolerance budget of one inner solve"""
    max_iter: int = 500
    tol: float = 1e-8  # relative objective change
    power_iterations: int = 20
    lipschitz_safety: float = 1.05

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.tol < 0:
            raise ConfigError(f"tol must be >= 0, got {self.tol}")
        if self.power_iterations < 1:
            raise ConfigError(
                f"power_iterations must be >= 1, got {self.power_iterations}"
            )
        if self.lipschitz_safety < 1:
            raise ConfigError(
                f"lipschitz_safety must be >= 1, got {self.lipschitz_safety}"
            )


@dataclass
class ProxResult:
    x: np.ndarray
    objective: float
    n_iter: int
    converged: bool


def soft_threshold(v: npt.ArrayLike, t: float) -> np.ndarray:
    """sign(v) * max(|v| - t, 0), elementwise"""
    if t < 0:
        raise StructuralError(f"threshold must be >= 0, got {t}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def estimate_lipschitz(op: LinearOperator, n_iter: int = 20, seed: int = 0) -> float:
    """Largest eigenvalue of A^T A by power iteration (a lower bound)"""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(n_iter):
        w = op.rmatvec(op.matvec(v))
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
    av = op.matvec(v)
    return float(av @ av)


def accelerated_proximal_gradient(
    op: LinearOperator,
    b: np.ndarray,
    x0: np.ndarray,
    prox: ProxOperator,
    penalty: PenaltyValue,
    ridge: float = 0.0,
    budget: SolverBudget | None = None,
    label: str = "prox-grad",
) -> ProxResult:
    """FISTA with function-value restart; returns the best iterate seen.

    The warm start counts as an iterate, so the returned objective never
    exceeds the objective at `x0`.
    """
    budget = budget or SolverBudget()
    b = np.ravel(b)
    x = np.array(x0, dtype=np.float64).ravel()
    if x.shape[0] != op.shape[1] or b.shape[0] != op.shape[0]:
        raise StructuralError(
            f"{label}: operator {op.shape} does not match x0 {x.shape} / b {b.shape}"
        )

    def value(x_: np.ndarray, ax_: np.ndarray) -> float:
        r = b - ax_
        return float(r @ r + ridge * (x_ @ x_) + penalty(x_))

    eigenvalue = estimate_lipschitz(op, budget.power_iterations)
    lipschitz = budget.lipschitz_safety * 2.0 * (eigenvalue + ridge)
    if lipschitz == 0.0:
        # smooth part is constant
        lipschitz = 1.0
    step = 1.0 / lipschitz

    ax = op.matvec(x)
    obj = value(x, ax)
    if not np.isfinite(obj):
        raise NumericalError("non-finite starting objective", solver=label, iteration=0)
    best_x, best_obj = x.copy(), obj
    y, ay = x.copy(), ax.copy()
    t = 1.0
    converged = False
    n_iter = 0

    for n_iter in range(1, budget.max_iter + 1):
        grad = -2.0 * op.rmatvec(b - ay) + 2.0 * ridge * y
        x_new = prox(y - step * grad, step)
        ax_new = op.matvec(x_new)
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(ax_new))):
            raise NumericalError("non-finite iterate", solver=label, iteration=n_iter)
        obj_new = value(x_new, ax_new)

        if obj_new < best_obj:
            best_x, best_obj = x_new.copy(), obj_new

        if obj_new > obj:
            t = 1.0
            y, ay = x_new, ax_new
        else:
            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            momentum = (t - 1.0) / t_next
            y = x_new + momentum * (x_new - x)
            ay = ax_new + momentum * (ax_new - ax)
            t = t_next

        change = abs(obj - obj_new)
        scale = max(abs(obj), np.finfo(float).tiny)
        x, ax, obj = x_new, ax_new, obj_new
        if change <= budget.tol * scale:
            converged = True
            break

    fit_logger.log_solver_stop(label, n_iter, best_obj, converged)
    return ProxResult(best_x, best_obj, n_iter, converged)
