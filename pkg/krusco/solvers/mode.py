"""Z-step: one mode of every activation tensor, the others frozen.

Unfolding the signal along the updated mode turns the block update into a
one-dimensional CSC with S = K*R single-channel activations and
C = prod(n_i, i != mode) channels per filter:

    sum_c || Y~[:, c] - sum_s D~[s, :, c] * z_s ||^2

where D~[s=(k, r), :, c] is atom k convolved along every other mode with the
rank-r factor columns of those modes.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt
import structlog
from scipy.sparse.linalg import LinearOperator

from krusco.exceptions import StructuralError
from krusco.model.kcsc import (
    ActivationSet,
    Dictionary,
    Penalty,
    check_paired,
    objective,
)
from krusco.solvers.proximal import (
    SolverBudget,
    accelerated_proximal_gradient,
    soft_threshold,
)
from krusco.tensor.convolution import convolve_along_axes
from krusco.tensor.core import as_dense, unfold

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class ModeProblem:
    """Multichannel 1-D CSC problem of one mode"""

    y_unfolded: np.ndarray  # (n_l, C)
    filters: np.ndarray  # (S, w_l, C)
    alpha: float
    beta: float
    mode: int = 0
    n_atoms: int = 1
    rank: int = 1

    def __post_init__(self):
        if self.y_unfolded.ndim != 2 or self.filters.ndim != 3:
            raise StructuralError(
                f"expected a (n, C) signal and (S, w, C) filters, got "
                f"{self.y_unfolded.shape} and {self.filters.shape}"
            )
        if self.filters.shape[2] != self.y_unfolded.shape[1]:
            raise StructuralError(
                f"filters have {self.filters.shape[2]} channels, "
                f"signal has {self.y_unfolded.shape[1]}"
            )
        if self.filters.shape[1] > self.y_unfolded.shape[0]:
            raise StructuralError(
                f"filter length {self.filters.shape[1]} exceeds "
                f"signal length {self.y_unfolded.shape[0]}"
            )
        if self.filters.shape[0] != self.n_atoms * self.rank:
            raise StructuralError(
                f"{self.filters.shape[0]} filters for K={self.n_atoms}, R={self.rank}"
            )
        if self.alpha < 0 or self.beta < 0:
            raise StructuralError(
                f"alpha and beta must be >= 0: {self.alpha}, {self.beta}"
            )

    @property
    def n_channels(self) -> int:
        return self.y_unfolded.shape[1]

    @property
    def n_filters(self) -> int:
        return self.filters.shape[0]

    @property
    def filter_length(self) -> int:
        return self.filters.shape[1]

    @property
    def activation_length(self) -> int:
        return self.y_unfolded.shape[0] - self.filter_length + 1

    def forward(self, z: np.ndarray) -> np.ndarray:
        """(S, m) activations -> (n, C) multichannel signal"""
        m = self.activation_length
        out = np.zeros_like(self.y_unfolded)
        for j in range(self.filter_length):
            out[j:j + m] += z.T @ self.filters[:, j, :]
        return out

    def adjoint(self, residual: np.ndarray) -> np.ndarray:
        """(n, C) signal -> (S, m) filter correlations summed over channels"""
        m = self.activation_length
        out = np.zeros((self.n_filters, m))
        for j in range(self.filter_length):
            out += self.filters[:, j, :] @ residual[j:j + m].T
        return out

    def operator(self) -> LinearOperator:
        n, c = self.y_unfolded.shape
        s, m = self.n_filters, self.activation_length
        return LinearOperator(
            shape=(n * c, s * m),
            matvec=lambda v: self.forward(np.reshape(v, (s, m))).ravel(),
            rmatvec=lambda v: self.adjoint(np.reshape(v, (n, c))).ravel(),
            dtype=np.float64,
        )

    def objective(self, z: npt.ArrayLike) -> float:
        """Objective at an (m, S) matrix of activation columns"""
        z = np.asarray(z, dtype=np.float64).T
        residual = self.y_unfolded - self.forward(z)
        return float(
            (residual ** 2).sum()
            + self.alpha * np.abs(z).sum()
            + self.beta * (z ** 2).sum()
        )


def build_mode_problem(y: npt.ArrayLike, dictionary: Dictionary, acts: ActivationSet,
                       mode: int, pen: Penalty) -> ModeProblem:
    """Unfold Y along `mode` and build the K*R multichannel filters of that mode"""
    y = as_dense(y, "signal")
    check_paired(y, dictionary, acts)
    if not 0 <= mode < acts.order:
        raise StructuralError(f"mode {mode} out of range for order {acts.order}")
    if pen.order != acts.order:
        raise StructuralError(
            f"penalty has {pen.order} modes, activations have {acts.order}"
        )

    others = [axis for axis in range(acts.order) if axis != mode]
    blocks = []
    for atom, act in zip(dictionary, acts):
        for r in range(acts.rank):
            columns = {axis: act.factors[axis][:, r] for axis in others}
            blocks.append(unfold(convolve_along_axes(atom, columns), mode))

    return ModeProblem(
        y_unfolded=unfold(y, mode),
        filters=np.stack(blocks),
        alpha=pen.alpha[mode],
        beta=pen.beta[mode],
        mode=mode,
        n_atoms=acts.n_atoms,
        rank=acts.rank,
    )


def mode_residual_identity_check(y: npt.ArrayLike, dictionary: Dictionary,
                                 acts: ActivationSet, mode: int) -> Tuple[float, float]:
    """(||Y - sum_k D_k * [[Z_k]]||^2, the same residual on the unfolded problem)"""
    zero_penalty = Penalty.zeros(acts.order)
    lhs = objective(y, dictionary, acts, zero_penalty).residual
    problem = build_mode_problem(y, dictionary, acts, mode, zero_penalty)
    residual = problem.y_unfolded - problem.forward(acts.mode_matrix(mode).T)
    return lhs, float((residual ** 2).sum())


def alpha_max(problem: ModeProblem) -> float:
    """Smallest L1 weight for which zero solves the mode problem.

    Zero is optimal iff ||2 A^T Y~||_inf <= alpha; the factor 2 comes from the
    un-halved quadratic. The ridge term has zero gradient at zero.
    """
    return float(2.0 * np.abs(problem.adjoint(problem.y_unfolded)).max())


def solve_mode(problem: ModeProblem, warm_start: Optional[npt.ArrayLike] = None,
               budget: Optional[SolverBudget] = None) -> np.ndarray:
    """Approximate minimizer as an (m_l, S) matrix whose column s is z_s"""
    budget = budget or SolverBudget()
    shape = (problem.activation_length, problem.n_filters)
    if warm_start is None:
        x0 = np.zeros(shape)
    else:
        x0 = np.asarray(warm_start, dtype=np.float64)
        if x0.shape != shape:
            raise StructuralError(f"warm start shape {x0.shape} != {shape}")

    ceiling = alpha_max(problem)
    if problem.alpha >= ceiling:
        logger.debug("Zero certificate", mode=problem.mode, alpha=problem.alpha,
                     alpha_max=ceiling)
        return np.zeros(shape)

    alpha = problem.alpha
    result = accelerated_proximal_gradient(
        problem.operator(),
        problem.y_unfolded,
        x0.T,
        prox=lambda v, step: soft_threshold(v, alpha * step),
        penalty=lambda v: alpha * float(np.abs(v).sum()),
        ridge=problem.beta,
        budget=budget,
        label=f"mode-{problem.mode}",
    )
    return np.ascontiguousarray(result.x.reshape(problem.n_filters, -1).T)
