"""Full-rank activation update used by the baseline model.

Same proximal gradient machinery as the Kruskal Z-step, but the K
activation tensors are dense (m_1, ..., m_p) arrays with one L1 weight.
"""

from typing import Optional, Sequence

import numpy as np
import numpy.typing as npt
from scipy.sparse.linalg import LinearOperator

from krusco.exceptions import StructuralError
from krusco.model.kcsc import Dictionary
from krusco.solvers.proximal import (
    SolverBudget,
    accelerated_proximal_gradient,
    soft_threshold,
)
from krusco.tensor.convolution import convolve, correlate_valid
from krusco.tensor.core import as_dense


def _activation_shape(y: np.ndarray, dictionary: Dictionary) -> tuple:
    if y.ndim != dictionary.order:
        raise StructuralError(f"signal order {y.ndim} != atom order {dictionary.order}")
    shape = tuple(n - w + 1 for n, w in zip(y.shape, dictionary.atom_shape))
    if any(m < 1 for m in shape):
        raise StructuralError(
            f"atoms {dictionary.atom_shape} larger than signal {y.shape}"
        )
    return shape


def _activation_operator(dictionary: Dictionary, act_shape: Sequence[int],
                         out_shape: Sequence[int]) -> LinearOperator:
    n_atoms = dictionary.n_atoms
    full_shape = (n_atoms,) + tuple(act_shape)

    def matvec(v: np.ndarray) -> np.ndarray:
        acts = np.reshape(v, full_shape)
        out = np.zeros(out_shape)
        for atom, act in zip(dictionary, acts):
            if np.any(act):
                out += convolve(atom, act)
        return out.ravel()

    def rmatvec(v: np.ndarray) -> np.ndarray:
        residual = np.reshape(v, out_shape)
        return np.stack(
            [correlate_valid(residual, atom) for atom in dictionary]
        ).ravel()

    return LinearOperator(
        shape=(int(np.prod(out_shape)), int(np.prod(full_shape))),
        matvec=matvec,
        rmatvec=rmatvec,
        dtype=np.float64,
    )


def dense_alpha_max(y: npt.ArrayLike, dictionary: Dictionary) -> float:
    """Smallest L1 weight for which all-zero dense activations are optimal"""
    y = as_dense(y, "signal")
    _activation_shape(y, dictionary)
    correlations = [np.abs(correlate_valid(y, atom)).max() for atom in dictionary]
    return float(2.0 * max(correlations))


def solve_dense_activations(y: npt.ArrayLike, dictionary: Dictionary, alpha: float,
                            beta: float = 0.0,
                            warm_start: Optional[npt.ArrayLike] = None,
                            budget: Optional[SolverBudget] = None) -> np.ndarray:
    """Dense activations (K, m_1, ..., m_p) minimizing the full-rank objective"""
    y = as_dense(y, "signal")
    act_shape = _activation_shape(y, dictionary)
    full_shape = (dictionary.n_atoms,) + act_shape
    if warm_start is None:
        x0 = np.zeros(full_shape)
    else:
        x0 = np.asarray(warm_start, dtype=np.float64)
        if x0.shape != full_shape:
            raise StructuralError(f"warm start shape {x0.shape} != {full_shape}")

    if alpha >= dense_alpha_max(y, dictionary):
        return np.zeros(full_shape)

    result = accelerated_proximal_gradient(
        _activation_operator(dictionary, act_shape, y.shape),
        y,
        x0,
        prox=lambda v, step: soft_threshold(v, alpha * step),
        penalty=lambda v: alpha * float(np.abs(v).sum()),
        ridge=beta,
        budget=budget,
        label="dense-activations",
    )
    return result.x.reshape(full_shape)
