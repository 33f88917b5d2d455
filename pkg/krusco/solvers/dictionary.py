"""D-step: all atoms at once under ||D_k||_F <= 1, activations frozen."""

from typing import Optional, Union

import numpy as np
import numpy.typing as npt
import structlog
from scipy.sparse.linalg import LinearOperator

from krusco.exceptions import NumericalError, StructuralError
from krusco.model.kcsc import ActivationSet, Dictionary
from krusco.solvers.proximal import SolverBudget, accelerated_proximal_gradient
from krusco.tensor.convolution import convolve, correlate_valid
from krusco.tensor.core import as_dense

logger = structlog.get_logger(__name__)

Activations = Union[ActivationSet, np.ndarray]


def project_unit_ball(atom: npt.ArrayLike) -> np.ndarray:
    """Radial projection onto the closed unit Frobenius ball"""
    atom = np.array(atom, dtype=np.float64)
    norm = np.linalg.norm(atom)
    if norm > 1.0:
        return atom / norm
    return atom


def _dense_activations(acts: Activations) -> np.ndarray:
    if isinstance(acts, ActivationSet):
        return acts.to_dense()
    return np.asarray(acts, dtype=np.float64)


def _check_shapes(y: np.ndarray, atom_shape: tuple, dense: np.ndarray) -> None:
    expected = tuple(w + m - 1 for w, m in zip(atom_shape, dense.shape[1:]))
    if dense.ndim - 1 != len(atom_shape) or tuple(y.shape) != expected:
        raise StructuralError(
            f"signal {tuple(y.shape)} does not pair with atoms {atom_shape} "
            f"and activations {dense.shape[1:]}"
        )


def _reconstruct(atoms: np.ndarray, dense: np.ndarray, out_shape: tuple) -> np.ndarray:
    out = np.zeros(out_shape)
    for atom, act in zip(atoms, dense):
        if np.any(act):
            out += convolve(atom, act)
    return out


def _atom_operator(dense: np.ndarray, atom_shape: tuple,
                   out_shape: tuple) -> LinearOperator:
    """A: stacked atoms (K, w...) -> sum_k D_k * Z_k, with its adjoint"""
    n_atoms = dense.shape[0]
    atom_size = int(np.prod(atom_shape))
    active = [k for k in range(n_atoms) if np.any(dense[k])]

    def matvec(v: np.ndarray) -> np.ndarray:
        atoms = np.reshape(v, (n_atoms,) + atom_shape)
        return _reconstruct(atoms, dense, out_shape).ravel()

    def rmatvec(v: np.ndarray) -> np.ndarray:
        residual = np.reshape(v, out_shape)
        out = np.zeros((n_atoms,) + atom_shape)
        for k in active:
            out[k] = correlate_valid(residual, dense[k])
        return out.ravel()

    return LinearOperator(
        shape=(int(np.prod(out_shape)), n_atoms * atom_size),
        matvec=matvec,
        rmatvec=rmatvec,
        dtype=np.float64,
    )


def dict_gradient(y: npt.ArrayLike, dictionary: Dictionary,
                  acts: Activations) -> np.ndarray:
    """Gradient of ||Y - sum_k D_k * Z_k||^2 w.r.t. each atom, shape (K, w...)"""
    y = as_dense(y, "signal")
    dense = _dense_activations(acts)
    _check_shapes(y, dictionary.atom_shape, dense)
    residual = y - _reconstruct(dictionary.atoms, dense, y.shape)
    gradient = np.stack([-2.0 * correlate_valid(residual, act) for act in dense])
    if not np.all(np.isfinite(gradient)):
        raise NumericalError("non-finite dictionary gradient")
    return gradient


def update_dictionary(y: npt.ArrayLike, dict0: Dictionary, acts: Activations,
                      budget: Optional[SolverBudget] = None) -> Dictionary:
    """Projected accelerated gradient on the atoms; never worse than `dict0`"""
    budget = budget or SolverBudget(max_iter=200)
    y = as_dense(y, "signal")
    dense = _dense_activations(acts)
    _check_shapes(y, dict0.atom_shape, dense)
    if not np.any(dense):
        logger.debug("All activations are zero, dictionary left unchanged")
        return dict0

    n_atoms = dict0.n_atoms

    def project(v: np.ndarray, step: float) -> np.ndarray:
        rows = np.reshape(v, (n_atoms, -1))
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        return (rows / np.maximum(norms, 1.0)).ravel()

    result = accelerated_proximal_gradient(
        _atom_operator(dense, dict0.atom_shape, y.shape),
        y,
        dict0.atoms,
        prox=project,
        penalty=lambda v: 0.0,
        budget=budget,
        label="dictionary",
    )
    return Dictionary(result.x.reshape(dict0.atoms.shape))
