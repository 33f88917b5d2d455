"""Dense and CP-factored (Kruskal) tensors.

Every tensor is a float64, C-contiguous ``numpy.ndarray``: row-major, last
index fastest. Unfoldings enumerate the remaining modes in that same
row-major order, so ``unfold(t, 0)`` is a plain reshape.
"""

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from scipy.linalg import khatri_rao

from krusco.exceptions import StructuralError

DenseTensor = npt.NDArray[np.float64]


def as_dense(values: npt.ArrayLike, name: str = "tensor") -> DenseTensor:
    """Coerce to a C-ordered float64 tensor of order >= 1 with positive extents"""
    if np.ndim(values) == 0:
        raise StructuralError(f"{name} must have order >= 1, got a scalar")
    array = np.ascontiguousarray(values, dtype=np.float64)
    if any(extent < 1 for extent in array.shape):
        raise StructuralError(f"{name} has an empty extent: shape={array.shape}")
    return array


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, order="C", copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class KruskalTensor:
    """Rank-R tensor stored as p factor matrices of shape (m_l, R)"""

    factors: Tuple[np.ndarray, ...]

    def __post_init__(self):
        factors = tuple(_frozen(factor) for factor in self.factors)
        if not factors:
            raise StructuralError("a Kruskal tensor needs at least one factor")
        for mode, factor in enumerate(factors):
            if factor.ndim != 2:
                raise StructuralError(
                    f"factor {mode} must be a matrix, got ndim={factor.ndim}"
                )
            if factor.shape[0] < 1:
                raise StructuralError(f"factor {mode} has no rows")
        ranks = {factor.shape[1] for factor in factors}
        if len(ranks) != 1:
            raise StructuralError(f"factor column counts differ: {sorted(ranks)}")
        if ranks.pop() < 1:
            raise StructuralError("rank must be >= 1")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def from_factors(cls, factors: Iterable[npt.ArrayLike]) -> "KruskalTensor":
        return cls(tuple(np.asarray(factor, dtype=np.float64) for factor in factors))

    @classmethod
    def zeros(cls, shape: Sequence[int], rank: int) -> "KruskalTensor":
        return cls(tuple(np.zeros((extent, rank)) for extent in shape))

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(factor.shape[0] for factor in self.factors)

    def with_factor(self, mode: int, factor: npt.ArrayLike) -> "KruskalTensor":
        """Copy with the factor matrix of one mode replaced"""
        factors = list(self.factors)
        factors[mode] = np.asarray(factor, dtype=np.float64)
        return KruskalTensor(tuple(factors))

    def to_dense(self) -> DenseTensor:
        return cp_reconstruct(self)

    def nnz_per_mode(self) -> Tuple[int, ...]:
        return tuple(int(np.count_nonzero(factor)) for factor in self.factors)

    @property
    def n_parameters(self) -> int:
        return kruskal_parameter_count(self.shape, self.rank)


def cp_reconstruct(kt: KruskalTensor) -> DenseTensor:
    """Sum over r of the outer products of the r-th factor columns.

    Computed through the mode-0 unfolding ``U_0 @ khatri_rao(U_1, ..., U_p-1).T``;
    scipy's Khatri-Rao product keeps the first matrix slowest, which is the
    row-major column order used by ``unfold``.
    """
    factors = kt.factors
    ranks = {factor.shape[1] for factor in factors}
    if len(ranks) != 1:
        raise StructuralError(f"factor column counts differ: {sorted(ranks)}")
    if len(factors) == 1:
        return np.ascontiguousarray(factors[0].sum(axis=1))
    rest = reduce(khatri_rao, factors[1:])
    unfolded = factors[0] @ rest.T
    return np.ascontiguousarray(unfolded.reshape(kt.shape))


def _check_mode(mode: int, order: int) -> None:
    if not 0 <= mode < order:
        raise StructuralError(f"mode {mode} out of range for order {order}")


def unfold(t: npt.ArrayLike, mode: int) -> DenseTensor:
    """Mode-`mode` unfolding: shape (n_mode, prod of the other extents)"""
    tensor = as_dense(t)
    _check_mode(mode, tensor.ndim)
    moved = np.moveaxis(tensor, mode, 0)
    return np.ascontiguousarray(moved.reshape(tensor.shape[mode], -1))


def refold(matrix: npt.ArrayLike, mode: int, shape: Sequence[int]) -> DenseTensor:
    """Inverse of `unfold` for a tensor of the given shape"""
    shape = tuple(int(extent) for extent in shape)
    _check_mode(mode, len(shape))
    matrix = np.asarray(matrix, dtype=np.float64)
    moved_shape = (shape[mode],) + shape[:mode] + shape[mode + 1:]
    if matrix.size != int(np.prod(shape)):
        raise StructuralError(
            f"cannot refold {matrix.shape} into shape {shape}"
        )
    return np.ascontiguousarray(np.moveaxis(matrix.reshape(moved_shape), 0, mode))


def kruskal_equivalent(a: KruskalTensor, b: KruskalTensor, tol: float) -> bool:
    """Compare two CP tensors through their reconstructions.

    Factors are identifiable only up to column permutation and scaling, so
    the comparison is ``||[[a]] - [[b]]||_F <= tol * ||[[a]]||_F``.
    """
    if a.shape != b.shape:
        raise StructuralError(f"shape mismatch: {a.shape} vs {b.shape}")
    dense_a = cp_reconstruct(a)
    dense_b = cp_reconstruct(b)
    return bool(np.linalg.norm(dense_a - dense_b) <= tol * np.linalg.norm(dense_a))


def kruskal_parameter_count(shape: Sequence[int], rank: int) -> int:
    """Scalars stored by a rank-R Kruskal tensor: R * sum(m_l)"""
    return int(rank * sum(shape))


def dense_parameter_count(shape: Sequence[int]) -> int:
    """Scalars stored by the dense equivalent: prod(m_l)"""
    return int(np.prod(shape, dtype=np.int64))
