"""The Kruskal convolutional sparse coding model.

``Y = sum_k D_k * [[Z_k1, ..., Z_kp]] + noise`` with atoms in the unit
Frobenius ball and activations stored as rank-R Kruskal tensors.
"""

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import structlog

from krusco.exceptions import StructuralError
from krusco.tensor.convolution import conv_separable, convolve
from krusco.tensor.core import (
    DenseTensor,
    KruskalTensor,
    as_dense,
    dense_parameter_count,
    kruskal_parameter_count,
)

logger = structlog.get_logger(__name__)

ATOM_NORM_SLACK = 1e-12


@dataclass(frozen=True)
class Dictionary:
    """K atoms of common shape, stacked along a leading axis"""

    atoms: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.float64, order="C", copy=True)
        if atoms.ndim < 2 or atoms.shape[0] < 1:
            raise StructuralError(
                f"a dictionary needs shape (K, w_1, ..., w_p), got {atoms.shape}"
            )
        if any(extent < 1 for extent in atoms.shape[1:]):
            raise StructuralError(f"atoms have an empty extent: {atoms.shape[1:]}")
        norms = np.sqrt((atoms.reshape(atoms.shape[0], -1) ** 2).sum(axis=1))
        too_long = np.flatnonzero(norms > 1.0 + ATOM_NORM_SLACK)
        if too_long.size:
            raise StructuralError(
                f"atoms {too_long.tolist()} exceed unit Frobenius norm: "
                f"{norms[too_long].tolist()}"
            )
        atoms.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_atoms(cls, atoms: Sequence[npt.ArrayLike]) -> "Dictionary":
        arrays = [as_dense(atom, "atom") for atom in atoms]
        shapes = {array.shape for array in arrays}
        if len(shapes) != 1:
            raise StructuralError(f"atoms have different shapes: {sorted(shapes)}")
        return cls(np.stack(arrays))

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def atom_shape(self) -> Tuple[int, ...]:
        return tuple(self.atoms.shape[1:])

    @property
    def order(self) -> int:
        return self.atoms.ndim - 1

    def norms(self) -> np.ndarray:
        return np.sqrt((self.atoms.reshape(self.n_atoms, -1) ** 2).sum(axis=1))

    def __len__(self) -> int:
        return self.n_atoms

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.atoms)

    def __getitem__(self, k: int) -> np.ndarray:
        return self.atoms[k]


@dataclass(frozen=True)
class ActivationSet:
    """One Kruskal activation tensor per atom, common shape and rank"""

    entries: Tuple[KruskalTensor, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise StructuralError("an activation set needs at least one entry")
        shapes = {entry.shape for entry in entries}
        if len(shapes) != 1:
            raise StructuralError(f"activation shapes differ: {sorted(shapes)}")
        ranks = {entry.rank for entry in entries}
        if len(ranks) != 1:
            raise StructuralError(f"activation ranks differ: {sorted(ranks)}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, n_atoms: int, shape: Sequence[int], rank: int) -> "ActivationSet":
        return cls(tuple(KruskalTensor.zeros(shape, rank) for _ in range(n_atoms)))

    @property
    def n_atoms(self) -> int:
        return len(self.entries)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.entries[0].shape

    @property
    def rank(self) -> int:
        return self.entries[0].rank

    @property
    def order(self) -> int:
        return self.entries[0].order

    def __len__(self) -> int:
        return self.n_atoms

    def __iter__(self) -> Iterator[KruskalTensor]:
        return iter(self.entries)

    def __getitem__(self, k: int) -> KruskalTensor:
        return self.entries[k]

    def mode_matrix(self, mode: int) -> np.ndarray:
        """Factor matrices of one mode side by side: column s = k*R + r"""
        return np.hstack([entry.factors[mode] for entry in self.entries])

    def with_mode_matrix(self, mode: int, matrix: npt.ArrayLike) -> "ActivationSet":
        """Copy with the mode-`mode` factors taken from an (m_l, K*R) matrix"""
        matrix = np.asarray(matrix, dtype=np.float64)
        expected = (self.shape[mode], self.n_atoms * self.rank)
        if matrix.shape != expected:
            raise StructuralError(f"mode matrix shape {matrix.shape} != {expected}")
        rank = self.rank
        return ActivationSet(tuple(
            entry.with_factor(mode, matrix[:, k * rank:(k + 1) * rank])
            for k, entry in enumerate(self.entries)
        ))

    def to_dense(self) -> DenseTensor:
        """Reconstructions stacked along a leading K axis"""
        return np.stack([entry.to_dense() for entry in self.entries])

    def nnz_per_mode(self) -> Tuple[int, ...]:
        counts = np.array([entry.nnz_per_mode() for entry in self.entries])
        return tuple(int(count) for count in counts.sum(axis=0))

    @property
    def nnz(self) -> int:
        return sum(self.nnz_per_mode())

    def parameter_counts(self) -> Tuple[int, int]:
        """(Kruskal storage K*R*sum(m_l), dense storage K*prod(m_l))"""
        return (
            self.n_atoms * kruskal_parameter_count(self.shape, self.rank),
            self.n_atoms * dense_parameter_count(self.shape),
        )


@dataclass(frozen=True)
class Penalty:
    """Per-mode L1 weights alpha and ridge weights beta"""

    alpha: Tuple[float, ...]
    beta: Tuple[float, ...]

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        beta = tuple(float(b) for b in self.beta)
        if len(alpha) != len(beta):
            raise StructuralError(
                f"alpha has {len(alpha)} entries but beta has {len(beta)}"
            )
        if any(not np.isfinite(v) or v < 0 for v in alpha + beta):
            raise StructuralError(
                f"penalty weights must be finite and >= 0: {alpha}, {beta}"
            )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def zeros(cls, order: int) -> "Penalty":
        return cls((0.0,) * order, (0.0,) * order)

    @property
    def order(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Terms of the penalized least-squares objective"""

    residual: float
    l1: float
    ridge: float

    @property
    def total(self) -> float:
        return self.residual + self.l1 + self.ridge

    def as_dict(self) -> dict:
        return {
            "objective": self.total,
            "residual": self.residual,
            "l1": self.l1,
            "ridge": self.ridge,
        }


def signal_shape(dictionary: Dictionary, acts: ActivationSet) -> Tuple[int, ...]:
    """n_l = m_l + w_l - 1 for a paired dictionary and activation set"""
    if dictionary.n_atoms != acts.n_atoms:
        raise StructuralError(
            f"{dictionary.n_atoms} atoms but {acts.n_atoms} activation tensors"
        )
    if dictionary.order != acts.order:
        raise StructuralError(
            f"atoms have order {dictionary.order}, activations have order {acts.order}"
        )
    return tuple(w + m - 1 for w, m in zip(dictionary.atom_shape, acts.shape))


def check_paired(y: np.ndarray, dictionary: Dictionary, acts: ActivationSet) -> None:
    expected = signal_shape(dictionary, acts)
    if tuple(y.shape) != expected:
        raise StructuralError(
            f"signal shape {tuple(y.shape)} does not match "
            f"atoms {dictionary.atom_shape} "
            f"and activations {acts.shape} (expected {expected})"
        )


def synthesize(dictionary: Dictionary, acts: ActivationSet, noise_sigma: float = 0.0,
               seed: Optional[int] = None) -> DenseTensor:
    """sum_k D_k * Z_k plus centered Gaussian noise with std `noise_sigma`"""
    if noise_sigma < 0:
        raise StructuralError(f"noise_sigma must be >= 0, got {noise_sigma}")
    y = np.zeros(signal_shape(dictionary, acts))
    for atom, act in zip(dictionary, acts):
        y += conv_separable(atom, act)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        y += rng.normal(0.0, noise_sigma, size=y.shape)
        logger.debug("Gaussian noise added", sigma=noise_sigma, seed=seed)
    return y


def reconstruct_dense(dictionary: Dictionary, dense_acts: npt.ArrayLike) -> DenseTensor:
    """sum_k D_k * Z_k for unfactored activations stacked as (K, m_1, ..., m_p)"""
    dense_acts = np.asarray(dense_acts, dtype=np.float64)
    if (dense_acts.shape[0] != dictionary.n_atoms
            or dense_acts.ndim != dictionary.atoms.ndim):
        raise StructuralError(
            f"dense activations {dense_acts.shape} do not pair with "
            f"atoms {dictionary.atoms.shape}"
        )
    out_shape = tuple(
        w + m - 1 for w, m in zip(dictionary.atom_shape, dense_acts.shape[1:])
    )
    y = np.zeros(out_shape)
    for atom, act in zip(dictionary, dense_acts):
        if np.any(act):
            y += convolve(atom, act)
    return y


def penalty_terms(acts: ActivationSet, pen: Penalty) -> Tuple[float, float]:
    """(sum_kl alpha_l ||Z_kl||_1, sum_kl beta_l ||Z_kl||_F^2)"""
    if pen.order != acts.order:
        raise StructuralError(
            f"penalty has {pen.order} modes, activations have {acts.order}"
        )
    l1 = 0.0
    ridge = 0.0
    for mode in range(acts.order):
        matrix = acts.mode_matrix(mode)
        l1 += pen.alpha[mode] * float(np.abs(matrix).sum())
        ridge += pen.beta[mode] * float((matrix ** 2).sum())
    return l1, ridge


def objective(y: npt.ArrayLike, dictionary: Dictionary, acts: ActivationSet,
              pen: Penalty) -> ObjectiveBreakdown:
    """||Y - sum_k D_k * [[Z_k]]||_F^2 + L1 terms + ridge terms (no 1/2 factor)"""
    y = as_dense(y, "signal")
    check_paired(y, dictionary, acts)
    residual = y - synthesize(dictionary, acts)
    l1, ridge = penalty_terms(acts, pen)
    return ObjectiveBreakdown(float((residual ** 2).sum()), l1, ridge)


def objective_dense(y: npt.ArrayLike, dictionary: Dictionary, dense_acts: npt.ArrayLike,
                    alpha: float, beta: float = 0.0) -> ObjectiveBreakdown:
    """Objective of the full-rank model with a single L1 and ridge weight"""
    y = as_dense(y, "signal")
    dense_acts = np.asarray(dense_acts, dtype=np.float64)
    reconstruction = reconstruct_dense(dictionary, dense_acts)
    if reconstruction.shape != y.shape:
        raise StructuralError(
            f"reconstruction shape {reconstruction.shape} != signal {y.shape}"
        )
    residual = y - reconstruction
    return ObjectiveBreakdown(
        float((residual ** 2).sum()),
        float(alpha * np.abs(dense_acts).sum()),
        float(beta * (dense_acts ** 2).sum()),
    )
