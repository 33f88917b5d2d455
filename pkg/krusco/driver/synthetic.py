"""Planted K-CSC instances: random atoms, sparse low-rank activations."""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
import structlog

from krusco.exceptions import ConfigError
from krusco.model.kcsc import ActivationSet, Dictionary, synthesize
from krusco.solvers.dictionary import project_unit_ball
from krusco.tensor.core import KruskalTensor

logger = structlog.get_logger(__name__)


@dataclass
class SyntheticSpec:
    """Generator settings; the defaults are the reference third-order setup"""
    n_atoms: int = 10
    atom_shape: Tuple[int, ...] = (2, 4, 8)
    signal_shape: Tuple[int, ...] = (16, 32, 64)
    rank: int = 4
    density: float = 0.1  # probability of a nonzero factor entry
    noise_sigma: float = 0.0
    std_range: Tuple[float, float] = (1.0, 10.0)  # per-atom entrywise std

    def __post_init__(self):
        self.atom_shape = tuple(int(w) for w in self.atom_shape)
        self.signal_shape = tuple(int(n) for n in self.signal_shape)
        self.std_range = (float(self.std_range[0]), float(self.std_range[1]))

        if self.n_atoms < 1 or self.rank < 1:
            raise ConfigError(
                f"n_atoms and rank must be >= 1, got {self.n_atoms}, {self.rank}"
            )
        if not self.atom_shape or len(self.atom_shape) != len(self.signal_shape):
            raise ConfigError(
                f"atom shape {self.atom_shape} and signal shape {self.signal_shape} "
                "differ in order"
            )
        if any(w < 1 or w > n for w, n in zip(self.atom_shape, self.signal_shape)):
            raise ConfigError(
                f"atom shape {self.atom_shape} does not fit "
                f"signal shape {self.signal_shape}"
            )
        if not 0.0 < self.density <= 1.0:
            raise ConfigError(f"density must be in (0, 1], got {self.density}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        low, high = self.std_range
        if not 0.0 < low <= high:
            raise ConfigError(f"invalid std range {self.std_range}")

    @property
    def activation_shape(self) -> Tuple[int, ...]:
        return tuple(n - w + 1 for n, w in zip(self.signal_shape, self.atom_shape))


class SyntheticData(NamedTuple):
    y: np.ndarray
    dictionary: Dictionary
    activations: ActivationSet


def _sparse_factor(rng: np.random.Generator, extent: int, rank: int,
                   density: float) -> np.ndarray:
    values = rng.standard_normal((extent, rank))
    factor = values * (rng.random((extent, rank)) < density)
    for r in np.flatnonzero(~factor.any(axis=0)):
        factor[rng.integers(extent), r] = rng.standard_normal() or 1.0
    return factor


def generate_synthetic(spec: Optional[SyntheticSpec] = None,
                       seed: int = 0) -> SyntheticData:
    """Signal, ground-truth dictionary and ground-truth activations"""
    spec = spec or SyntheticSpec()
    rng = np.random.default_rng(seed)

    atoms = []
    for _ in range(spec.n_atoms):
        std = rng.uniform(*spec.std_range)
        atoms.append(project_unit_ball(rng.normal(0.0, std, spec.atom_shape)))
    dictionary = Dictionary(np.stack(atoms))

    activations = ActivationSet(tuple(
        KruskalTensor(tuple(
            _sparse_factor(rng, extent, spec.rank, spec.density)
            for extent in spec.activation_shape
        ))
        for _ in range(spec.n_atoms)
    ))

    noise_seed = int(rng.integers(2 ** 32))
    y = synthesize(dictionary, activations, spec.noise_sigma, noise_seed)
    logger.info("Synthetic instance generated", seed=seed, signal_shape=y.shape,
                n_atoms=spec.n_atoms, rank=spec.rank, nnz=activations.nnz,
                noise_sigma=spec.noise_sigma)
    return SyntheticData(y, dictionary, activations)
