"""Circulant tensors: convolution written as a linear (regression) map.

``Circ(D)[l_1, k_1, ..., l_p, k_p] = D[l_1 - k_1, ..., l_p - k_p]`` when every
offset lies in ``[0, w_i)`` and zero otherwise. The dense materialization
has ``prod(n_l * m_l)`` entries and is only meant for small instances.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import structlog

from krusco.config.settings import settings
from krusco.exceptions import CapacityError, StructuralError
from krusco.model.kcsc import ActivationSet
from krusco.tensor.core import DenseTensor, as_dense

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class CirculantTensor:
    atom_shape: Tuple[int, ...]
    signal_shape: Tuple[int, ...]
    values: np.ndarray

    @property
    def activation_shape(self) -> Tuple[int, ...]:
        return tuple(n - w + 1 for n, w in zip(self.signal_shape, self.atom_shape))

    def as_matrix(self) -> np.ndarray:
        """Rows enumerate signal indices, columns activation indices (row-major)"""
        order = len(self.signal_shape)
        axes = list(range(0, 2 * order, 2)) + list(range(1, 2 * order, 2))
        rows = int(np.prod(self.signal_shape))
        return self.values.transpose(axes).reshape(rows, -1)


def circulant(atom: npt.ArrayLike, signal_shape: Sequence[int],
              budget: Optional[int] = None) -> CirculantTensor:
    """Materialize the circulant tensor of `atom` for signals of `signal_shape`"""
    atom = as_dense(atom, "atom")
    signal_shape = tuple(int(n) for n in signal_shape)
    if len(signal_shape) != atom.ndim:
        raise StructuralError(
            f"signal order {len(signal_shape)} != atom order {atom.ndim}"
        )
    if any(w > n for w, n in zip(atom.shape, signal_shape)):
        raise StructuralError(f"atom {atom.shape} larger than signal {signal_shape}")

    act_shape = tuple(n - w + 1 for n, w in zip(signal_shape, atom.shape))
    n_entries = int(
        np.prod([n * m for n, m in zip(signal_shape, act_shape)], dtype=np.int64)
    )
    limit = settings.circulant_budget if budget is None else budget
    if n_entries > limit:
        raise CapacityError(
            f"circulant tensor would hold {n_entries} entries, budget is {limit}"
        )

    interleaved = tuple(
        extent for pair in zip(signal_shape, act_shape) for extent in pair
    )
    values = np.zeros(interleaved)
    grids = np.ix_(*[np.arange(m) for m in act_shape])
    for offset in np.ndindex(*atom.shape):
        index = tuple(
            axis_index
            for grid, shift in zip(grids, offset)
            for axis_index in (grid + shift, grid)
        )
        values[index] = atom[offset]

    logger.debug("Circulant tensor materialized", atom_shape=atom.shape,
                 signal_shape=signal_shape, entries=n_entries)
    return CirculantTensor(atom.shape, signal_shape, values)


def apply_linear_map(circs: Sequence[CirculantTensor],
                     acts: ActivationSet) -> DenseTensor:
    """sum_k <Circ_k[i_1, :, ..., i_p, :], [[Z_k]]>_F for every signal index"""
    if len(circs) != acts.n_atoms:
        raise StructuralError(f"{len(circs)} circulants for {acts.n_atoms} activations")
    signal_shapes = {circ.signal_shape for circ in circs}
    if len(signal_shapes) != 1:
        raise StructuralError(
            f"circulants disagree on signal shape: {sorted(signal_shapes)}"
        )
    out_shape = signal_shapes.pop()
    out = np.zeros(int(np.prod(out_shape)))
    for circ, act in zip(circs, acts):
        if circ.activation_shape != act.shape:
            raise StructuralError(
                f"circulant expects activations {circ.activation_shape}, "
                f"got {act.shape}"
            )
        out += circ.as_matrix() @ act.to_dense().ravel()
    return out.reshape(out_shape)
