"""NPY v1.0 tensor container: little-endian float64, C order only."""

from pathlib import Path
from typing import Union

import numpy as np
import numpy.typing as npt
import structlog
from numpy.lib import format as npy_format

from krusco.exceptions import TensorFormatError
from krusco.tensor.core import as_dense

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]
SUPPORTED_VERSION = (1, 0)
SUPPORTED_DESCR = "<f8"


def read_tensor(path: PathLike) -> np.ndarray:
    """Read a float64 tensor; any other layout is rejected naming the header field"""
    path = Path(path)
    with path.open("rb") as fh:
        try:
            version = npy_format.read_magic(fh)
        except ValueError as exc:
            raise TensorFormatError(f"{path}: field 'magic': {exc}") from exc
        if version != SUPPORTED_VERSION:
            raise TensorFormatError(
                f"{path}: field 'version': {version[0]}.{version[1]} "
                "is not supported, expected 1.0"
            )
        try:
            shape, fortran_order, dtype = npy_format.read_array_header_1_0(fh)
        except ValueError as exc:
            raise TensorFormatError(f"{path}: malformed header: {exc}") from exc

        if dtype.str != SUPPORTED_DESCR:
            raise TensorFormatError(
                f"{path}: field 'descr': {dtype.str!r} is not supported, "
                f"expected {SUPPORTED_DESCR!r}"
            )
        if fortran_order:
            raise TensorFormatError(
                f"{path}: field 'fortran_order': column-major data is not supported"
            )
        if len(shape) == 0:
            raise TensorFormatError(
                f"{path}: field 'shape': 0-dimensional arrays are not tensors"
            )
        if any(extent < 1 for extent in shape):
            raise TensorFormatError(
                f"{path}: field 'shape': every extent must be >= 1, got {shape}"
            )

        expected = int(np.prod(shape)) * dtype.itemsize
        payload = fh.read(expected)
        if len(payload) < expected:
            raise TensorFormatError(
                f"{path}: truncated payload: {len(payload)} of {expected} bytes"
            )
        if fh.read(1):
            raise TensorFormatError(
                f"{path}: trailing bytes after the {expected}-byte payload"
            )

    tensor = np.frombuffer(payload, dtype=SUPPORTED_DESCR).reshape(shape)
    tensor = tensor.astype(np.float64)
    logger.debug("Tensor read", path=str(path), shape=shape)
    return tensor


def write_tensor(path: PathLike, tensor: npt.ArrayLike) -> Path:
    """Write a tensor as NPY v1.0, little-endian float64, row-major"""
    path = Path(path)
    array = np.ascontiguousarray(as_dense(tensor), dtype=SUPPORTED_DESCR)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        npy_format.write_array(fh, array, version=SUPPORTED_VERSION, allow_pickle=False)
    logger.debug("Tensor written", path=str(path), shape=array.shape)
    return path
