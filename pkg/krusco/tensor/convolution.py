"""Full linear convolutions between atoms and activation tensors.

All routines use 0-based indices and zero extension outside the supports:
``out[i] = sum_j atom[j] * act[i - j]`` with output extents
``n_l = m_l + w_l - 1``.
"""

from typing import Mapping, Optional

import numpy as np
import numpy.typing as npt
from scipy import signal

from krusco.config.settings import settings
from krusco.exceptions import StructuralError
from krusco.tensor.core import DenseTensor, KruskalTensor, as_dense


def _check_orders(atom: np.ndarray, act_order: int) -> None:
    if atom.ndim != act_order:
        raise StructuralError(
            f"order mismatch: atom has order {atom.ndim}, "
            f"activation has order {act_order}"
        )


def conv_full(atom: npt.ArrayLike, act: npt.ArrayLike) -> DenseTensor:
    """Direct (spatial-domain) full convolution"""
    atom = as_dense(atom, "atom")
    act = as_dense(act, "activation")
    _check_orders(atom, act.ndim)
    return signal.convolve(act, atom, mode="full", method="direct")


def conv_fft(atom: npt.ArrayLike, act: npt.ArrayLike) -> DenseTensor:
    """Full convolution by zero-padded spectral multiplication"""
    atom = as_dense(atom, "atom")
    act = as_dense(act, "activation")
    _check_orders(atom, act.ndim)
    return signal.fftconvolve(act, atom, mode="full")


def convolve(atom: npt.ArrayLike, act: npt.ArrayLike,
             fft_threshold: Optional[int] = None) -> DenseTensor:
    """Full convolution; FFT-based when the kernel exceeds `fft_threshold` entries"""
    atom = as_dense(atom, "atom")
    threshold = settings.fft_threshold if fft_threshold is None else fft_threshold
    if atom.size > threshold:
        return conv_fft(atom, act)
    return conv_full(atom, act)


def convolve_along_axes(tensor: np.ndarray,
                        vectors: Mapping[int, np.ndarray]) -> DenseTensor:
    """Sequential one-dimensional full convolutions, one vector per axis.

    Axes missing from `vectors` are left untouched, so each listed axis grows
    from w to w + len(vector) - 1.
    """
    result = np.asarray(tensor, dtype=np.float64)
    for axis, vector in vectors.items():
        kernel_shape = [1] * result.ndim
        kernel_shape[axis] = len(vector)
        kernel = np.asarray(vector, dtype=np.float64).reshape(kernel_shape)
        result = signal.convolve(result, kernel, mode="full", method="direct")
    return np.ascontiguousarray(result)


def conv_separable(atom: npt.ArrayLike, act: KruskalTensor) -> DenseTensor:
    """Convolution with a CP activation, one rank-one term at a time.

    Each term costs p one-dimensional convolutions instead of one
    p-dimensional convolution with the dense activation.
    """
    atom = as_dense(atom, "atom")
    _check_orders(atom, act.order)
    out_shape = tuple(w + m - 1 for w, m in zip(atom.shape, act.shape))
    out = np.zeros(out_shape)
    for r in range(act.rank):
        columns = {axis: factor[:, r] for axis, factor in enumerate(act.factors)}
        if not all(np.any(column) for column in columns.values()):
            continue
        out += convolve_along_axes(atom, columns)
    return out


def correlate_valid(signal_tensor: npt.ArrayLike, kernel: npt.ArrayLike) -> DenseTensor:
    """Valid-mode cross-correlation: ``out[t] = sum_j signal[t + j] * kernel[j]``.

    This is the adjoint of ``z -> conv(kernel, z)`` and also, with the roles
    swapped, the adjoint of ``d -> conv(d, z)``.
    """
    signal_tensor = as_dense(signal_tensor, "signal")
    kernel = as_dense(kernel, "kernel")
    _check_orders(kernel, signal_tensor.ndim)
    if any(k > s for k, s in zip(kernel.shape, signal_tensor.shape)):
        raise StructuralError(
            f"kernel {kernel.shape} larger than signal {signal_tensor.shape}"
        )
    return signal.correlate(signal_tensor, kernel, mode="valid", method="auto")
