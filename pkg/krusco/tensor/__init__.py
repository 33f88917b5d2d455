from krusco.tensor.convolution import (
    conv_fft,
    conv_full,
    conv_separable,
    convolve,
    convolve_along_axes,
    correlate_valid,
)
from krusco.tensor.core import (
    DenseTensor,
    KruskalTensor,
    as_dense,
    cp_reconstruct,
    dense_parameter_count,
    kruskal_equivalent,
    kruskal_parameter_count,
    refold,
    unfold,
)

__all__ = [
    "DenseTensor",
    "KruskalTensor",
    "as_dense",
    "conv_fft",
    "conv_full",
    "conv_separable",
    "convolve",
    "convolve_along_axes",
    "correlate_valid",
    "cp_reconstruct",
    "dense_parameter_count",
    "kruskal_equivalent",
    "kruskal_parameter_count",
    "refold",
    "unfold",
]
