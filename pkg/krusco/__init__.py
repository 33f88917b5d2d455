"""
krusco - Kruskal convolutional sparse coding
Learns small multidimensional atoms with sparse, low-CP-rank activations.
"""

__version__ = "0.1.0"
