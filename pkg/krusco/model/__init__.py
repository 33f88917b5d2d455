from krusco.model.circulant import CirculantTensor, apply_linear_map, circulant
from krusco.model.kcsc import (
    ActivationSet,
    Dictionary,
    ObjectiveBreakdown,
    Penalty,
    check_paired,
    objective,
    objective_dense,
    penalty_terms,
    reconstruct_dense,
    signal_shape,
    synthesize,
)

__all__ = [
    "ActivationSet",
    "CirculantTensor",
    "Dictionary",
    "ObjectiveBreakdown",
    "Penalty",
    "apply_linear_map",
    "check_paired",
    "circulant",
    "objective",
    "objective_dense",
    "penalty_terms",
    "reconstruct_dense",
    "signal_shape",
    "synthesize",
]
