from krusco.solvers.dense import dense_alpha_max, solve_dense_activations
from krusco.solvers.dictionary import (
    dict_gradient,
    project_unit_ball,
    update_dictionary,
)
from krusco.solvers.mode import (
    ModeProblem,
    alpha_max,
    build_mode_problem,
    mode_residual_identity_check,
    solve_mode,
)
from krusco.solvers.proximal import (
    ProxResult,
    SolverBudget,
    accelerated_proximal_gradient,
    estimate_lipschitz,
    soft_threshold,
)

__all__ = [
    "ModeProblem",
    "ProxResult",
    "SolverBudget",
    "accelerated_proximal_gradient",
    "alpha_max",
    "build_mode_problem",
    "dense_alpha_max",
    "dict_gradient",
    "estimate_lipschitz",
    "mode_residual_identity_check",
    "project_unit_ball",
    "soft_threshold",
    "solve_dense_activations",
    "solve_mode",
    "update_dictionary",
]
