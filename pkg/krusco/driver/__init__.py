from krusco.driver.engine import (
    TRACE_COLUMNS,
    BlockRecord,
    FitResult,
    FitTrace,
    KcscConfig,
    fit,
    fit_baseline,
    fit_model,
    guarded_rebalance,
    init_activations,
    init_dictionary,
    patch_positions,
    penalty_balance,
    rebalance,
    spectral_activations,
)
from krusco.driver.experiments import (
    alpha_grid,
    parse_rank_range,
    rank_knee,
    rank_sweep,
    sparsity_wins,
)
from krusco.driver.metrics import (
    MetricsReport,
    ResidualReport,
    compute_metrics,
    residual_report,
)
from krusco.driver.synthetic import SyntheticData, SyntheticSpec, generate_synthetic

__all__ = [
    "TRACE_COLUMNS",
    "BlockRecord",
    "FitResult",
    "FitTrace",
    "KcscConfig",
    "fit",
    "fit_baseline",
    "fit_model",
    "guarded_rebalance",
    "init_activations",
    "init_dictionary",
    "patch_positions",
    "penalty_balance",
    "rebalance",
    "spectral_activations",
    "alpha_grid",
    "parse_rank_range",
    "rank_knee",
    "rank_sweep",
    "sparsity_wins",
    "MetricsReport",
    "ResidualReport",
    "compute_metrics",
    "residual_report",
    "SyntheticData",
    "SyntheticSpec",
    "generate_synthetic",
]
