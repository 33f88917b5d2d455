"""Fit summaries written to metrics.json, and residual statistics."""

from typing import List, Optional, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from krusco.driver.engine import FitResult, KcscConfig
from krusco.model.kcsc import (
    ActivationSet,
    Dictionary,
    objective,
    objective_dense,
    reconstruct_dense,
    synthesize,
)
from krusco.tensor.core import as_dense, dense_parameter_count


class MetricsReport(BaseModel):
    """Final state of one fit; every number finite and non-negative"""

    model_config = ConfigDict(allow_inf_nan=False)

    model: str = Field(pattern="^(kcsc|baseline)$")
    objective: float = Field(ge=0)
    residual: float = Field(ge=0)
    l1: float = Field(ge=0)
    ridge: float = Field(ge=0)
    l2_distance: float = Field(ge=0, description="||Y - Y_hat||_F")
    relative_distance: float = Field(ge=0, description="||Y - Y_hat||_F / ||Y||_F")
    nnz_per_mode: List[int] = Field(
        description="Nonzero factor entries per mode (one entry for the baseline)"
    )
    nnz_total: int = Field(ge=0)
    kruskal_parameters: Optional[int] = Field(
        default=None, ge=0, description="K * R * sum(m_l)"
    )
    dense_parameters: int = Field(ge=0, description="K * prod(m_l)")
    rank: Optional[int] = Field(default=None, ge=1)
    loops: int = Field(ge=0)
    seconds: float = Field(ge=0)
    initial_alpha_max: List[float] = Field(default_factory=list)


class ResidualReport(BaseModel):
    """Residual statistics of a reconstruction"""

    model_config = ConfigDict(allow_inf_nan=False)

    signal_norm: float = Field(ge=0)
    l2_distance: float = Field(ge=0)
    relative_distance: float = Field(ge=0)
    max_abs_error: float = Field(ge=0)
    mean_abs_error: float = Field(ge=0)


def model_reconstruction(dictionary: Dictionary,
                         acts: Union[ActivationSet, npt.ArrayLike]) -> np.ndarray:
    if isinstance(acts, ActivationSet):
        return synthesize(dictionary, acts)
    return reconstruct_dense(dictionary, acts)


def _relative(distance: float, norm: float) -> float:
    return distance / norm if norm > 0 else 0.0


def residual_report(y: npt.ArrayLike, y_hat: npt.ArrayLike) -> ResidualReport:
    y = as_dense(y, "signal")
    y_hat = as_dense(y_hat, "reconstruction")
    error = np.abs(y - y_hat)
    norm = float(np.linalg.norm(y))
    distance = float(np.linalg.norm(error))
    return ResidualReport(
        signal_norm=norm,
        l2_distance=distance,
        relative_distance=_relative(distance, norm),
        max_abs_error=float(error.max()),
        mean_abs_error=float(error.mean()),
    )


def compute_metrics(y: npt.ArrayLike, result: FitResult,
                    cfg: KcscConfig) -> MetricsReport:
    """Metrics of a K-CSC or baseline fit, penalties taken from `cfg`"""
    y = as_dense(y, "signal")
    dictionary, acts, trace = result
    if isinstance(acts, ActivationSet):
        breakdown = objective(y, dictionary, acts, cfg.penalty)
        nnz_per_mode = list(acts.nnz_per_mode())
        kruskal_parameters, dense_parameters = acts.parameter_counts()
        rank: Optional[int] = acts.rank
    else:
        acts = np.asarray(acts, dtype=np.float64)
        breakdown = objective_dense(y, dictionary, acts, cfg.dense_alpha, cfg.beta[0])
        nnz_per_mode = [int(np.count_nonzero(acts))]
        kruskal_parameters = None
        dense_parameters = acts.shape[0] * dense_parameter_count(acts.shape[1:])
        rank = None

    distance = float(np.sqrt(breakdown.residual))
    return MetricsReport(
        model=trace.model,
        objective=breakdown.total,
        residual=breakdown.residual,
        l1=breakdown.l1,
        ridge=breakdown.ridge,
        l2_distance=distance,
        relative_distance=_relative(distance, float(np.linalg.norm(y))),
        nnz_per_mode=nnz_per_mode,
        nnz_total=sum(nnz_per_mode),
        kruskal_parameters=kruskal_parameters,
        dense_parameters=dense_parameters,
        rank=rank,
        loops=trace.loops_completed,
        seconds=trace.total_seconds,
        initial_alpha_max=list(trace.initial_alpha_max),
    )


def metrics_schema() -> dict:
    """Published JSON schema of metrics.json"""
    return MetricsReport.model_json_schema()
