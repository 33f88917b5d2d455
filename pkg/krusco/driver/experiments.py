"""Rank sweeps and sparsity-weight grids over repeated fits."""

from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
import pandas as pd
import structlog

from krusco.driver.engine import FitResult, KcscConfig, fit, fit_baseline
from krusco.driver.metrics import compute_metrics
from krusco.exceptions import ConfigError
from krusco.model.kcsc import Dictionary
from krusco.tensor.core import as_dense

logger = structlog.get_logger(__name__)

RANK_SWEEP_COLUMNS = [
    "rank", "l2_distance", "relative_distance", "objective", "nnz", "loops",
]
ALPHA_GRID_COLUMNS = [
    "scale", "model", "alpha", "l2_distance", "relative_distance", "nnz", "objective",
]


def parse_rank_range(text: str) -> List[int]:
    """'LO..HI' (inclusive) or a single rank"""
    try:
        if ".." in text:
            low, high = (int(part) for part in text.split("..", 1))
        else:
            low = high = int(text)
    except ValueError as exc:
        raise ConfigError(f"invalid rank range {text!r}, expected LO..HI") from exc
    if low < 1 or high < low:
        raise ConfigError(f"invalid rank range {text!r}")
    return list(range(low, high + 1))


def rank_sweep(y: npt.ArrayLike, cfg: KcscConfig, ranks: Iterable[int],
               dictionary: Optional[Dictionary] = None,
               ) -> Tuple[pd.DataFrame, Dict[int, FitResult]]:
    """One K-CSC fit per rank, same seed and initial dictionary"""
    y = as_dense(y, "signal")
    rows = []
    results: Dict[int, FitResult] = {}
    for rank in ranks:
        rank_cfg = replace(cfg, rank=int(rank), baseline=False)
        result = fit(y, rank_cfg, dictionary)
        report = compute_metrics(y, result, rank_cfg)
        results[rank_cfg.rank] = result
        rows.append({
            "rank": rank_cfg.rank,
            "l2_distance": report.l2_distance,
            "relative_distance": report.relative_distance,
            "objective": report.objective,
            "nnz": report.nnz_total,
            "loops": report.loops,
        })
        logger.info("Rank sweep point", rank=rank_cfg.rank,
                    l2_distance=report.l2_distance)
    return pd.DataFrame(rows, columns=RANK_SWEEP_COLUMNS), results


def alpha_grid(y: npt.ArrayLike, cfg: KcscConfig, scales: Iterable[float],
               dictionary: Optional[Dictionary] = None,
               baseline: bool = False) -> pd.DataFrame:
    """Fits at uniformly scaled sparsity weights; with `baseline` the full-rank
    model is run at every matched weight too."""
    y = as_dense(y, "signal")
    rows = []
    for scale in scales:
        scale = float(scale)
        if not np.isfinite(scale) or scale < 0:
            raise ConfigError(f"alpha scales must be finite and >= 0, got {scale}")
        scaled = replace(
            cfg,
            alpha=tuple(scale * a for a in cfg.alpha),
            baseline_alpha=scale * cfg.dense_alpha,
            baseline=False,
        )
        runs = [("kcsc", fit)]
        if baseline:
            runs.append(("baseline", fit_baseline))
        for model, runner in runs:
            report = compute_metrics(y, runner(y, scaled, dictionary), scaled)
            rows.append({
                "scale": scale,
                "model": model,
                "alpha": scaled.alpha[0] if model == "kcsc" else scaled.dense_alpha,
                "l2_distance": report.l2_distance,
                "relative_distance": report.relative_distance,
                "nnz": report.nnz_total,
                "objective": report.objective,
            })
            logger.info("Alpha grid point", scale=scale, model=model,
                        l2_distance=report.l2_distance, nnz=report.nnz_total)
    return pd.DataFrame(rows, columns=ALPHA_GRID_COLUMNS)


def rank_knee(distances: pd.Series, true_rank: int, drop: float = 0.5,
              spread: float = 0.25) -> Tuple[bool, bool]:
    """Shape of a distance-per-rank curve around the planted rank.

    Returns (knee, flat): the distance at `true_rank` is at most `drop` times
    the distance one rank below, and the distances over true_rank ..
    true_rank + 2 differ by at most `spread` of their largest value.
    """
    if true_rank - 1 not in distances.index or true_rank not in distances.index:
        raise ConfigError(f"distances need ranks {true_rank - 1} and {true_rank}")
    knee = distances.loc[true_rank] <= drop * distances.loc[true_rank - 1]
    plateau = distances.loc[true_rank:true_rank + 2]
    flat = plateau.max() - plateau.min() <= spread * plateau.max()
    return bool(knee), bool(flat)


def sparsity_wins(frame: pd.DataFrame, slack: float = 1.1) -> int:
    """Grid points of an `alpha_grid` frame where K-CSC beats the baseline.

    A point counts when K-CSC uses no more nonzeros and its distance is at
    most `slack` times the baseline distance.
    """
    wide = frame.pivot(index="scale", columns="model", values=["nnz", "l2_distance"])
    fewer = wide["nnz"]["kcsc"] <= wide["nnz"]["baseline"]
    close = wide["l2_distance"]["kcsc"] <= slack * wide["l2_distance"]["baseline"]
    return int((fewer & close).sum())
