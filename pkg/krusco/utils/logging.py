import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import structlog

from krusco.config.settings import settings


def setup_logging(level: Optional[str] = None) -> None:
    """Configure structured logging for the library and the CLI"""
    level_name = (level or settings.log_level).upper()
    numeric_level = getattr(logging, level_name, logging.INFO)

    # Configure structlog; stderr keeps stdout free for command output
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            (structlog.dev.ConsoleRenderer() if settings.debug
             else structlog.processors.JSONRenderer()),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )

    # Configure standard logging
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.log_file:
        log_path = Path(settings.log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_path))
    logging.basicConfig(
        level=numeric_level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )

    logger = structlog.get_logger(__name__)
    logger.debug("Logging configured", level=level_name, debug=settings.debug)


class FitLogger:
    """Specialized logger for alternating-minimization events"""

    def __init__(self, name: str):
        self.logger = structlog.get_logger(name)

    def log_block_update(self, loop: int, block: str, objective: float,
                         residual: float, nnz: int, seconds: float):
        """Log one block update of the alternating scheme"""
        self.logger.debug(
            "Block updated",
            loop=loop,
            block=block,
            objective=objective,
            residual=residual,
            nnz=nnz,
            seconds=round(seconds, 6),
            event_type="BLOCK_UPDATE"
        )

    def log_outer_loop(self, loop: int, objective: float, relative_change: float,
                       nnz: int, seconds: float):
        """Log the end of a full Z-step + D-step loop"""
        self.logger.info(
            "Outer loop finished",
            loop=loop,
            objective=objective,
            relative_change=relative_change,
            nnz=nnz,
            seconds=round(seconds, 6),
            event_type="OUTER_LOOP"
        )

    def log_solver_stop(self, solver: str, n_iter: int, objective: float,
                        converged: bool):
        """Log why an inner solver stopped"""
        self.logger.debug(
            "Inner solver stopped",
            solver=solver,
            n_iter=n_iter,
            objective=objective,
            converged=converged,
            event_type="SOLVER_STOP"
        )

    def log_rebalance_rejected(self, loop: int, block: str,
                               terms: Sequence[tuple[int, int]]):
        """Log rank-one terms left unnormalized because it would raise the penalty"""
        self.logger.debug(
            "Rebalance skipped for terms",
            loop=loop,
            block=block,
            terms=list(terms),
            event_type="REBALANCE_REJECTED"
        )

    def log_block_rejected(self, loop: int, block: str, previous: float,
                           candidate: float):
        """Log a block update discarded because the objective rose"""
        self.logger.debug(
            "Block update rejected",
            loop=loop,
            block=block,
            previous=previous,
            candidate=candidate,
            event_type="BLOCK_REJECTED"
        )

    def log_converged(self, loops: int, objective: float, reason: str):
        """Log the end of a fit"""
        self.logger.info(
            "Fit finished",
            loops=loops,
            objective=objective,
            reason=reason,
            event_type="CONVERGED"
        )


def get_fit_logger(name: str) -> FitLogger:
    """Get a fit logger instance"""
    return FitLogger(name)
