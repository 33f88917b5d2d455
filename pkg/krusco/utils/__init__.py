from krusco.utils.logging import FitLogger, get_fit_logger, setup_logging

__all__ = ["FitLogger", "get_fit_logger", "setup_logging"]
