"""Mixed-frequency volatility decomposition and regime/quantile regressions."""

__version__ = "0.1.0"
