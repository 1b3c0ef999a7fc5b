"""Cross-index forecasting laboratory: train on one market index, test on another."""
__version__ = "0.1.0"
