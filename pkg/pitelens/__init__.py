"""PiteLens - Benchmark harness for Predicted Individual Treatment Effect (PITE) estimators."""

__version__ = "0.1.0"
