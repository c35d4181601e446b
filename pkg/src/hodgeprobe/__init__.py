"""Exact verification of dimension bounds for pushforwards from higher Weil Jacobians."""

__version__ = "0.1.0"
