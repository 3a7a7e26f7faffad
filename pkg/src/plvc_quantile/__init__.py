"""PLVC Quantile.

Quantile regression in partially linear varying coefficient models for
longitudinal data: B-spline estimation, rank score and Wald inference on the
constant coefficients, constancy tests for the functional coefficients, and a
Monte Carlo harness for level, power and efficiency studies.
"""

__version__ = "0.1.0"
