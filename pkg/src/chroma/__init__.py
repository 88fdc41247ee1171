"""Reporting-bias analytics for object colors.

Quantifies how corpus color mentions diverge from human-perceived color
distributions and how well model predictions or representations recover
them: annotation aggregation with quality control, JS-based object
grouping, streaming n-gram statistics, zero-shot metric suites, and
loss-data representation probing (MDL / SDL / epsilon sample complexity).
"""

__version__ = "0.1.0"
