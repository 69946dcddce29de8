"""Robotics data-pipeline and evaluation-statistics toolkit."""

__version__ = "0.1.0"
