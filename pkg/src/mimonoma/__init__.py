"""Massive-MIMO-NOMA link-level simulation and outage analysis."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
