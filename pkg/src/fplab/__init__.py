"""Discrete experiments on projections of Ahlfors-David regular planar sets."""

__version__ = "0.1.0"
