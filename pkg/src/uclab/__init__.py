"""Numerical laboratory for growth, nodal sets and propagation of smallness of
solutions to second-order elliptic equations."""

__version__ = "0.1.0"
