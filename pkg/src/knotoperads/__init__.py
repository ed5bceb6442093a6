"""Operads of rooted planar trees, bracket algebras, and spherical
configuration geometry for knot-space computations."""

__version__ = "0.1.0"
