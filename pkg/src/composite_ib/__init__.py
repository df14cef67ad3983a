"""Composite-field immersed boundary methods on staggered grids."""

__version__ = "0.1.0"
