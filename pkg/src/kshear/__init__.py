"""Keplerian shear and Rajchman measures: numerical experiments on torus bundles."""

__version__ = "0.1.0"
