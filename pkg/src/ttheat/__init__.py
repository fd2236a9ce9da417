"""Tensor-train finite-difference solver for the 3D heat equation."""
__version__ = "0.1.0"
