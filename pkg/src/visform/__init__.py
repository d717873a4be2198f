"""Visibility-constrained nonlocal energy forms on constructed 2D domains."""

from . import forms, geometry, kernels, mesh, spectral, walker, whitney

__all__ = ["geometry", "mesh", "kernels", "forms", "spectral", "whitney",
           "walker"]
__version__ = "0.1.0"
