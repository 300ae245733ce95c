"""TDGL mixed FEM - Galerkin-mixed finite elements for the time-dependent Ginzburg-Landau equations."""

__version__ = "0.1.0"
