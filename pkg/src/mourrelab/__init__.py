"""Finite-lattice laboratory for Mourre estimates and propagation estimates."""

__version__ = "0.1.0"
