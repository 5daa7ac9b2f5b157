"""Numerical certificates for the triviality of deformations of Lie group homomorphisms and subgroups."""

__version__ = "0.1.0"
