"""Sparse identification of nonlinear dynamics with quantum feature libraries
and an orthogonalization step that keeps polynomial coefficients unbiased."""

__version__ = "0.1.0"
