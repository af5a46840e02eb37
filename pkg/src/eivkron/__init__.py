"""Sparse regression with errors-in-variables under Kronecker-sum covariance."""
__version__ = "0.1.0"
