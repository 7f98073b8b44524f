"""Energy and accuracy benchmark for k-anonymisation and Bayesian-network synthetic data."""

__version__ = "0.1.0"
