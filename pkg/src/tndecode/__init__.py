"""Tensor-network maximum-likelihood decoding for stabilizer codes."""

__version__ = "0.1.0"
