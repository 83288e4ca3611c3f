"""Sparse recovery with graph-constrained measurements."""
