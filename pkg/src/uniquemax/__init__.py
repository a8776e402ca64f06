"""Subspaces of C_0(R^n) whose nonzero elements have a unique global maximum."""
