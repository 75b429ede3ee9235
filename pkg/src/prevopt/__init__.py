"""Fuzzy clustering and resource-constrained prevention program optimization."""
