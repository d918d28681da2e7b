"""Kernel estimates and dispersive bounds."""
