"""Symmetric-space data and spherical analysis."""
