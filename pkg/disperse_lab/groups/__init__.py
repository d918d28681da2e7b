"""Discrete groups, orbits and automorphic sums."""
