"""Acceptance checks behind verify-all."""
