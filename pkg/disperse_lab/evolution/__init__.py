"""Linear and nonlinear Schrodinger evolution."""
