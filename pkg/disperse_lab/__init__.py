"""disperse-lab - harmonic analysis and dispersive estimates on (locally) symmetric spaces."""

__version__ = "0.1.0"
