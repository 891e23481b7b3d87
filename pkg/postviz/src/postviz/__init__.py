"""Post-processing plots for simulation outputs (energy CSV, legacy VTK)."""

__version__ = "0.1.0"
