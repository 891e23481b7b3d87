"""FEM-BEM tangent-plane integrator for the eddy-current LLG system."""

__version__ = "0.1.0"
