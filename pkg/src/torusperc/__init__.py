"""Gaussian-field percolation on the torus: white-noise sampling, threshold
functionals and Monte Carlo checks of their concentration and crossing behaviour."""
__version__ = "0.1.0"
