"""GUE random-matrix toolkit: Hermite kernels, scaling limits, gap probabilities,
characteristic-polynomial correlators and Monte Carlo checks."""

__version__ = "0.1.0"
