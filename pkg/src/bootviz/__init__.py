"""Bootstrap error estimates for compressed-sensing reconstructions: solver,
resampling, colorized displays and blurred root-sum-of-squares summaries."""

__version__ = "0.1.0"
