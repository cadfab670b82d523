"""Box-relaxation detection for correlated massive MIMO with imperfect CSI."""

__version__ = "0.1.0"
