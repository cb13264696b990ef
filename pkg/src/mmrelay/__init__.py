"""Coverage and spectral efficiency of D2D-relay-assisted mmWave cellular networks."""

__version__ = "0.1.0"
