"""Speech emotion recognition: prosodic and cepstral features with RBF SVMs."""

__version__ = "0.1.0"
