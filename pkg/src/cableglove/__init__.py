"""Control stack and desk-scale simulator for a cable-driven haptic glove."""

__version__ = "0.1.0"
