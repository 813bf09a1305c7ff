"""Oil classification from a simulated two-mode microwave resonant sensor."""

__version__ = "0.1.0"
