"""Memory-assisted compression codecs and network-wide gain simulation."""

__version__ = "0.1.0"
