"""Beam-hopping LEO downlink simulator with unified NOMA resource allocation."""

__version__ = "0.1.0"
