"""Quasicharacter sheaves on finite étale group schemes, as explicit cocycle data."""

__version__ = "0.1.0"
