"""Turing patterns on random rough surfaces."""

__version__ = "0.1.0"
