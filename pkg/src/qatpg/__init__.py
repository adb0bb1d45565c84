"""Test pattern generation for quantum circuits via stabilizer projector decompositions."""

__version__ = "0.1.0"
