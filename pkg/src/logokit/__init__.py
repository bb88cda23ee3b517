"""logokit: synthetic logo-detection training data, benchmark assembly, and evaluation."""

__version__ = "0.1.0"
