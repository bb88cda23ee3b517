"""calgan: conditional adversarial rendering of pasted-region images."""

__version__ = "0.1.0"
