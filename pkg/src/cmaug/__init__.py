"""cmaug: code-mixed sentiment data augmentation toolkit."""

__version__ = "0.1.0"
