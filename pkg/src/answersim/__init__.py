"""answersim: semantic answer similarity metrics and evaluation tooling."""

__version__ = "0.1.0"
