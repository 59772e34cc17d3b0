"""Maximum likelihood amplitude estimation over unary inner-product circuits."""

__version__ = "0.1.0"
