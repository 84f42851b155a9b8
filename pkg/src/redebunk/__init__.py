"""Search and analytics for COVID-19 claims that keep being debunked."""

__version__ = "0.1.0"
