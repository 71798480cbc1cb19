"""HTTP service wrapping the analysis library."""

from .app import create_app

__all__ = ["create_app"]
