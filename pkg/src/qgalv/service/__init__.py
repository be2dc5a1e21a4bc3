"""HTTP service wrapping the batch pipeline."""

from .app import create_app

__all__ = ["create_app"]
