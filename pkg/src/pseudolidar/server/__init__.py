"""HTTP service exposing the core operations to non-Python clients."""

from .app import create_app

__all__ = ["create_app"]
