"""FastAPI wrapper around the core package; the CLI is a thin client of this app."""

from .app import create_app

__all__ = ["create_app"]
