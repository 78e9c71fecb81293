"""FastAPI service exposing the budgeting pipeline."""

from .app import app

__all__ = ["app"]
