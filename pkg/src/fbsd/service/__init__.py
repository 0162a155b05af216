"""FastAPI service wrapping the denoising engine."""

from .app import app

__all__ = ["app"]
