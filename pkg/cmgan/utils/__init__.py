"""Package initialization for utilities"""
from .files import atomic_path

__all__ = ["atomic_path"]
