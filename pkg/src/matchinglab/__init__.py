"""matchinglab package."""

from importlib.metadata import version, PackageNotFoundError

try:
    __version__ = version("matchinglab")
except PackageNotFoundError:
    __version__ = "unknown"

__all__ = []
