"""Gender bias audit toolkit for image captioning corpora (COCO-GB)."""

from ._core import *  # noqa: F401,F403
from ._core import CocogbError, run_cli

__all__ = [name for name in dir() if not name.startswith("_")]
