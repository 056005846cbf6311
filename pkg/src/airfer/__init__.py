"""Private over-the-air fusion of ensemble decisions."""
from __future__ import annotations

__version__ = "0.1.0"
