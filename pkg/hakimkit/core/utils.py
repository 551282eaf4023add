"""
Runtime detection of the thread budget and parsers for command-line values.
"""

import logging
import os
from typing import Optional, Tuple

import psutil

from hakimkit.config import THREADS_ENV_VAR

logger = logging.getLogger(__name__)


def resolve_thread_count(requested: Optional[int] = None) -> int:
    """
    Decide how many worker threads a raster may use.

    Args:
        requested: Explicit count (e.g. from --threads); wins when given

    Returns:
        requested, else HAKIMKIT_THREADS, else the logical CPU count (at least 1)
    """
    if requested is not None:
        if requested < 1:
            raise ValueError(f"thread count must be positive, got {requested}")
        return requested

    raw = os.environ.get(THREADS_ENV_VAR)
    if raw:
        try:
            value = int(raw)
            if value >= 1:
                return value
        except ValueError:
            pass
        logger.warning("ignoring %s=%r: not a positive integer", THREADS_ENV_VAR, raw)

    return psutil.cpu_count(logical=True) or 1


def parse_complex(text: str) -> complex:
    """
    Parse a complex number given as "re,im" (or a bare real "re").

    Args:
        text: e.g. "0.5,-1" or "2"

    Returns:
        The complex value
    """
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ValueError(f"expected 're,im', got {text!r}")


def parse_window(text: str) -> Tuple[complex, float, float]:
    """
    Parse a raster window "cx,cy:half" (square) or "cx,cy:hx,hy".

    Returns:
        (center, half_x, half_y)
    """
    if ":" not in text:
        raise ValueError(f"expected 'cx,cy:half' or 'cx,cy:hx,hy', got {text!r}")
    center_text, extent_text = text.split(":", 1)
    center = parse_complex(center_text)
    extents = [p.strip() for p in extent_text.split(",")]
    try:
        if len(extents) == 1:
            half = float(extents[0])
            return center, half, half
        if len(extents) == 2:
            return center, float(extents[0]), float(extents[1])
    except ValueError:
        pass
    raise ValueError(f"bad window extents {extent_text!r}")


def parse_resolution(text: str) -> Tuple[int, int]:
    """Parse "WIDTHxHEIGHT", e.g. "64x64"."""
    try:
        width, height = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"expected 'WIDTHxHEIGHT', got {text!r}") from None
    if width < 1 or height < 1:
        raise ValueError(f"resolution must be positive, got {text!r}")
    return width, height


def parse_slice(text: str) -> str:
    """
    Normalize a slice flag to a slice kind.

    Accepts "w=u*z" (direction slice), "w=w0" (w fixed) or "z=z0" (z fixed).
    """
    normalized = text.replace(" ", "").lower()
    if normalized in ("w=u*z", "w=uz", "direction"):
        return "direction"
    if normalized in ("w=w0", "fixed-w"):
        return "fixed-w"
    if normalized in ("z=z0", "fixed-z"):
        return "fixed-z"
    raise ValueError(f"unknown slice {text!r}; expected 'w=u*z', 'w=w0' or 'z=z0'")
