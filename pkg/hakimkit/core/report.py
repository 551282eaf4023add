"""
Reporting module for exporting orbits, rasters and analysis results.
"""

import csv
import io
import json
from typing import Any, Dict

import numpy as np

from hakimkit.config import (
    COLOR_CONVERGED_ELSEWHERE,
    COLOR_CONVERGED_FAST,
    COLOR_CONVERGED_SLOW,
    COLOR_ESCAPED,
    COLOR_UNDECIDED,
)
from hakimkit.core.dynamics import BasinRaster, OrbitRecord, Outcome

CSV_COLUMNS = ["iter", "re(z)", "im(z)", "re(w)", "im(w)"]


def export_csv(record: OrbitRecord) -> str:
    """
    Export an orbit to CSV, one row per iterate.

    Args:
        record: OrbitRecord with its trajectory

    Returns:
        CSV string with CRLF line endings
    """
    output = io.StringIO()
    writer = csv.writer(output)
    writer.writerow(CSV_COLUMNS)
    for n, (z, w) in enumerate(record.points):
        writer.writerow([n, repr(z.real), repr(z.imag), repr(w.real), repr(w.imag)])
    return output.getvalue()


def _jsonable(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def export_json(result: Dict[str, Any]) -> str:
    """
    Export a result dictionary to JSON; complex values become [re, im] pairs.

    Args:
        result: Dictionary produced by a CLI subcommand

    Returns:
        JSON string
    """
    return json.dumps(result, indent=4, default=_jsonable)


def palette(raster: BasinRaster) -> np.ndarray:
    """RGB bytes of shape (height, width, 3)."""
    rgb = np.empty((raster.height, raster.width, 3), dtype=np.uint8)
    rgb[...] = COLOR_UNDECIDED
    rgb[raster.outcomes == Outcome.ESCAPED] = COLOR_ESCAPED
    rgb[raster.outcomes == Outcome.CONVERGED_ELSEWHERE] = COLOR_CONVERGED_ELSEWHERE

    converged = raster.outcomes == Outcome.CONVERGED_TO_ORIGIN
    t = np.clip(raster.iterations[converged] / raster.max_iter, 0.0, 1.0)[:, np.newaxis]
    fast = np.array(COLOR_CONVERGED_FAST, dtype=float)
    slow = np.array(COLOR_CONVERGED_SLOW, dtype=float)
    rgb[converged] = np.rint(fast + (slow - fast) * t).astype(np.uint8)
    return rgb


def ppm_bytes(raster: BasinRaster) -> bytes:
    """Binary PPM (P6); a header comment records the truncation and slice."""
    header = (
        f"P6\n# hakimkit basin trunc={raster.trunc} slice={raster.slice.describe()}\n"
        f"{raster.width} {raster.height}\n255\n"
    )
    return header.encode("ascii") + palette(raster).tobytes()


def write_ppm(raster: BasinRaster, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(raster))

