"""
Orbit iteration and basin rasters for truncated germs.

All statements here are about the polynomial model: iterating the stored jet
of F, not the automorphism it truncates.

Orbits are run in vectorized batches. Real and imaginary parts are carried as
separate float64 arrays and combined with elementwise +, -, *, / and sqrt only,
so each orbit's arithmetic is the same whatever batch it shares, and a raster
is bit-identical for any thread count or band split.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from hakimkit.config import (
    DEFAULT_BASIN_MAX_ITER,
    DEFAULT_CONFIRMATION_WINDOW,
    DEFAULT_MAX_ITER,
    DEFAULT_R_CONV,
    DEFAULT_R_ESCAPE,
    DEFAULT_RATE_BOUND,
    DEFAULT_STEP_TOL,
    DEFAULT_TANGENT_CLUSTER_DISTANCE,
    DEFAULT_TANGENT_WINDOW,
)
from hakimkit.core.errors import DynamicsError, MapError
from hakimkit.core.maps import Point, TangentMap, order
from hakimkit.core.utils import resolve_thread_count

logger = logging.getLogger(__name__)

Vector = Tuple[complex, complex]


class Outcome(IntEnum):
    CONVERGED_TO_ORIGIN = 0
    CONVERGED_ELSEWHERE = 1
    ESCAPED = 2
    UNDECIDED = 3

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")


@dataclass
class OrbitRecord:
    points: List[Point]
    outcome: Outcome
    tangent_estimate: Optional[Vector]
    iterations_used: int


@dataclass(frozen=True)
class SliceSpec:
    """A complex line of start points: w = u z, w = w0 or z = z0."""

    kind: str
    value: complex

    DIRECTION = "direction"
    FIXED_W = "fixed-w"
    FIXED_Z = "fixed-z"

    def __post_init__(self):
        if self.kind not in (self.DIRECTION, self.FIXED_W, self.FIXED_Z):
            raise DynamicsError(f"unknown slice kind {self.kind!r}")
        object.__setattr__(self, "value", complex(self.value))

    @classmethod
    def direction(cls, u) -> "SliceSpec":
        return cls(cls.DIRECTION, u)

    @classmethod
    def fixed_w(cls, w0) -> "SliceSpec":
        return cls(cls.FIXED_W, w0)

    @classmethod
    def fixed_z(cls, z0) -> "SliceSpec":
        return cls(cls.FIXED_Z, z0)

    def describe(self) -> str:
        v = f"{self.value.real:g},{self.value.imag:g}"
        if self.kind == self.DIRECTION:
            return f"w=u*z u={v}"
        if self.kind == self.FIXED_W:
            return f"w={v}"
        return f"z={v}"


@dataclass(frozen=True)
class Window:
    """Closed rectangle center +- (half_x, half_y) in the slice parameter plane."""

    center: complex
    half_x: float
    half_y: float

    def __post_init__(self):
        if not (self.half_x > 0 and self.half_y > 0):
            raise DynamicsError(f"window has zero area: half extents {self.half_x}, {self.half_y}")
        object.__setattr__(self, "center", complex(self.center))


@dataclass
class BasinRaster:
    """Per-pixel outcome codes, iteration counts and tangent estimates (row 0 at the top)."""

    width: int
    height: int
    window: Window
    slice: SliceSpec
    trunc: int
    max_iter: int
    outcomes: np.ndarray
    iterations: np.ndarray
    tangents: np.ndarray

    def counts(self) -> Dict[str, int]:
        return {o.label: int(np.count_nonzero(self.outcomes == o)) for o in Outcome}

    def fraction(self, outcome: Outcome) -> float:
        return float(np.count_nonzero(self.outcomes == outcome)) / self.outcomes.size

    def orbit_records(self) -> Iterator[OrbitRecord]:
        """Trajectory-free records, row by row."""
        for j in range(self.height):
            for i in range(self.width):
                outcome = Outcome(int(self.outcomes[j, i]))
                tangent = None
                if outcome == Outcome.CONVERGED_TO_ORIGIN and not np.isnan(self.tangents[j, i, 0]):
                    tangent = (complex(self.tangents[j, i, 0]), complex(self.tangents[j, i, 1]))
                yield OrbitRecord([], outcome, tangent, int(self.iterations[j, i]))

    def to_dict(self) -> Dict[str, object]:
        return {
            "width": self.width,
            "height": self.height,
            "slice": self.slice.describe(),
            "window": {
                "center": [self.window.center.real, self.window.center.imag],
                "half_extents": [self.window.half_x, self.window.half_y],
            },
            "truncation": self.trunc,
            "max_iter": self.max_iter,
            "counts": self.counts(),
        }


@dataclass
class TangentHistogram:
    counts: Dict[str, int] = field(default_factory=dict)
    unmatched: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values()) + self.unmatched

    def is_empty(self) -> bool:
        return self.total == 0


class _CompiledMap:
    """Coefficient tables of (p, q) laid out for nested Horner evaluation on float arrays."""

    def __init__(self, F: TangentMap):
        self.p_rows = self._rows(F.p)
        self.q_rows = self._rows(F.q)

    @staticmethod
    def _rows(series) -> List[List[Tuple[float, float]]]:
        if series.is_zero():
            return []
        top = max(a for a, _ in series.coeffs)
        rows: List[List[Tuple[float, float]]] = [[] for _ in range(top + 1)]
        for (alpha, beta), value in series.coeffs.items():
            row = rows[alpha]
            while len(row) <= beta:
                row.append((0.0, 0.0))
            c = complex(value)
            row[beta] = (c.real, c.imag)
        return rows

    @staticmethod
    def _horner(rows, zr, zi, wr, wi):
        acc_r = np.zeros_like(zr)
        acc_i = np.zeros_like(zr)
        for row in reversed(rows):
            in_r = np.zeros_like(zr)
            in_i = np.zeros_like(zr)
            for cr, ci in reversed(row):
                in_r, in_i = in_r * wr - in_i * wi + cr, in_r * wi + in_i * wr + ci
            acc_r, acc_i = acc_r * zr - acc_i * zi + in_r, acc_r * zi + acc_i * zr + in_i
        return acc_r, acc_i

    def __call__(self, zr, zi, wr, wi):
        pr, pi = self._horner(self.p_rows, zr, zi, wr, wi)
        qr, qi = self._horner(self.q_rows, zr, zi, wr, wi)
        return zr + pr, zi + pi, wr + qr, wi + qi


def _tangent_estimate(samples: Sequence[Vector]) -> Optional[Vector]:
    """Average of the normalized samples after rotating each onto a common phase."""
    last = samples[-1]
    ref = 0 if abs(last[0]) >= abs(last[1]) else 1
    acc = [0j, 0j]
    for z, w in samples:
        norm = math.sqrt(abs(z) ** 2 + abs(w) ** 2)
        pivot = (z, w)[ref]
        if norm == 0 or pivot == 0:
            continue
        phase = pivot.conjugate() / abs(pivot)
        acc[0] += z * phase / norm
        acc[1] += w * phase / norm
    size = math.sqrt(abs(acc[0]) ** 2 + abs(acc[1]) ** 2)
    if size == 0:
        return None
    return acc[0] / size, acc[1] / size


@dataclass(frozen=True)
class _Criteria:
    max_iter: int
    r_conv: float
    r_escape: float
    rate_exponent: float
    rate_bound: float = DEFAULT_RATE_BOUND
    step_tol: float = DEFAULT_STEP_TOL
    window: int = DEFAULT_CONFIRMATION_WINDOW
    tangent_window: int = DEFAULT_TANGENT_WINDOW


def _run_batch(
    compiled: _CompiledMap, z0: np.ndarray, w0: np.ndarray, crit: _Criteria, record: bool = False
):
    n = z0.size
    outcomes = np.full(n, Outcome.UNDECIDED, dtype=np.uint8)
    iterations = np.full(n, crit.max_iter, dtype=np.int64)
    tangents = np.full((n, 2), complex(np.nan, np.nan))
    trajectory: List[Point] = []

    idx = np.arange(n)
    zr, zi = np.array(z0.real, dtype=float), np.array(z0.imag, dtype=float)
    wr, wi = np.array(w0.real, dtype=float), np.array(w0.imag, dtype=float)
    norms = np.empty((n, crit.window))
    norms[:, 0] = np.sqrt(zr * zr + zi * zi + wr * wr + wi * wi)
    recent = np.empty((n, crit.tangent_window, 4))
    recent[:, 0] = np.stack([zr, zi, wr, wi], axis=1)
    moved = np.zeros(n, dtype=bool)
    if record:
        trajectory.append((complex(zr[0], zi[0]), complex(wr[0], wi[0])))

    with np.errstate(all="ignore"):
        for step in range(1, crit.max_iter + 1):
            if idx.size == 0:
                break
            nzr, nzi, nwr, nwi = compiled(zr, zi, wr, wi)
            dzr, dzi, dwr, dwi = nzr - zr, nzi - zi, nwr - wr, nwi - wi
            step_len = np.sqrt(dzr * dzr + dzi * dzi + dwr * dwr + dwi * dwi)
            norm = np.sqrt(nzr * nzr + nzi * nzi + nwr * nwr + nwi * nwi)
            if record:
                trajectory.append((complex(nzr[0], nzi[0]), complex(nwr[0], nwi[0])))

            escaped = ~np.isfinite(norm) | (norm > crit.r_escape)
            stationary = ~escaped & (step_len == 0) & ~moved
            moved |= step_len > 0
            done = escaped | stationary
            if step >= crit.window:
                previous = norms[:, step % crit.window]
                converged = (
                    ~done
                    & (norm < crit.r_conv)
                    & (norm < previous)
                    & (step**crit.rate_exponent * norm <= crit.rate_bound)
                )
            else:
                converged = np.zeros_like(done)
            elsewhere = (
                ~done
                & ~converged
                & moved
                & (norm >= crit.r_conv)
                & (step_len <= crit.step_tol * np.maximum(1.0, norm))
            )

            zr, zi, wr, wi = nzr, nzi, nwr, nwi
            norms[:, step % crit.window] = norm
            recent[:, step % crit.tangent_window] = np.stack([zr, zi, wr, wi], axis=1)

            outcomes[idx[escaped]] = Outcome.ESCAPED
            outcomes[idx[elsewhere]] = Outcome.CONVERGED_ELSEWHERE
            outcomes[idx[converged]] = Outcome.CONVERGED_TO_ORIGIN
            finished = done | converged | elsewhere
            iterations[idx[finished]] = step
            for local in np.flatnonzero(converged):
                filled = recent[local, : min(step + 1, crit.tangent_window)]
                samples = [(complex(a, b), complex(c, d)) for a, b, c, d in filled]
                # Chronological order so the last sample is the latest iterate.
                start = (step + 1) % crit.tangent_window if step + 1 > crit.tangent_window else 0
                samples = samples[start:] + samples[:start]
                estimate = _tangent_estimate(samples)
                if estimate is not None:
                    tangents[idx[local]] = estimate

            if finished.any():
                keep = ~finished
                idx = idx[keep]
                zr, zi, wr, wi = zr[keep], zi[keep], wr[keep], wi[keep]
                norms, recent, moved = norms[keep], recent[keep], moved[keep]

    return outcomes, iterations, tangents, trajectory


def _rate_exponent(F: TangentMap) -> float:
    try:
        return 1.0 / (order(F) - 1)
    except MapError:
        return 1.0


def _criteria(F: TangentMap, max_iter: int, radii: Tuple[float, float], **overrides) -> _Criteria:
    r_conv, r_escape = radii
    if not (0 < r_conv < r_escape):
        raise DynamicsError(f"need 0 < r_conv < r_escape, got {r_conv}, {r_escape}")
    if max_iter < 1:
        raise DynamicsError(f"max_iter must be positive, got {max_iter}")
    return _Criteria(max_iter, r_conv, r_escape, _rate_exponent(F), **overrides)


def iterate_orbit(
    F: TangentMap,
    start: Point,
    max_iter: int = DEFAULT_MAX_ITER,
    radii: Tuple[float, float] = (DEFAULT_R_CONV, DEFAULT_R_ESCAPE),
    **criteria,
) -> OrbitRecord:
    """
    Iterate F from start and classify the orbit.

    converged-to-origin needs, after at least the confirmation window: norm below
    r_conv, lower than one window earlier, and n^(1/(order-1)) * norm within the
    rate bound. Non-finite values or norm above r_escape mean escaped.
    """
    crit = _criteria(F, max_iter, radii, **criteria)
    outcomes, iterations, tangents, trajectory = _run_batch(
        _CompiledMap(F.to_float()),
        np.array([complex(start[0])]),
        np.array([complex(start[1])]),
        crit,
        record=True,
    )
    outcome = Outcome(int(outcomes[0]))
    tangent = None
    if outcome == Outcome.CONVERGED_TO_ORIGIN and not np.isnan(tangents[0, 0]):
        tangent = (complex(tangents[0, 0]), complex(tangents[0, 1]))
    logger.debug("orbit from %s: %s after %d steps", start, outcome.label, int(iterations[0]))
    return OrbitRecord(trajectory, outcome, tangent, int(iterations[0]))


def slice_start_points(
    slice_spec: SliceSpec, window: Window, res: Tuple[int, int]
) -> Tuple[np.ndarray, np.ndarray]:
    """Pixel-centre start points (z, w), each of shape (height, width)."""
    width, height = res
    if width < 1 or height < 1:
        raise DynamicsError(f"resolution must be positive, got {width}x{height}")
    cx, cy = window.center.real, window.center.imag
    xs = cx - window.half_x + (np.arange(width) + 0.5) * (2 * window.half_x / width)
    ys = cy + window.half_y - (np.arange(height) + 0.5) * (2 * window.half_y / height)
    params = xs[np.newaxis, :] + 1j * ys[:, np.newaxis]
    if slice_spec.kind == SliceSpec.DIRECTION:
        return params, slice_spec.value * params
    if slice_spec.kind == SliceSpec.FIXED_W:
        return params, np.full_like(params, slice_spec.value)
    return np.full_like(params, slice_spec.value), params


def render_basin(
    F: TangentMap,
    slice_spec: SliceSpec,
    window: Window,
    res: Tuple[int, int],
    max_iter: int = DEFAULT_BASIN_MAX_ITER,
    radii: Tuple[float, float] = (DEFAULT_R_CONV, DEFAULT_R_ESCAPE),
    threads: Optional[int] = None,
    **criteria,
) -> BasinRaster:
    """Classify every pixel of the slice; row bands run on a thread pool."""
    crit = _criteria(F, max_iter, radii, **criteria)
    z0, w0 = slice_start_points(slice_spec, window, res)
    width, height = res
    compiled = _CompiledMap(F.to_float())

    outcomes = np.empty((height, width), dtype=np.uint8)
    iterations = np.empty((height, width), dtype=np.int64)
    tangents = np.empty((height, width, 2), dtype=complex)

    workers = resolve_thread_count(threads)
    bands = [b for b in np.array_split(np.arange(height), min(workers, height)) if b.size]

    def run_band(rows: np.ndarray) -> None:
        lo, hi = int(rows[0]), int(rows[-1]) + 1
        o, n, t, _ = _run_batch(compiled, z0[lo:hi].ravel(), w0[lo:hi].ravel(), crit)
        outcomes[lo:hi] = o.reshape(hi - lo, width)
        iterations[lo:hi] = n.reshape(hi - lo, width)
        tangents[lo:hi] = t.reshape(hi - lo, width, 2)
        logger.debug("basin rows %d-%d done", lo, hi - 1)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        # list() re-raises worker exceptions here.
        list(executor.map(run_band, bands))

    raster = BasinRaster(
        width, height, window, slice_spec, F.trunc, max_iter, outcomes, iterations, tangents
    )
    logger.info("basin %dx%d on %s: %s", width, height, slice_spec.describe(), raster.counts())
    return raster


def chordal_distance(a: Vector, b: Vector) -> float:
    """Fubini-Study chordal distance between the lines through a and b."""
    na = abs(a[0]) ** 2 + abs(a[1]) ** 2
    nb = abs(b[0]) ** 2 + abs(b[1]) ** 2
    if na == 0 or nb == 0:
        raise DynamicsError("the zero vector spans no line")
    inner = a[0] * complex(b[0]).conjugate() + a[1] * complex(b[1]).conjugate()
    return math.sqrt(max(0.0, 1.0 - abs(inner) ** 2 / (na * nb)))


def tangent_statistics(
    records: Iterable[OrbitRecord],
    directions: Sequence,
    threshold: float = DEFAULT_TANGENT_CLUSTER_DISTANCE,
) -> TangentHistogram:
    """
    Count converged orbits by the nearest characteristic direction.

    directions holds CharacteristicDirection objects or plain (a, b) vectors; a
    tangent farther than threshold from all of them goes to the unmatched bucket.
    """
    targets = []
    for d in directions:
        if hasattr(d, "vector"):
            targets.append((d.label(), d.vector()))
        else:
            targets.append((f"({d[0]}, {d[1]})", (complex(d[0]), complex(d[1]))))

    histogram = TangentHistogram()
    for record in records:
        if record.outcome != Outcome.CONVERGED_TO_ORIGIN or record.tangent_estimate is None:
            continue
        best = None
        for label, vector in targets:
            distance = chordal_distance(record.tangent_estimate, vector)
            if best is None or distance < best[1]:
                best = (label, distance)
        if best is not None and best[1] <= threshold:
            histogram.counts[best[0]] = histogram.counts.get(best[0], 0) + 1
        else:
            histogram.unmatched += 1
    return histogram
