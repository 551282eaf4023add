"""
Germs of maps of C^2 tangent to the identity.

A TangentMap stores F(z, w) = (z + p, w + q) as two truncated series. An
AxesFixingMap stores the pair (g, h) of the normal form
F(z, w) = (z exp(w g), w exp(z h)); with truncation N it keeps g and h at N - 2,
the only coefficients that reach the N-jet of F.
"""

import cmath
import logging
from dataclasses import dataclass, field
from math import comb
from typing import Dict, List, Optional, Tuple

import numpy as np

from hakimkit.config import (
    DEFAULT_FIXED_POINT_TOL,
    DEFAULT_NEWTON_MAX_ITER,
    DEFAULT_NEWTON_TOL,
    LSTSQ_RCOND,
)
from hakimkit.core.errors import MapError, SeriesError
from hakimkit.core.series import (
    EXACT,
    FLOAT,
    TruncatedSeries,
    add,
    diff,
    divide_monomial,
    evaluate,
    exp_series,
    log1p_series,
    mul,
    multiply_monomial,
    neg,
)

logger = logging.getLogger(__name__)

Point = Tuple[complex, complex]

TANGENT_TO_IDENTITY = "tangent-to-identity"
ATTRACTING = "attracting"
PARABOLIC = "parabolic"
SEMI_ATTRACTING = "semi-attracting"
SEMI_REPELLING = "semi-repelling"
OTHER = "other"


@dataclass(frozen=True)
class TangentMap:
    """F(z, w) = (z + p(z, w), w + q(z, w)) with p, q of order >= 2."""

    p: TruncatedSeries
    q: TruncatedSeries

    def __post_init__(self):
        if self.p.trunc != self.q.trunc:
            raise MapError(f"component truncations differ: {self.p.trunc} vs {self.q.trunc}")
        if self.p.domain != self.q.domain:
            raise MapError("components use different coefficient domains")
        for name, series in (("p", self.p), ("q", self.q)):
            low = series.lowest_degree()
            if low is not None and low <= 1:
                raise MapError(
                    f"{name} has a term of degree {low}; the germ must fix the origin "
                    "with derivative Id"
                )

    @classmethod
    def identity(cls, trunc: int, domain: str = EXACT) -> "TangentMap":
        zero = TruncatedSeries.zero(trunc, domain)
        return cls(zero, zero)

    @property
    def trunc(self) -> int:
        return self.p.trunc

    @property
    def domain(self) -> str:
        return self.p.domain

    def is_identity(self) -> bool:
        return self.p.is_zero() and self.q.is_zero()

    def to_float(self) -> "TangentMap":
        return TangentMap(self.p.to_float(), self.q.to_float())

    def components(self) -> Tuple[TruncatedSeries, TruncatedSeries]:
        """Full components z + p and w + q."""
        z = TruncatedSeries.variable("z", self.trunc, self.domain)
        w = TruncatedSeries.variable("w", self.trunc, self.domain)
        return add(z, self.p), add(w, self.q)


@dataclass(frozen=True)
class AxesFixingMap:
    """The pair (g, h) of F(z, w) = (z exp(w g), w exp(z h)) at truncation N."""

    g: TruncatedSeries
    h: TruncatedSeries
    trunc: int

    def __post_init__(self):
        if self.trunc < 2:
            raise MapError(f"axes-fixing maps need truncation >= 2, got {self.trunc}")
        if self.g.domain != self.h.domain:
            raise MapError("g and h use different coefficient domains")
        series_trunc = self.trunc - 2
        for name in ("g", "h"):
            series = getattr(self, name)
            if series.trunc < series_trunc:
                raise MapError(
                    f"{name} is known to degree {series.trunc}, the {self.trunc}-jet needs "
                    f"{series_trunc}"
                )
            if series.trunc > series_trunc:
                object.__setattr__(self, name, series.truncate(series_trunc))

    @property
    def series_trunc(self) -> int:
        return self.trunc - 2

    @property
    def domain(self) -> str:
        return self.g.domain

    @property
    def lowest_degree(self) -> Optional[int]:
        """The series order k: the minimum of the lowest degrees of g and h."""
        degrees = [d for d in (self.g.lowest_degree(), self.h.lowest_degree()) if d is not None]
        return min(degrees) if degrees else None

    def with_trunc(self, trunc: int) -> "AxesFixingMap":
        """The same normal form viewed at a lower truncation."""
        return AxesFixingMap(self.g, self.h, trunc)


@dataclass(frozen=True)
class HomogeneousPair:
    """(P_k, Q_k): the lowest-degree homogeneous parts of p and q."""

    degree: int
    P: TruncatedSeries
    Q: TruncatedSeries

    def __post_init__(self):
        for name, series in (("P", self.P), ("Q", self.Q)):
            for a, b in series.coeffs:
                if a + b != self.degree:
                    raise MapError(f"{name} has a term of degree {a + b}, expected {self.degree}")

    @property
    def domain(self) -> str:
        return self.P.domain

    def is_zero(self) -> bool:
        return self.P.is_zero() and self.Q.is_zero()

    def evaluate(self, z, w):
        return evaluate(self.P, z, w), evaluate(self.Q, z, w)

    def scale_magnitude(self) -> float:
        return max(self.P.max_abs_coefficient(), self.Q.max_abs_coefficient())


@dataclass(frozen=True)
class FixedPointClassification:
    point: Point
    eigenvalues: Tuple[complex, complex]
    jacobian_det: complex
    tag: str
    derivative: List[List[complex]] = field(default_factory=list)


def expand(m: AxesFixingMap) -> TangentMap:
    """(z exp(w g), w exp(z h)) as a TangentMap at truncation m.trunc."""
    p = multiply_monomial(exp_series(multiply_monomial(m.g, "w")), "z")
    q = multiply_monomial(exp_series(multiply_monomial(m.h, "z")), "w")
    z = TruncatedSeries.variable("z", m.trunc, m.domain)
    w = TruncatedSeries.variable("w", m.trunc, m.domain)
    return TangentMap(add(p, neg(z)), add(q, neg(w)))


def contract(F: TangentMap) -> AxesFixingMap:
    """Recover (g, h) from a map fixing both axes pointwise: g = log(1 + w r)/w, p = z w r."""
    if F.trunc < 2:
        raise MapError("contract needs truncation >= 2")
    try:
        r = divide_monomial(divide_monomial(F.p, "z"), "w")
        s = divide_monomial(divide_monomial(F.q, "z"), "w")
    except SeriesError as exc:
        raise MapError(f"the map does not fix both axes pointwise: {exc}") from exc
    g = divide_monomial(log1p_series(multiply_monomial(r, "w")), "w")
    h = divide_monomial(log1p_series(multiply_monomial(s, "z")), "z")
    return AxesFixingMap(g, h, F.trunc)


def order(F: TangentMap) -> int:
    degrees = [d for d in (F.p.lowest_degree(), F.q.lowest_degree()) if d is not None]
    if not degrees:
        raise MapError(f"the map is the identity up to truncation {F.trunc}; order undefined")
    return min(degrees)


def leading_pair(F: TangentMap) -> HomogeneousPair:
    k = order(F)
    return HomogeneousPair(k, F.p.homogeneous_part(k), F.q.homogeneous_part(k))


def jacobian_det(F: TangentMap) -> TruncatedSeries:
    """det DF as a series at truncation trunc - 1."""
    f1, f2 = F.components()
    return add(
        mul(diff(f1, "z"), diff(f2, "w")),
        neg(mul(diff(f1, "w"), diff(f2, "z"))),
    )


def eval_map(F: TangentMap, z, w) -> Point:
    z, w = complex(z), complex(w)
    return z + complex(evaluate(F.p, z, w)), w + complex(evaluate(F.q, z, w))


def derivative_at(F: TangentMap, z, w) -> np.ndarray:
    """The 2x2 complex matrix DF(z, w)."""
    z, w = complex(z), complex(w)
    pz, pw = diff(F.p, "z"), diff(F.p, "w")
    qz, qw = diff(F.q, "z"), diff(F.q, "w")
    return np.array(
        [
            [1 + complex(evaluate(pz, z, w)), complex(evaluate(pw, z, w))],
            [complex(evaluate(qz, z, w)), 1 + complex(evaluate(qw, z, w))],
        ],
        dtype=complex,
    )


def eigenvalues_2x2(matrix) -> Tuple[complex, complex]:
    """Roots of x^2 - tr x + det, choosing the discriminant branch that avoids cancellation."""
    a, b = complex(matrix[0][0]), complex(matrix[0][1])
    c, d = complex(matrix[1][0]), complex(matrix[1][1])
    tr = a + d
    det = a * d - b * c
    root = cmath.sqrt(tr * tr - 4 * det)
    if (tr.conjugate() * root).real < 0:
        root = -root
    big = (tr + root) / 2
    if big == 0:
        return 0j, 0j
    return big, det / big


def _check_fixed(F: TangentMap, p0: Point, tol: float) -> None:
    image = eval_map(F, *p0)
    error = max(abs(image[0] - p0[0]), abs(image[1] - p0[1]))
    if error > tol:
        raise MapError(f"{p0} is not fixed: |F(p) - p| = {error:.3g} > {tol:g}")


def classify_fixed_point(
    F: TangentMap, p0: Point, tol: float = DEFAULT_FIXED_POINT_TOL
) -> FixedPointClassification:
    p0 = (complex(p0[0]), complex(p0[1]))
    _check_fixed(F, p0, tol)
    D = derivative_at(F, *p0)
    lam1, lam2 = eigenvalues_2x2(D)
    det = complex(D[0, 0] * D[1, 1] - D[0, 1] * D[1, 0])

    if np.max(np.abs(D - np.eye(2))) <= tol:
        tag = TANGENT_TO_IDENTITY
    elif abs(lam1) < 1 - tol and abs(lam2) < 1 - tol:
        tag = ATTRACTING
    elif abs(lam1 - 1) <= tol and abs(lam2 - 1) <= tol:
        tag = PARABOLIC
    elif abs(lam1 - 1) <= tol or abs(lam2 - 1) <= tol:
        if abs(lam1 - 1) > tol:
            lam1, lam2 = lam2, lam1
        # Reported as (1, lambda).
        other = lam2
        if abs(other) < 1 - tol:
            tag = SEMI_ATTRACTING
        elif abs(other) > 1 + tol:
            tag = SEMI_REPELLING
        else:
            tag = OTHER
    else:
        tag = OTHER
    logger.debug("fixed point %s: eigenvalues %s, %s -> %s", p0, lam1, lam2, tag)
    return FixedPointClassification(p0, (lam1, lam2), det, tag, D.tolist())


def locate_fixed_point(
    F: TangentMap,
    guess: Point,
    max_iter: int = DEFAULT_NEWTON_MAX_ITER,
    tol: float = DEFAULT_NEWTON_TOL,
    accept_tol: float = DEFAULT_FIXED_POINT_TOL,
) -> Point:
    """
    Gauss-Newton on F(x) - x from a starting guess.

    Least-squares steps keep the iteration well defined where DF - Id is
    singular (tangent-to-identity points, curves of fixed points). Singular
    values below LSTSQ_RCOND relative to the largest are cut off. The iterate
    with the smallest residual is returned; a guess already within accept_tol
    is returned unchanged.
    """

    def residual_at(x: np.ndarray) -> Tuple[np.ndarray, float]:
        G = np.array(eval_map(F, x[0], x[1])) - x
        return G, float(np.max(np.abs(G)))

    x = np.array([complex(guess[0]), complex(guess[1])])
    G, residual = residual_at(x)
    best, best_residual = x, residual
    if not residual <= accept_tol:
        for _ in range(max_iter):
            if residual <= tol:
                break
            J = derivative_at(F, x[0], x[1]) - np.eye(2)
            step, *_ = np.linalg.lstsq(J, -G, rcond=LSTSQ_RCOND)
            if not np.all(np.isfinite(step)):
                break
            x = x + step
            G, residual = residual_at(x)
            if not np.isfinite(residual):
                break
            if residual < best_residual:
                best, best_residual = x, residual
            elif best_residual <= accept_tol:
                # Stalled at rounding level.
                break
    if not best_residual <= accept_tol:
        raise MapError(f"no fixed point found near {guess}: residual {best_residual:.3g}")
    logger.debug("fixed point %s located, residual %.3g", tuple(best), best_residual)
    return complex(best[0]), complex(best[1])


def recenter(F: TangentMap, p0: Point, tol: float = DEFAULT_FIXED_POINT_TOL) -> TangentMap:
    """
    Conjugate by the translation to p0: G(x, y) = F(p0 + (x, y)) - p0.

    The stored jet is treated as an entire polynomial and re-expanded by binomial
    shifts. p0 must be fixed with DF(p0) = Id; the result is a float-domain germ.
    Shifted terms of degree <= 1 are dropped; every other coefficient is kept.
    """
    z0, w0 = complex(p0[0]), complex(p0[1])
    _check_fixed(F, (z0, w0), tol)
    D = derivative_at(F, z0, w0)
    deviation = float(np.max(np.abs(D - np.eye(2))))
    if deviation > tol:
        raise MapError(
            f"DF at {p0} differs from Id by {deviation:.3g}; not tangent to the identity"
        )

    def shifted(series: TruncatedSeries) -> Dict[Tuple[int, int], complex]:
        out: Dict[Tuple[int, int], complex] = {}
        for (alpha, beta), value in series.coeffs.items():
            c = complex(value)
            for i in range(alpha + 1):
                zi = comb(alpha, i) * z0 ** (alpha - i)
                for j in range(beta + 1):
                    key = (i, j)
                    out[key] = out.get(key, 0j) + c * zi * comb(beta, j) * w0 ** (beta - j)
        # Terms of degree <= 1 vanish because p0 is fixed with DF(p0) = Id.
        return {k: v for k, v in out.items() if k[0] + k[1] >= 2 and v != 0}

    trunc = F.trunc
    return TangentMap(
        TruncatedSeries(shifted(F.p), trunc, FLOAT),
        TruncatedSeries(shifted(F.q), trunc, FLOAT),
    )
