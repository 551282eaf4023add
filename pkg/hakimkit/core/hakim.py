"""
Characteristic directions and Hakim indices.

For a germ of order k with leading pair (P_k, Q_k), the finite characteristic
directions (1, u0) are the roots of r(u) = Q_k(1, u) - u P_k(1, u), with
eigenvalue lambda = P_k(1, u0) and, when lambda != 0, index
A = r'(u0) / P_k(1, u0). The direction (0, 1) is handled in the chart obtained
by exchanging the two components and the two variables.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hakimkit.config import (
    DEFAULT_RATIONAL_MAX_DENOMINATOR,
    DEFAULT_ROOT_CLUSTER_TOL,
    DEFAULT_ROOT_MAX_ITER,
    DEFAULT_ROOT_RESIDUAL_TOL,
    DEFAULT_ZERO_TOL,
)
from hakimkit.core.errors import HakimError, RootFindingError
from hakimkit.core.maps import HomogeneousPair, TangentMap, leading_pair
from hakimkit.core.series import (
    EXACT,
    Coefficient,
    GaussianRational,
    TruncatedSeries,
    coerce,
    evaluate,
    format_coefficient,
    is_exact_value,
    zero,
)

logger = logging.getLogger(__name__)

FINITE = "finite"
INFINITY = "infinity"
DEGENERATE = "degenerate"
NON_DEGENERATE = "non-degenerate"

# Angular offset of the initial circle; irrational so no start point sits on a symmetry axis.
_START_ANGLE = (math.sqrt(5.0) - 1.0) / 2.0


def _poly_eval(coeffs: Sequence[Coefficient], u, domain: str) -> Coefficient:
    if domain == EXACT and is_exact_value(u):
        u = GaussianRational(u)
        acc = GaussianRational(0)
    else:
        u = complex(u)
        acc = 0j
        coeffs = [complex(c) for c in coeffs]
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


def _poly_derivative(coeffs: Sequence[Coefficient]) -> List[Coefficient]:
    return [c * j for j, c in enumerate(coeffs)][1:]


@dataclass(frozen=True)
class CharPolynomial:
    """r(u) stored by ascending power of u."""

    coeffs: Tuple[Coefficient, ...]
    source_degree: int
    domain: str = EXACT

    def __post_init__(self):
        coeffs = [coerce(c, self.domain) for c in self.coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if not coeffs:
            raise HakimError("the characteristic polynomial is identically zero")
        if len(coeffs) - 1 > self.source_degree + 1:
            raise HakimError(
                f"degree {len(coeffs) - 1} exceeds order + 1 = {self.source_degree + 1}"
            )
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def valuation(self) -> int:
        """Multiplicity of u = 0 as a root."""
        n = 0
        while self.coeffs[n] == 0:
            n += 1
        return n

    def evaluate(self, u) -> Coefficient:
        return _poly_eval(self.coeffs, u, self.domain)

    def derivative_at(self, u) -> Coefficient:
        derivative = _poly_derivative(self.coeffs)
        if not derivative:
            return zero(self.domain)
        return _poly_eval(derivative, u, self.domain)

    def __str__(self):
        parts = []
        for j, c in enumerate(self.coeffs):
            if c == 0:
                continue
            text = format_coefficient(c)
            parts.append(text if j == 0 else f"({text})*u^{j}" if j > 1 else f"({text})*u")
        return " + ".join(parts)


@dataclass(frozen=True)
class RootInfo:
    value: complex
    multiplicity: int
    exact: Optional[GaussianRational] = None


@dataclass(frozen=True)
class CharacteristicDirection:
    """
    A projective direction: (1, u0) in the finite chart or (0, 1) at infinity.

    lam is the eigenvalue of (P_k(v), Q_k(v)) = lam v; index is present exactly
    for non-degenerate directions. Values are Gaussian rationals when exact.
    """

    chart: str
    u0: Optional[Coefficient]
    lam: Coefficient
    kind: str
    index: Optional[Coefficient]
    multiplicity: int = 1
    exact: bool = False

    @property
    def is_degenerate(self) -> bool:
        return self.kind == DEGENERATE

    def vector(self) -> Tuple[complex, complex]:
        if self.chart == INFINITY:
            return 0j, 1 + 0j
        return 1 + 0j, complex(self.u0)

    def label(self) -> str:
        if self.chart == INFINITY:
            return "(0, 1)"
        return f"(1, {format_coefficient(self.u0)})"


def _clean(value: Coefficient, threshold: float) -> Coefficient:
    if isinstance(value, GaussianRational):
        return value
    return 0j if abs(value) <= threshold else value


def char_polynomial(pair: HomogeneousPair, zero_tol: float = DEFAULT_ZERO_TOL) -> CharPolynomial:
    """
    r(u) = Q(1, u) - u P(1, u).

    In the float domain coefficients below zero_tol times the largest pair
    coefficient are treated as zero.
    """
    if pair.is_zero():
        raise HakimError("the leading pair vanishes; no characteristic polynomial")
    k = pair.degree
    coeffs: List[Coefficient] = [zero(pair.domain)] * (k + 2)
    for (_, beta), c in pair.Q.coeffs.items():
        coeffs[beta] = coeffs[beta] + c
    for (_, beta), c in pair.P.coeffs.items():
        coeffs[beta + 1] = coeffs[beta + 1] - c
    threshold = zero_tol * pair.scale_magnitude()
    coeffs = [_clean(c, threshold) for c in coeffs]
    if all(c == 0 for c in coeffs):
        raise HakimError(
            "r(u) vanishes identically: every direction is characteristic (dicritical leading pair)"
        )
    return CharPolynomial(tuple(coeffs), k, pair.domain)


def reduced_char_polynomial(
    pair: HomogeneousPair, zero_tol: float = DEFAULT_ZERO_TOL
) -> CharPolynomial:
    """s(u) with r(u) = u s(u); requires u | r, as for every axes-fixing map."""
    r = char_polynomial(pair, zero_tol)
    if r.coeffs[0] != 0:
        raise HakimError("r(0) != 0: u does not divide the characteristic polynomial")
    return CharPolynomial(r.coeffs[1:], pair.degree, pair.domain)


def _swap_variables(series: TruncatedSeries) -> TruncatedSeries:
    swapped = {(b, a): c for (a, b), c in series.coeffs.items()}
    return TruncatedSeries(swapped, series.trunc, series.domain)


def swapped_pair(pair: HomogeneousPair) -> HomogeneousPair:
    """The leading pair in the chart (z, w) -> (w, z): (Q(w, z), P(w, z))."""
    return HomogeneousPair(pair.degree, _swap_variables(pair.Q), _swap_variables(pair.P))


def _aberth(coeffs: np.ndarray, max_iter: int, residual_tol: float) -> np.ndarray:
    """Aberth-Ehrlich simultaneous iteration; coeffs ascending, no root at zero."""
    n = len(coeffs) - 1
    if n == 1:
        return np.array([-coeffs[0] / coeffs[1]])
    desc = coeffs[::-1]
    ddesc = np.polyder(desc)
    radius = 1.0 + float(np.max(np.abs(coeffs[:-1] / coeffs[-1])))
    z = radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + _START_ANGLE))
    abs_desc = np.abs(desc)

    for it in range(max_iter):
        pz = np.polyval(desc, z)
        scale = np.polyval(abs_desc, np.abs(z))
        if np.all(np.abs(pz) <= 4 * np.finfo(float).eps * scale):
            logger.debug("aberth: residuals at rounding level after %d iterations", it)
            return z
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / np.polyval(ddesc, z)
            diffs = z[:, None] - z[None, :]
            np.fill_diagonal(diffs, 1.0)
            inv = 1.0 / diffs
            np.fill_diagonal(inv, 0.0)
            step = ratio / (1.0 - ratio * inv.sum(axis=1))
        bad = ~np.isfinite(step)
        if bad.any():
            step[bad] = 1e-6 * radius * np.exp(1j * (_START_ANGLE + it))
        z = z - step
        if np.all(np.abs(step) <= 4 * np.finfo(float).eps * (1.0 + np.abs(z))):
            logger.debug("aberth: steps at rounding level after %d iterations", it + 1)
            return z

    pz = np.abs(np.polyval(desc, z))
    scale = np.polyval(abs_desc, np.abs(z))
    if np.any(pz > residual_tol * scale):
        raise RootFindingError(
            f"root iteration did not converge in {max_iter} steps "
            f"(worst relative residual {float(np.max(pz / scale)):.3g})"
        )
    return z


def _cluster(approx: np.ndarray, cluster_tol: float) -> List[Tuple[complex, int]]:
    clusters: List[List[complex]] = []
    for value in sorted((complex(v) for v in approx), key=lambda c: (c.real, c.imag)):
        for members in clusters:
            if any(abs(value - m) <= cluster_tol * max(1.0, abs(m)) for m in members):
                members.append(value)
                break
        else:
            clusters.append([value])
    return [(sum(members) / len(members), len(members)) for members in clusters]


def _polish(coeffs: np.ndarray, value: complex, multiplicity: int) -> complex:
    # Newton on the (m-1)-th derivative, where an m-fold root is simple.
    desc = coeffs[::-1]
    for _ in range(multiplicity - 1):
        desc = np.polyder(desc)
    ddesc = np.polyder(desc)
    if len(ddesc) == 0:
        return value
    x = value
    fx = abs(np.polyval(desc, x))
    for _ in range(20):
        d = np.polyval(ddesc, x)
        if d == 0:
            break
        candidate = x - np.polyval(desc, x) / d
        fc = abs(np.polyval(desc, candidate))
        if not np.isfinite(fc) or fc >= fx:
            break
        x, fx = candidate, fc
    return complex(x)


def _numeric_roots(
    coeffs: Sequence[Coefficient], max_iter: int, residual_tol: float, cluster_tol: float
) -> List[Tuple[complex, int]]:
    arr = np.array([complex(c) for c in coeffs])
    approx = _aberth(arr, max_iter, residual_tol)
    return [(_polish(arr, v, m), m) for v, m in _cluster(approx, cluster_tol)]


def _deflate(coeffs: List[GaussianRational], root: GaussianRational):
    """Synthetic division by (u - root): quotient (ascending) and remainder."""
    n = len(coeffs) - 1
    quotient = [GaussianRational(0)] * n
    quotient[n - 1] = coeffs[n]
    for i in range(n - 1, 0, -1):
        quotient[i - 1] = coeffs[i] + root * quotient[i]
    return quotient, coeffs[0] + root * quotient[0]


def _trim(coeffs: Sequence[GaussianRational]) -> List[GaussianRational]:
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def _poly_divmod(num: Sequence[GaussianRational], den: Sequence[GaussianRational]):
    """Exact long division of ascending coefficient lists."""
    num = list(num)
    n, d = len(num) - 1, len(den) - 1
    if n < d:
        return [GaussianRational(0)], _trim(num)
    quotient = [GaussianRational(0)] * (n - d + 1)
    for i in range(n - d, -1, -1):
        factor = num[i + d] / den[d]
        quotient[i] = factor
        for j in range(d + 1):
            num[i + j] = num[i + j] - factor * den[j]
    return quotient, _trim(num[:d])


def _squarefree_part(coeffs: List[GaussianRational]) -> List[GaussianRational]:
    """r / gcd(r, r'): the same roots, each simple."""
    a, b = _trim(coeffs), _trim(_poly_derivative(coeffs))
    if not b:
        return coeffs
    while b:
        _, remainder = _poly_divmod(a, b)
        a, b = b, remainder
    if len(a) == 1:
        return coeffs
    quotient, _ = _poly_divmod(coeffs, a)
    return quotient


def _exact_candidates(value: complex, max_denominator: int):
    cap = 10
    while True:
        yield GaussianRational.approximate(value, min(cap, max_denominator))
        if cap >= max_denominator:
            return
        cap *= 10


def _extract_rational_roots(
    coeffs: List[GaussianRational],
    max_iter: int,
    residual_tol: float,
    cluster_tol: float,
    max_denominator: int,
) -> Tuple[List[RootInfo], List[GaussianRational]]:
    # Candidates come from the squarefree part, where every root is simple and
    # the float approximations are accurate; multiplicity comes from exact deflation.
    if len(coeffs) == 2:
        root = -coeffs[0] / coeffs[1]
        return [RootInfo(complex(root), 1, root)], [coeffs[1]]
    found: List[RootInfo] = []
    simple = _squarefree_part(coeffs)
    for value, _ in _numeric_roots(simple, max_iter, residual_tol, cluster_tol):
        for candidate in _exact_candidates(value, max_denominator):
            if _poly_eval(coeffs, candidate, EXACT) != 0:
                continue
            multiplicity = 0
            while len(coeffs) > 1:
                quotient, remainder = _deflate(coeffs, candidate)
                if remainder != 0:
                    break
                coeffs = quotient
                multiplicity += 1
            found.append(RootInfo(complex(candidate), multiplicity, candidate))
            break
    if len(coeffs) > 1:
        logger.info("%d root(s) are not Gaussian rationals; kept as floats", len(coeffs) - 1)
    return found, coeffs


def roots(
    poly: CharPolynomial,
    max_iter: int = DEFAULT_ROOT_MAX_ITER,
    residual_tol: float = DEFAULT_ROOT_RESIDUAL_TOL,
    cluster_tol: float = DEFAULT_ROOT_CLUSTER_TOL,
    max_denominator: int = DEFAULT_RATIONAL_MAX_DENOMINATOR,
) -> List[RootInfo]:
    """
    All complex roots with multiplicities.

    The u = 0 factor is split off exactly. Exact-domain polynomials first have
    their Gaussian-rational roots recovered and confirmed by exact deflation; what
    remains is solved by Aberth iteration, clustered and polished.
    """
    result: List[RootInfo] = []
    m0 = poly.valuation()
    if m0:
        result.append(RootInfo(0j, m0, GaussianRational(0)))
    rest = list(poly.coeffs[m0:])

    if poly.domain == EXACT and len(rest) > 1:
        exact_roots, rest = _extract_rational_roots(
            rest, max_iter, residual_tol, cluster_tol, max_denominator
        )
        result.extend(exact_roots)

    if len(rest) > 1:
        for value, multiplicity in _numeric_roots(rest, max_iter, residual_tol, cluster_tol):
            result.append(RootInfo(value, multiplicity))

    return sorted(result, key=lambda r: (abs(r.value), np.angle(r.value)))


def _is_zero(value: Coefficient, threshold: float) -> bool:
    if isinstance(value, GaussianRational):
        return value == 0
    return abs(value) <= threshold


def _infinity_direction(pair: HomogeneousPair, threshold: float, zero_tol: float):
    k = pair.degree
    if not _is_zero(pair.P.coefficient(0, k), threshold):
        return None
    lam = pair.Q.coefficient(0, k)
    swapped = char_polynomial(swapped_pair(pair), zero_tol)
    multiplicity = max(swapped.valuation(), 1)
    exact = pair.domain == EXACT
    if _is_zero(lam, threshold):
        return CharacteristicDirection(INFINITY, None, lam, DEGENERATE, None, multiplicity, exact)
    return CharacteristicDirection(
        INFINITY, None, lam, NON_DEGENERATE, swapped.derivative_at(0) / lam, multiplicity, exact
    )


def directions(F: TangentMap, zero_tol: float = DEFAULT_ZERO_TOL) -> List[CharacteristicDirection]:
    """Every characteristic direction: the finite roots of r, then (0, 1) when characteristic."""
    pair = leading_pair(F)
    r = char_polynomial(pair, zero_tol)
    threshold = zero_tol * pair.scale_magnitude()
    found: List[CharacteristicDirection] = []

    for root in roots(r):
        exact = pair.domain == EXACT and root.exact is not None
        u0: Coefficient = root.exact if exact else root.value
        lam = evaluate(pair.P, 1 if exact else 1 + 0j, u0)
        if _is_zero(lam, threshold):
            found.append(
                CharacteristicDirection(
                    FINITE, u0, lam, DEGENERATE, None, root.multiplicity, exact
                )
            )
        else:
            index_value = r.derivative_at(u0) / lam
            found.append(
                CharacteristicDirection(
                    FINITE, u0, lam, NON_DEGENERATE, index_value, root.multiplicity, exact
                )
            )

    at_infinity = _infinity_direction(pair, threshold, zero_tol)
    if at_infinity is not None:
        found.append(at_infinity)
    logger.info(
        "order %d: %d characteristic direction(s), %d non-degenerate",
        pair.degree,
        len(found),
        sum(not d.is_degenerate for d in found),
    )
    return found


def index(
    F: TangentMap, direction: CharacteristicDirection, zero_tol: float = DEFAULT_ZERO_TOL
) -> Coefficient:
    """A(v) = r'(u0) / P_k(1, u0), computed in the chart that contains v."""
    if direction.is_degenerate:
        raise HakimError(f"direction {direction.label()} is degenerate; it has no index")
    pair = leading_pair(F)
    if direction.chart == INFINITY:
        swapped = char_polynomial(swapped_pair(pair), zero_tol)
        return swapped.derivative_at(0) / pair.Q.coefficient(0, pair.degree)
    r = char_polynomial(pair, zero_tol)
    one = 1 if is_exact_value(direction.u0) else 1 + 0j
    return r.derivative_at(direction.u0) / evaluate(pair.P, one, direction.u0)


def index_in_swapped_chart(
    F: TangentMap, direction: CharacteristicDirection, zero_tol: float = DEFAULT_ZERO_TOL
) -> complex:
    """A(v) for v = (1, u0), u0 != 0, recomputed at (1, 1/u0) after exchanging z and w."""
    if direction.is_degenerate:
        raise HakimError(f"direction {direction.label()} is degenerate; it has no index")
    if direction.chart == INFINITY or direction.u0 == 0:
        raise HakimError(f"direction {direction.label()} lies in a single chart")
    swapped = swapped_pair(leading_pair(F))
    r_swapped = char_polynomial(swapped, zero_tol)
    u_swapped = 1 / complex(direction.u0)
    return complex(r_swapped.derivative_at(u_swapped)) / complex(
        evaluate(swapped.P, 1 + 0j, u_swapped)
    )


def basin_candidates(
    F: TangentMap, zero_tol: float = DEFAULT_ZERO_TOL
) -> List[CharacteristicDirection]:
    """Non-degenerate directions with Re A(v) > 0, each the axis of an attracting basin."""
    return [
        d
        for d in directions(F, zero_tol)
        if not d.is_degenerate and complex(d.index).real > 0
    ]
