"""
Volume-form constraint on axes-fixing jets.

With g = sum c_{a,b} z^a w^b and h = sum d_{a,b} z^a w^b, the map
F = (z exp(w g), w exp(z h)) preserves dz^dw/(zw) iff

    g_z + h_w - g h - z g h_z - w h g_w - z w g_w h_z + z w g_z h_w = 0,

equivalently det DF = exp(w g + z h). Below degree 2k only the linear part
survives, giving d_{a-1,b} = -(a/b) c_{a,b-1}; when it holds every
non-degenerate direction of F has index -(k + 1).
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from hakimkit.config import DEFAULT_DET_TOL, DEFAULT_FIXED_POINT_TOL, DEFAULT_INDEX_TOL
from hakimkit.core.errors import ConstraintError, FalsificationError, MapError
from hakimkit.core.hakim import directions
from hakimkit.core.maps import (
    ATTRACTING,
    AxesFixingMap,
    FixedPointClassification,
    Point,
    classify_fixed_point,
    expand,
)
from hakimkit.core.series import (
    EXACT,
    Coefficient,
    GaussianRational,
    TruncatedSeries,
    add,
    coerce,
    diff,
    format_coefficient,
    is_exact_value,
    mul,
    multiply_monomial,
    neg,
    zero,
)

logger = logging.getLogger(__name__)

WINDOW_NOTE = (
    "relation window taken on the coefficient degree a + b - 1 in [k, 2k]; "
    "the alternative reading k <= a + b <= 2k is not used"
)
UNDETERMINED_NOTE = "pde residual undetermined: g and h are only known to degree 0"


@dataclass(frozen=True)
class RelationViolation:
    """d_{alpha-1,beta} (lhs) differs from -(alpha/beta) c_{alpha,beta-1} (rhs)."""

    alpha: int
    beta: int
    lhs: Coefficient
    rhs: Coefficient

    def to_dict(self) -> Dict[str, object]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "lhs": format_coefficient(self.lhs),
            "rhs": format_coefficient(self.rhs),
        }


@dataclass
class ConstraintReport:
    pde_residual_norm: float
    pde_residual_zero: bool
    relation_violations: List[RelationViolation]
    checked_degree: int
    lowest_degree: Optional[int]
    notes: List[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.relation_violations

    def to_dict(self) -> Dict[str, object]:
        return {
            "pde_residual_norm": self.pde_residual_norm,
            "pde_residual_zero": self.pde_residual_zero,
            "relation_violations": [v.to_dict() for v in self.relation_violations],
            "checked_degree": self.checked_degree,
            "lowest_degree": self.lowest_degree,
            "clean": self.clean,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class IndexCheck:
    direction: str
    theta: Optional[complex]  # None for (0, 1)
    index: complex
    target: int
    error: float
    passed: bool


@dataclass
class Prop2Verdict:
    """Outcome of the index identity A = -(k + 1) on a relation-clean map."""

    applicable: bool
    reason: str = ""
    k: Optional[int] = None
    exact_identity: Optional[bool] = None
    exact_mismatches: List[Tuple[int, Coefficient, Coefficient]] = field(default_factory=list)
    numeric: List[IndexCheck] = field(default_factory=list)

    @property
    def numeric_passed(self) -> Optional[bool]:
        if not self.applicable:
            return None
        return all(check.passed for check in self.numeric)

    @property
    def passed(self) -> Optional[bool]:
        if not self.applicable:
            return None
        return bool(self.exact_identity) and bool(self.numeric_passed)

    def to_dict(self) -> Dict[str, object]:
        return {
            "applicable": self.applicable,
            "reason": self.reason,
            "k": self.k,
            "exact_identity": self.exact_identity,
            "exact_mismatches": [
                {"power": j, "lhs": format_coefficient(lhs), "rhs": format_coefficient(rhs)}
                for j, lhs, rhs in self.exact_mismatches
            ],
            "numeric": [
                {
                    "direction": c.direction,
                    "theta": None if c.theta is None else [c.theta.real, c.theta.imag],
                    "index": [c.index.real, c.index.imag],
                    "target": c.target,
                    "error": c.error,
                    "passed": c.passed,
                }
                for c in self.numeric
            ],
            "passed": self.passed,
        }


@dataclass(frozen=True)
class FixedPointCheck:
    kind: str  # origin | axis | off-axis
    classification: FixedPointClassification
    det_ok: Optional[bool]

    @property
    def attracting(self) -> bool:
        return self.classification.tag == ATTRACTING


@dataclass
class FixedPointReport:
    residual_zero: bool
    checks: List[FixedPointCheck]
    flags: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(not c.attracting and c.det_ok is not False for c in self.checks)

    def to_dict(self) -> Dict[str, object]:
        return {
            "residual_zero": self.residual_zero,
            "passed": self.passed,
            "flags": list(self.flags),
            "points": [
                {
                    "kind": c.kind,
                    "point": [[v.real, v.imag] for v in c.classification.point],
                    "tag": c.classification.tag,
                    "eigenvalues": [[v.real, v.imag] for v in c.classification.eigenvalues],
                    "det": [c.classification.jacobian_det.real, c.classification.jacobian_det.imag],
                    "det_ok": c.det_ok,
                }
                for c in self.checks
            ],
        }


def _residual_series(g: TruncatedSeries, h: TruncatedSeries) -> TruncatedSeries:
    if g.domain != h.domain:
        raise ConstraintError("g and h use different coefficient domains")
    top = min(g.trunc, h.trunc) - 1
    if top < 0:
        # g_z and h_w at degree 0 need the degree-1 coefficients.
        raise ConstraintError(UNDETERMINED_NOTE + "; the map needs truncation >= 3")
    g = g.truncate(min(g.trunc, top + 1))
    h = h.truncate(min(h.trunc, top + 1))

    def at_top(series: TruncatedSeries) -> TruncatedSeries:
        return series.truncate(top)

    g0, h0 = at_top(g), at_top(h)
    gz, gw = at_top(diff(g, "z")), at_top(diff(g, "w"))
    hz, hw = at_top(diff(h, "z")), at_top(diff(h, "w"))

    def z_times(s):
        return multiply_monomial(s, "z").truncate(top)

    def w_times(s):
        return multiply_monomial(s, "w").truncate(top)

    def zw_times(s):
        return multiply_monomial(multiply_monomial(s, "z"), "w").truncate(top)

    terms = [
        gz,
        hw,
        neg(mul(g0, h0)),
        neg(z_times(mul(g0, hz))),
        neg(w_times(mul(h0, gw))),
        neg(zw_times(mul(gw, hz))),
        zw_times(mul(gz, hw)),
    ]
    total = terms[0]
    for term in terms[1:]:
        total = add(total, term)
    return total


def pde_residual(m: AxesFixingMap) -> TruncatedSeries:
    """
    Left-hand side of the constraint PDE; determined up to degree trunc - 3.

    Raises ConstraintError below truncation 3, where no degree is determined.
    """
    return _residual_series(m.g, m.h)


def _determined_residual(m: AxesFixingMap) -> Optional[TruncatedSeries]:
    return pde_residual(m) if m.series_trunc >= 1 else None


def _relation_window(k: int, top: int):
    for n in range(k, min(2 * k, top) + 1):
        for alpha in range(1, n + 1):
            beta = n + 1 - alpha
            yield alpha, beta


def _relation_rhs(g: TruncatedSeries, alpha: int, beta: int) -> Coefficient:
    c = g.coefficient(alpha, beta - 1)
    if g.is_exact:
        return -c * GaussianRational(Fraction(alpha, beta))
    return -c * (alpha / beta)


def relation_check(m: AxesFixingMap, zero_tol: float = DEFAULT_INDEX_TOL) -> ConstraintReport:
    """
    Check d_{alpha-1,beta} = -(alpha/beta) c_{alpha,beta-1} for alpha, beta >= 1 with
    alpha + beta - 1 in [k, min(2k, trunc - 2)].

    Exact maps are compared exactly; float maps within zero_tol.
    """
    residual = _determined_residual(m)
    k = m.lowest_degree
    top = m.series_trunc
    violations: List[RelationViolation] = []
    checked = -1
    if k is not None:
        checked = min(2 * k, top)
        for alpha, beta in _relation_window(k, top):
            lhs = m.h.coefficient(alpha - 1, beta)
            rhs = _relation_rhs(m.g, alpha, beta)
            equal = lhs == rhs if m.domain == EXACT else abs(lhs - rhs) <= zero_tol
            if not equal:
                violations.append(RelationViolation(alpha, beta, lhs, rhs))
    report = ConstraintReport(
        pde_residual_norm=0.0 if residual is None else residual.max_abs_coefficient(),
        pde_residual_zero=residual is not None and residual.is_zero(),
        relation_violations=violations,
        checked_degree=max(checked, 0),
        lowest_degree=k,
        notes=[WINDOW_NOTE],
    )
    if k is not None and 2 * k > top:
        report.notes.append(f"window capped at degree {top} by the truncation")
    if residual is None:
        report.notes.append(UNDETERMINED_NOTE)
    logger.debug(WINDOW_NOTE)
    logger.info(
        "relation check: k=%s, checked to degree %d, %d violation(s)",
        k,
        report.checked_degree,
        len(violations),
    )
    return report


def complete_h(
    g: TruncatedSeries,
    free_axis_coeffs: Optional[Dict[int, object]] = None,
    trunc: Optional[int] = None,
) -> TruncatedSeries:
    """
    Solve the constraint PDE for h given g, one degree at a time.

    At residual degree n only h_w involves the degree n + 1 coefficients of h, so
    d_{a,b+1} = -R_{a,b} / (b + 1). The pure-z coefficients d_{n,0} are free and
    read from free_axis_coeffs (default 0).

    Args:
        g: exact series
        free_axis_coeffs: degree -> value of d_{degree,0}
        trunc: truncation of the returned h (defaults to g.trunc)

    Returns:
        h with pde residual zero up to degree trunc - 1
    """
    if not g.is_exact:
        raise ConstraintError("complete_h works over the exact domain only")
    trunc = g.trunc if trunc is None else trunc
    if trunc > g.trunc:
        raise ConstraintError(f"g is known to degree {g.trunc}, cannot complete h to {trunc}")
    g = g.truncate(trunc)
    free = {}
    for degree, value in (free_axis_coeffs or {}).items():
        if not 0 <= degree <= trunc:
            raise ConstraintError(f"free axis coefficient at degree {degree} outside [0, {trunc}]")
        free[degree] = coerce(value, EXACT)

    coeffs: Dict[Tuple[int, int], Coefficient] = {}
    if free.get(0):
        coeffs[(0, 0)] = free[0]
    for n in range(trunc):
        if free.get(n + 1):
            coeffs[(n + 1, 0)] = free[n + 1]
        h_partial = TruncatedSeries._make(coeffs, n + 1, EXACT)
        residual = _residual_series(g.truncate(n + 1), h_partial).homogeneous_part(n)
        for (a, b), value in residual.coeffs.items():
            coeffs[(a, b + 1)] = -value / (b + 1)
        logger.debug("complete_h: degree %d fixed, %d coefficients so far", n + 1, len(coeffs))
    return TruncatedSeries._make(coeffs, trunc, EXACT)


def impose_relation(m: AxesFixingMap) -> AxesFixingMap:
    """Overwrite the window coefficients of h with the values the relation dictates."""
    k = m.lowest_degree
    if k is None:
        return m
    coeffs = dict(m.h.coeffs)
    for alpha, beta in _relation_window(k, m.series_trunc):
        coeffs[(alpha - 1, beta)] = _relation_rhs(m.g, alpha, beta)
    h = TruncatedSeries._make(coeffs, m.h.trunc, m.domain)
    return AxesFixingMap(m.g, h, m.trunc)


def _index_numerator(m: AxesFixingMap, k: int) -> List[Coefficient]:
    c, d = m.g.coefficient, m.h.coefficient
    out = []
    for j in range(k + 1):
        value = zero(m.domain)
        if j < k:
            value = (d(k - j - 1, j + 1) - c(k - j, j)) * (j + 1)
        else:
            value = value - c(0, k) * (k + 1)
        out.append(value)
    return out


def _index_denominator(m: AxesFixingMap, k: int) -> List[Coefficient]:
    return [m.g.coefficient(k - j, j) for j in range(k + 1)]


def closed_form_index(m: AxesFixingMap, theta) -> Coefficient:
    """
    A at the direction (1, theta) of expand(m) from the degree-k coefficients:
    sum_b b (d_{k-b,b} - c_{k-b+1,b-1}) theta^(b-1) - (k+1) c_{0,k} theta^k over
    sum_b c_{k-b,b} theta^b.
    """
    k = m.lowest_degree
    if k is None:
        raise ConstraintError("g and h both vanish; the map is the identity")

    exact = m.domain == EXACT and is_exact_value(theta)
    point = GaussianRational(theta) if exact else complex(theta)

    def poly(coeffs):
        acc = zero(EXACT) if exact else 0j
        for value in reversed(coeffs):
            acc = acc * point + (value if exact else complex(value))
        return acc

    denominator = poly(_index_denominator(m, k))
    if denominator == 0:
        raise ConstraintError(f"(1, {theta}) is a degenerate direction")
    return poly(_index_numerator(m, k)) / denominator


def _identity_mismatches(m: AxesFixingMap, k: int, tol: float):
    rhs = [value * -(k + 1) for value in _index_denominator(m, k)]
    mismatches = []
    for j, (left, right) in enumerate(zip(_index_numerator(m, k), rhs)):
        equal = left == right if m.domain == EXACT else abs(left - right) <= tol
        if not equal:
            mismatches.append((j, left, right))
    return mismatches


def verify_prop2(
    m: AxesFixingMap, strict: bool = False, index_tol: float = DEFAULT_INDEX_TOL
) -> Prop2Verdict:
    """
    Check A = -(k + 1) on a relation-clean map, twice.

    The exact route compares, power by power of u, the index numerator with
    -(k + 1) times the denominator. The numeric route finds the directions of the
    (k + 2)-jet and checks |A + (k + 1)| <= index_tol for each non-degenerate one.
    A failure on a relation-clean map is a falsification; with strict=True it is
    raised as FalsificationError.
    """
    k = m.lowest_degree
    if k is None:
        return Prop2Verdict(False, "g and h both vanish; the map is the identity")
    report = relation_check(m, index_tol)
    if not report.clean:
        return Prop2Verdict(
            False,
            f"coefficient relation fails at {len(report.relation_violations)} index pair(s)",
            k,
        )

    mismatches = _identity_mismatches(m, k, index_tol)
    F = expand(m.with_trunc(k + 2))
    target = -(k + 1)
    checks = []
    for d in directions(F):
        if d.is_degenerate:
            continue
        value = complex(d.index)
        error = abs(value - target)
        theta = None if d.u0 is None else complex(d.u0)
        checks.append(IndexCheck(d.label(), theta, value, target, error, error <= index_tol))

    verdict = Prop2Verdict(True, "", k, not mismatches, mismatches, checks)
    if not verdict.passed:
        message = (
            f"index identity fails on a relation-clean map (k={k}): "
            f"{len(mismatches)} coefficient mismatch(es), "
            f"{sum(not c.passed for c in checks)} direction(s) off target {target}"
        )
        logger.error(message)
        if strict:
            raise FalsificationError(message)
    else:
        logger.info("index identity holds for k=%d on %d direction(s)", k, len(checks))
    return verdict


def _point_kind(point: Point, tol: float) -> str:
    z_zero, w_zero = abs(point[0]) <= tol, abs(point[1]) <= tol
    if z_zero and w_zero:
        return "origin"
    if z_zero or w_zero:
        return "axis"
    return "off-axis"


def no_attracting_fixed_points_check(
    m: AxesFixingMap,
    sample_fixed_points: Sequence[Point] = (),
    tol: float = DEFAULT_FIXED_POINT_TOL,
    det_tol: float = DEFAULT_DET_TOL,
) -> FixedPointReport:
    """
    Classify the origin and each supplied fixed point of expand(m).

    Off the axes the constraint forces det DF = 1; on them DF is triangular
    with eigenvalues (1, lambda), so only off-axis points get the determinant test.
    """
    residual = _determined_residual(m)
    report = FixedPointReport(residual is not None and residual.is_zero(), [])
    if residual is None:
        message = f"{UNDETERMINED_NOTE}; det DF = 1 is not implied"
        logger.warning(message)
        report.flags.append(message)
    elif not report.residual_zero:
        message = (
            f"pde residual is not zero (max coefficient {residual.max_abs_coefficient():.3g}); "
            "det DF = 1 is not implied"
        )
        logger.warning(message)
        report.flags.append(message)

    F = expand(m).to_float()
    points = [(0j, 0j)]
    points.extend(
        (complex(z), complex(w)) for z, w in sample_fixed_points if abs(z) > tol or abs(w) > tol
    )
    for point in points:
        try:
            classification = classify_fixed_point(F, point, tol)
        except MapError as exc:
            raise ConstraintError(str(exc)) from exc
        kind = _point_kind(point, tol)
        det_ok = None
        if kind == "off-axis":
            det_ok = abs(classification.jacobian_det - 1) <= det_tol
        check = FixedPointCheck(kind, classification, det_ok)
        if check.attracting or det_ok is False:
            logger.warning(
                "fixed point %s: %s, det %s", point, classification.tag, classification.jacobian_det
            )
        report.checks.append(check)
    return report
