"""
Unit tests for hakim module.
"""

from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hakimkit.core.errors import HakimError
from hakimkit.core.hakim import (
    FINITE,
    INFINITY,
    CharPolynomial,
    basin_candidates,
    char_polynomial,
    directions,
    index,
    index_in_swapped_chart,
    roots,
    swapped_pair,
)
from hakimkit.core.maps import AxesFixingMap, HomogeneousPair, TangentMap, expand, leading_pair
from hakimkit.core.series import FLOAT, GaussianRational, TruncatedSeries, evaluate
from tests.strategies import (
    examples,
    gaussian_rationals,
    nonidentity_axes_fixing_maps,
    nonzero_gaussian_rationals,
    relation_clean_maps,
)


def S(coeffs, trunc, domain="exact"):
    return TruncatedSeries(coeffs, trunc, domain)


def gh(g, h, trunc):
    return AxesFixingMap(S(g, trunc - 2), S(h, trunc - 2), trunc)


def quadratic_germ(domain="exact"):
    return TangentMap(S({(2, 0): -1}, 3, domain), S({(0, 2): -1}, 3, domain))


def by_label(found):
    return {d.label(): d for d in found}


def test_char_polynomial_examples():
    """Test r(u) = Q(1, u) - u P(1, u)."""
    r = char_polynomial(leading_pair(quadratic_germ()))
    assert r.coeffs == (0, 1, -1)
    r = char_polynomial(leading_pair(expand(gh({(0, 0): 1}, {(0, 0): 2}, 4))))
    assert r.coeffs == (0, 2, -1)
    r = char_polynomial(leading_pair(expand(gh({(1, 0): 1}, {(1, 0): 1, (0, 1): -1}, 5))))
    assert r.coeffs == (0, 1, -2)
    assert r.degree == 2 and r.valuation() == 1


def test_char_polynomial_dicritical():
    """Test that r = 0 is refused."""
    F = TangentMap(S({(2, 0): 1}, 2), S({(1, 1): 1}, 2))
    with pytest.raises(HakimError):
        char_polynomial(leading_pair(F))


def test_char_polynomial_validation():
    """Test the zero polynomial and the degree bound."""
    with pytest.raises(HakimError):
        CharPolynomial((0, 0), 2)
    with pytest.raises(HakimError):
        CharPolynomial((1, 0, 0, 0, 1), 2)


def test_float_char_polynomial_zero_threshold():
    """Test that rounding-level coefficients are cleared in the float domain."""
    pair = HomogeneousPair(2, S({(2, 0): -1}, 2, FLOAT), S({(0, 2): -1, (2, 0): 1e-14}, 2, FLOAT))
    r = char_polynomial(pair)
    assert r.coeffs == (0, 1, -1)


def test_roots_examples():
    """Test roots with multiplicity on the worked examples."""
    found = roots(CharPolynomial((0, 1, -2), 3))
    half = GaussianRational(Fraction(1, 2))
    assert [(r.exact, r.multiplicity) for r in found] == [(0, 1), (half, 1)]
    found = roots(CharPolynomial((0, 2, -1), 2))
    assert [(r.exact, r.multiplicity) for r in found] == [(0, 1), (2, 1)]
    found = roots(CharPolynomial((0, 0, 1), 2))
    assert [(r.exact, r.multiplicity) for r in found] == [(0, 2)]


def test_roots_float_double_root():
    """Test (u - 1/2)^2 (u + 1) in the float domain."""
    found = roots(CharPolynomial((0.25, -0.75, 0.0, 1.0), 2, FLOAT))
    assert sorted(r.multiplicity for r in found) == [1, 2]
    for r in found:
        expected = 0.5 if r.multiplicity == 2 else -1.0
        assert abs(r.value - expected) <= 1e-10
        assert r.exact is None


def test_roots_irrational_stay_numeric():
    """Test u^2 - 2 in the exact domain."""
    found = roots(CharPolynomial((-2, 0, 1), 2))
    assert all(r.exact is None for r in found)
    assert sorted(r.value.real for r in found) == pytest.approx([-(2**0.5), 2**0.5], abs=1e-12)


@examples(1000, quick=50)
@given(st.lists(gaussian_rationals(3), min_size=1, max_size=8))
def test_rational_roots_recovered(expected):
    """Test that products of rational linear factors give back their roots exactly."""
    coeffs = [GaussianRational(1)]
    for root in expected:
        shifted = [GaussianRational(0)] + coeffs
        for j, c in enumerate(coeffs):
            shifted[j] = shifted[j] - root * c
        coeffs = shifted
    found = roots(CharPolynomial(tuple(coeffs), len(expected)))
    assert Counter({r.exact: r.multiplicity for r in found}) == Counter(expected)
    for r in found:
        assert abs(r.value - complex(r.exact)) <= 1e-10


def test_directions_constants():
    """Test g = 1, h = 2: two degenerate axes and (1, 2) with A = -1."""
    found = by_label(directions(expand(gh({(0, 0): 1}, {(0, 0): 2}, 4))))
    assert set(found) == {"(1, 0)", "(0, 1)", "(1, 2)"}
    assert found["(1, 0)"].is_degenerate
    assert found["(0, 1)"].is_degenerate
    assert found["(0, 1)"].chart == INFINITY
    v = found["(1, 2)"]
    assert not v.is_degenerate and v.exact
    assert v.lam == 2 and v.index == -1


def test_directions_quadratic_germ():
    """Test (z - z^2, w - w^2): the diagonal has index 1, the axes index -1."""
    for domain in ("exact", FLOAT):
        found = by_label(directions(quadratic_germ(domain)))
        finite = [d for d in found.values() if d.chart == FINITE]
        diagonal = next(d for d in finite if abs(d.vector()[1] - 1) < 1e-9)
        assert complex(diagonal.index) == pytest.approx(1)
        assert complex(found["(0, 1)"].index) == pytest.approx(-1)
        assert all(not d.is_degenerate for d in found.values())


def test_directions_all_degenerate():
    """Test g = z, h = -w: r = -2u^2 and every direction degenerate."""
    found = directions(expand(gh({(1, 0): 1}, {(0, 1): -1}, 5)))
    assert [d.label() for d in found] == ["(1, 0)", "(0, 1)"]
    assert all(d.is_degenerate for d in found)
    assert [d.multiplicity for d in found] == [2, 2]


def test_index_examples():
    """Test A(v) on the worked examples."""
    F = quadratic_germ()
    v = next(d for d in directions(F) if d.chart == FINITE and d.u0 == 1)
    assert index(F, v) == 1

    F = expand(gh({(0, 0): 1}, {(0, 0): 2}, 4))
    v = by_label(directions(F))["(1, 2)"]
    assert index(F, v) == -1

    F = expand(gh({(1, 0): 1}, {(1, 0): 1, (0, 1): -1}, 5))
    v = by_label(directions(F))["(1, 1/2)"]
    assert index(F, v) == -2
    assert index_in_swapped_chart(F, v) == pytest.approx(-2)


def test_index_degenerate_raises():
    """Test that degenerate directions have no index."""
    F = expand(gh({(0, 0): 1}, {(0, 0): 2}, 4))
    v = by_label(directions(F))["(1, 0)"]
    with pytest.raises(HakimError):
        index(F, v)
    with pytest.raises(HakimError):
        index_in_swapped_chart(F, v)


def test_violating_control_map():
    """Test g = z, h = z + 2w: (1, -1) is non-degenerate with A = 1."""
    F = expand(gh({(1, 0): 1}, {(1, 0): 1, (0, 1): 2}, 5))
    v = by_label(directions(F))["(1, -1)"]
    assert v.index == 1
    assert abs(complex(v.index) + 2) >= 0.1
    assert [d.label() for d in basin_candidates(F)] == ["(1, -1)"]


def test_basin_candidates_examples():
    """Test Re A > 0 selection."""
    assert [d.label() for d in basin_candidates(quadratic_germ())] == ["(1, 1)"]
    cubic = TangentMap(S({(3, 0): 1}, 4), S({}, 4))
    found = by_label(directions(cubic))
    assert found["(1, 0)"].index == -1
    assert found["(0, 1)"].is_degenerate
    assert basin_candidates(cubic) == []


@examples(200)
@given(st.integers(0, 2).flatmap(relation_clean_maps))
def test_relation_clean_maps_have_no_basin_candidates(m):
    """Test that every non-degenerate index is negative real when the relation holds."""
    F = expand(m)
    try:
        assert basin_candidates(F) == []
    except HakimError:
        assume(False)


@examples(200)
@given(nonidentity_axes_fixing_maps())
def test_axes_are_degenerate_directions(m):
    """Test that (1, 0) and (0, 1) are always degenerate characteristic directions."""
    try:
        found = by_label(directions(expand(m)))
    except HakimError:
        assume(False)
    assert found["(1, 0)"].is_degenerate
    assert found["(0, 1)"].is_degenerate


@st.composite
def quadratic_germs(draw):
    keys = [(2, 0), (1, 1), (0, 2)]
    p = S({k: draw(gaussian_rationals()) for k in keys}, 2)
    q = S({k: draw(gaussian_rationals()) for k in keys}, 2)
    assume(not (p.is_zero() and q.is_zero()))
    return TangentMap(p, q)


@examples(200, quick=50)
@given(quadratic_germs())
def test_direction_invariants(F):
    """Test eigenvector equation, root count and chart independence of the index."""
    pair = leading_pair(F)
    try:
        r = char_polynomial(pair)
        found = directions(F)
    except HakimError:
        assume(False)

    finite = [d for d in found if d.chart == FINITE]
    assert sum(d.multiplicity for d in finite) == r.degree

    scale = max(1.0, pair.scale_magnitude())
    for d in found:
        a, b = d.vector()
        P, Q = (complex(v) for v in pair.evaluate(a, b))
        lam = complex(d.lam)
        assert abs(P - lam * a) <= 1e-9 * scale
        assert abs(Q - lam * b) <= 1e-9 * scale

    for d in finite:
        if d.is_degenerate or d.u0 == 0 or abs(complex(d.lam)) < 1e-6 * scale:
            continue
        value = complex(d.index)
        assert abs(index_in_swapped_chart(F, d) - value) <= 1e-8 * max(1.0, abs(value))


def _vector_distance(a, b):
    (a0, a1), (b0, b1) = a.vector(), b.vector()
    return abs(a0 - b0) + abs(a1 - b1)


@examples(100)
@given(quadratic_germs(), nonzero_gaussian_rationals())
def test_scaling_invariance(F, c):
    """Test that (cP, cQ) has the same directions and indices as (P, Q)."""
    try:
        before = directions(F)
    except HakimError:
        assume(False)
    after = directions(TangentMap(F.p * c, F.q * c))
    assert len(after) == len(before)
    for x in before:
        y = min(after, key=lambda d: _vector_distance(d, x))
        assert _vector_distance(x, y) <= 1e-8
        assert x.is_degenerate == y.is_degenerate
        if not x.is_degenerate:
            assert complex(y.index) == pytest.approx(complex(x.index), rel=1e-8, abs=1e-8)


def test_swapped_pair_exchanges_roles():
    """Test (Q(w, z), P(w, z))."""
    pair = leading_pair(expand(gh({(0, 0): 1}, {(0, 0): 2}, 4)))
    swapped = swapped_pair(pair)
    assert swapped.P == S({(1, 1): 2}, 4)
    assert swapped.Q == S({(1, 1): 1}, 4)
    assert evaluate(swapped.P, 1, 0) == 0
