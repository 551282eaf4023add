"""
Unit tests for maps module.
"""

import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hakimkit.core.constraint import complete_h
from hakimkit.core.errors import MapError
from hakimkit.core.maps import (
    ATTRACTING,
    SEMI_ATTRACTING,
    TANGENT_TO_IDENTITY,
    AxesFixingMap,
    TangentMap,
    classify_fixed_point,
    contract,
    eigenvalues_2x2,
    eval_map,
    expand,
    jacobian_det,
    leading_pair,
    locate_fixed_point,
    order,
    recenter,
)
from hakimkit.core.series import (
    FLOAT,
    GaussianRational,
    TruncatedSeries,
    evaluate,
    exp_series,
    multiply_monomial,
)
from tests.strategies import (
    axes_fixing_maps,
    examples,
    gaussian_rationals,
    nonidentity_axes_fixing_maps,
    series,
)


def S(coeffs, trunc):
    return TruncatedSeries(coeffs, trunc)


def gh(g, h, trunc):
    return AxesFixingMap(S(g, trunc - 2), S(h, trunc - 2), trunc)


def test_tangent_map_rejects_linear_terms():
    """Test that p and q must start at degree 2."""
    with pytest.raises(MapError):
        TangentMap(S({(1, 0): 1}, 3), S({}, 3))
    with pytest.raises(MapError):
        TangentMap(S({(2, 0): 1}, 3), S({}, 4))


def test_axes_fixing_map_truncates_series():
    """Test that g and h are stored at truncation N - 2."""
    m = AxesFixingMap(S({(0, 0): 1, (3, 0): 1}, 3), S({}, 3), 4)
    assert m.g == S({(0, 0): 1}, 2)
    assert m.series_trunc == 2
    with pytest.raises(MapError):
        AxesFixingMap(S({}, 1), S({}, 1), 4)
    with pytest.raises(MapError):
        AxesFixingMap(S({}, 0), S({}, 0), 1)


def test_expand_constants():
    """Test g = 1, h = 2 at truncation 3."""
    F = expand(gh({(0, 0): 1}, {(0, 0): 2}, 3))
    assert F.p == S({(1, 1): 1, (1, 2): Fraction(1, 2)}, 3)
    assert F.q == S({(1, 1): 2, (2, 1): 2}, 3)


def test_expand_zero_is_identity():
    """Test that g = h = 0 gives the identity."""
    assert expand(gh({}, {}, 5)).is_identity()


def test_expand_volume_preserving_example():
    """Test g = z, h = -w at truncation 4."""
    F = expand(gh({(1, 0): 1}, {(0, 1): -1}, 4))
    assert F.p == S({(2, 1): 1}, 4)
    assert F.q == S({(1, 2): -1}, 4)


def test_contract_examples():
    """Test recovery of (g, h) from maps fixing both axes."""
    F = TangentMap(S({(1, 1): 1}, 4), S({}, 4))
    m = contract(F)
    assert m.g == S({(0, 0): 1, (0, 1): Fraction(-1, 2), (0, 2): Fraction(1, 3)}, 2)
    assert m.h.is_zero()
    assert contract(TangentMap.identity(5)) == gh({}, {}, 5)


def test_contract_rejects_non_axes_fixing():
    """Test that p = -z^2 is refused."""
    F = TangentMap(S({(2, 0): -1}, 3), S({(0, 2): -1}, 3))
    with pytest.raises(MapError):
        contract(F)


def test_order_examples():
    """Test the order of a germ."""
    assert order(expand(gh({(0, 0): 1}, {(0, 0): 2}, 4))) == 2
    assert order(TangentMap(S({(3, 0): 1}, 4), S({}, 4))) == 3
    with pytest.raises(MapError):
        order(TangentMap.identity(4))


def test_leading_pair_examples():
    """Test the lowest homogeneous parts."""
    pair = leading_pair(expand(gh({(0, 0): 1}, {(0, 0): 2}, 4)))
    assert pair.degree == 2
    assert pair.P == S({(1, 1): 1}, 4)
    assert pair.Q == S({(1, 1): 2}, 4)

    pair = leading_pair(TangentMap(S({(2, 0): -1}, 3), S({(0, 2): -1}, 3)))
    assert (pair.degree, pair.P, pair.Q) == (2, S({(2, 0): -1}, 3), S({(0, 2): -1}, 3))

    pair = leading_pair(expand(gh({(1, 0): 1}, {(1, 0): 1, (0, 1): -1}, 5)))
    assert pair.degree == 3
    assert pair.P == S({(2, 1): 1}, 5)
    assert pair.Q == S({(2, 1): 1, (1, 2): -1}, 5)


def test_jacobian_det_examples():
    """Test det DF on small maps."""
    assert jacobian_det(TangentMap.identity(3)) == S({(0, 0): 1}, 2)
    assert jacobian_det(expand(gh({(1, 0): 1}, {(0, 1): -1}, 6))) == S({(0, 0): 1}, 5)
    F = TangentMap(S({(2, 0): 1}, 3), S({}, 3))
    assert jacobian_det(F) == S({(0, 0): 1, (1, 0): 2}, 2)


def test_eval_map_examples():
    """Test pointwise evaluation of F."""
    assert eval_map(TangentMap.identity(3), 3, 4j) == (3, 4j)
    F = TangentMap(S({(2, 0): -1}, 3), S({(0, 2): -1}, 3))
    assert eval_map(F, 0.5, 0) == (0.25, 0)
    G = expand(gh({(0, 0): 1}, {(0, 0): 2}, 6))
    assert eval_map(G, 0, 0.3 - 0.1j) == (0, 0.3 - 0.1j)


def test_eigenvalues_2x2_branch():
    """Test both roots and the product of a 2x2 spectrum."""
    lam1, lam2 = eigenvalues_2x2([[1, 1e-3], [0, 1 + 1e-12]])
    assert {round(abs(lam1), 9), round(abs(lam2), 9)} == {1.0}
    lam1, lam2 = eigenvalues_2x2([[2, 1], [1, 2]])
    assert sorted([lam1.real, lam2.real]) == pytest.approx([1, 3])


@examples(1000)
@given(axes_fixing_maps())
def test_contract_expand_roundtrip(m):
    """Test contract(expand(m)) = m in the exact domain."""
    assert contract(expand(m)) == m


@examples(200)
@given(axes_fixing_maps(), gaussian_rationals())
def test_axes_are_fixed(m, t):
    """Test that both coordinate axes are fixed pointwise."""
    F = expand(m)
    zero = GaussianRational(0)
    assert evaluate(F.p, t, zero) == 0 and evaluate(F.q, t, zero) == 0
    assert evaluate(F.p, zero, t) == 0 and evaluate(F.q, zero, t) == 0


@examples(100)
@given(nonidentity_axes_fixing_maps())
def test_order_shift(m):
    """Test order(expand(m)) = k + 2."""
    assert order(expand(m)) == m.lowest_degree + 2


@examples(100)
@given(series(4, 4))
def test_jacobian_identity_on_volume_preserving_maps(g):
    """Test det DF = exp(w g + z h) when h solves the volume-form equation."""
    m = AxesFixingMap(g, complete_h(g), 6)
    expected = exp_series(multiply_monomial(m.g, "w") + multiply_monomial(m.h, "z"))
    assert jacobian_det(expand(m)) == expected


def test_classify_origin():
    """Test that the origin is always tangent to the identity."""
    F = TangentMap(S({(2, 0): -1}, 3), S({(0, 2): -1}, 3))
    result = classify_fixed_point(F, (0, 0))
    assert result.tag == TANGENT_TO_IDENTITY
    assert result.eigenvalues == (1, 1)
    assert result.jacobian_det == 1


def test_classify_semi_attracting_axis_point():
    """Test eigenvalues (1, e^{2 z0}) on the z-axis for g = 1, h = 2."""
    F = expand(gh({(0, 0): 1}, {(0, 0): 2}, 20))
    z0 = -0.5
    result = classify_fixed_point(F, (z0, 0))
    assert result.tag == SEMI_ATTRACTING
    assert result.eigenvalues[0] == pytest.approx(1, abs=1e-12)
    assert result.eigenvalues[1] == pytest.approx(cmath.exp(2 * z0), abs=1e-12)


def test_classify_rejects_non_fixed_point():
    """Test that a moving point is refused."""
    F = TangentMap(S({(2, 0): -1}, 3), S({(0, 2): -1}, 3))
    with pytest.raises(MapError):
        classify_fixed_point(F, (0.5, 0))


def test_off_axis_fixed_point_of_volume_preserving_map():
    """Test det DF = 1 at a point with z0 w0 = 2 pi i."""
    F = expand(gh({(1, 0): 1}, {(0, 1): -1}, 81)).to_float()
    root = cmath.sqrt(2j * cmath.pi)
    result = classify_fixed_point(F, (root, root))
    assert abs(result.jacobian_det - 1) <= 1e-7
    assert result.tag not in (ATTRACTING, TANGENT_TO_IDENTITY)
    with pytest.raises(MapError):
        recenter(F, (root, root))


def test_locate_isolated_fixed_point():
    """Test Gauss-Newton convergence to (1, 1) for (z + z^2 - z^3, w + w^2 - w^3)."""
    F = TangentMap(S({(2, 0): 1, (3, 0): -1}, 3), S({(0, 2): 1, (0, 3): -1}, 3))
    z0, w0 = locate_fixed_point(F, (1.1, 0.9))
    assert abs(z0 - 1) <= 1e-12 and abs(w0 - 1) <= 1e-12


def test_locate_fixed_point_on_fixed_curve():
    """Test that a point with z0 w0 = 2 pi i is confirmed as fixed."""
    F = expand(gh({(1, 0): 1}, {(0, 1): -1}, 81)).to_float()
    root = cmath.sqrt(2j * cmath.pi)
    z0, w0 = locate_fixed_point(F, (root, root))
    assert abs(z0 * w0 - 2j * cmath.pi) <= 1e-8
    assert abs(z0 - root) <= 1e-9 and abs(w0 - root) <= 1e-9
    assert abs(classify_fixed_point(F, (z0, w0)).jacobian_det - 1) <= 1e-7


def test_locate_fixed_point_stays_on_fixed_curve_from_nearby_guess():
    """Test that a guess near the curve z w = 2 pi i lands on it without wandering off."""
    F = expand(gh({(1, 0): 1}, {(0, 1): -1}, 81)).to_float()
    root = cmath.sqrt(2j * cmath.pi)
    guess = (root * (1 + 1e-6), root)
    z0, w0 = locate_fixed_point(F, guess)
    image = eval_map(F, z0, w0)
    assert max(abs(image[0] - z0), abs(image[1] - w0)) <= 1e-9
    assert abs(z0 - guess[0]) <= 1e-4 and abs(w0 - guess[1]) <= 1e-4


def test_locate_fixed_point_failure():
    """Test that an unconverged search raises."""
    F = TangentMap(S({(2, 0): 1}, 2), S({}, 2))
    with pytest.raises(MapError):
        locate_fixed_point(F, (100, 0), max_iter=3)


def test_recenter_trivial_cases():
    """Test recentering the identity and recentering at the origin."""
    assert recenter(TangentMap.identity(4), (0.3, -0.2j)).is_identity()
    F = TangentMap(S({(2, 0): -1, (1, 1): 3}, 3), S({(0, 2): -1}, 3))
    assert recenter(F, (0, 0)) == F.to_float()


def test_recenter_keeps_small_coefficients():
    """Test that coefficients far below the fixed-point tolerance survive recentering."""
    F = TangentMap(S({(2, 0): Fraction(-1, 10**10)}, 3), S({(0, 2): Fraction(-1, 10**10)}, 3))
    G = recenter(F, (0, 0))
    assert G == F.to_float()
    assert not G.is_identity()
    assert order(G) == 2


def test_recenter_at_tangent_point():
    """Test (z - z^2 (z - 1)^2, w - w^2) recentered at (1, 0)."""
    F = TangentMap(S({(2, 0): -1, (3, 0): 2, (4, 0): -1}, 4), S({(0, 2): -1}, 4))
    G = recenter(F, (1, 0))
    assert G.domain == FLOAT
    assert dict(G.p.coeffs) == pytest.approx({(2, 0): -1, (3, 0): -2, (4, 0): -1})
    assert dict(G.q.coeffs) == pytest.approx({(0, 2): -1})


@examples(100)
@given(
    st.complex_numbers(max_magnitude=0.2, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=0.2, allow_nan=False, allow_infinity=False),
)
def test_recenter_conjugacy(x, y):
    """Test G(x, y) = F(p0 + (x, y)) - p0 near the new origin."""
    F = TangentMap(S({(2, 0): -1, (3, 0): 2, (4, 0): -1, (2, 2): 1}, 4), S({(0, 2): -1}, 4))
    G = recenter(F, (1, 0))
    image = eval_map(F, 1 + x, y)
    shifted = np.array(eval_map(G, x, y))
    assert np.max(np.abs(shifted - np.array([image[0] - 1, image[1]]))) <= 1e-9


def test_recenter_rejects_non_tangent_point():
    """Test that DF != Id is refused."""
    F = expand(gh({(0, 0): 1}, {(0, 0): 2}, 6))
    with pytest.raises(MapError):
        recenter(F, (-0.5, 0))
