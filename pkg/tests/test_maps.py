import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcneumann import (
    CardioidPower,
    Composition,
    Identity,
    Moebius,
    RadialPower,
    Source,
    UserSampled,
    distortion_global,
    distortion_pointwise,
    evaluate,
    jacobian,
    jet,
)
from qcneumann.errors import DegenerateJacobian, DerivativeSingularity, PointOutsideSource
from conftest import spiral_points

# points strictly inside the unit disc, away from 0 and the boundary
interior_z = st.complex_numbers(max_magnitude=0.9, allow_nan=False, allow_infinity=False).filter(
    lambda z: abs(z) > 1e-3
)
k_values = st.sampled_from([1.0, 1.5, 2.0, 3.0, 5.0])


def test_evaluate_identity():
    assert evaluate(Identity(), 0.3 + 0.4j) == 0.3 + 0.4j


def test_evaluate_cardioid_origin():
    # (0 + 1)^2 = 1
    assert evaluate(CardioidPower(k=1), 0j) == pytest.approx(1.0)


def test_evaluate_radial_half():
    assert evaluate(RadialPower(k=1), 0.5 + 0j) == pytest.approx(0.25)


def test_evaluate_outside_source_raises():
    with pytest.raises(PointOutsideSource):
        evaluate(Identity(), 1.2 + 0j)
    with pytest.raises(PointOutsideSource):
        evaluate(RadialPower(k=1, source=Source.CENTERED_SQUARE), 0.9 + 0.9j)


def test_jet_radial_printed_formulas():
    j = jet(RadialPower(k=2), 0.5 + 0j)
    assert j.wz == pytest.approx(0.5)  # (k/2+1)|z|^k = 2 * 0.25
    assert j.wzbar == pytest.approx(0.25)  # (k/2)|z|^(k-2) z^2
    assert j.derivation == "analytic"


def test_jet_identity():
    j = jet(Identity(), -0.2 + 0.7j)
    assert j.wz == 1.0 and j.wzbar == 0.0


def test_jet_cardioid_holomorphic_case():
    # k = 1 gives w = (z+1)^2, so w' = 2(z+1)
    j = jet(CardioidPower(k=1), 0.5 + 0j)
    assert j.wz == pytest.approx(3.0)
    assert j.wzbar == 0.0


def test_jacobian_values():
    assert jacobian(Identity(), 0.1 + 0.1j) == pytest.approx(1.0)
    assert jacobian(RadialPower(k=2), 0.5 + 0j) == pytest.approx(0.1875)  # 3 * 0.5^4
    assert jacobian(CardioidPower(k=1), 1.0 + 0j) == pytest.approx(16.0)  # 4*1*(1+2+1)


@given(z=interior_z, k=k_values)
@settings(max_examples=150, deadline=None)
def test_jacobian_matches_printed_closed_forms(z, k):
    r = abs(z)
    j_radial = jacobian(RadialPower(k=k), z)
    assert j_radial == pytest.approx((k + 1) * r ** (2 * k), rel=1e-10)
    j_card = jacobian(CardioidPower(k=k), z)
    expected = 4 * k * r ** (2 * k - 2) * (r ** (2 * k) + r ** (k - 1) * (2 * z.real) + 1)
    assert j_card == pytest.approx(expected, rel=1e-10, abs=1e-12)


@given(z=interior_z, k=k_values)
@settings(max_examples=100, deadline=None)
def test_jacobian_equals_wirtinger_difference(z, k):
    for pmap in (RadialPower(k=k), CardioidPower(k=k), Moebius(a=0.3 + 0.2j, theta=1.0)):
        j = pmap.jet(z)
        assert j.jacobian == pytest.approx(abs(j.wz) ** 2 - abs(j.wzbar) ** 2, rel=1e-12)


@pytest.mark.parametrize(
    "pmap",
    [
        Identity(),
        RadialPower(k=1),
        RadialPower(k=2.5),
        CardioidPower(k=1),
        CardioidPower(k=3),
        Moebius(a=0.4 - 0.2j, theta=0.3),
        Composition(parts=(Moebius(a=0.1 + 0.1j), RadialPower(k=2))),
    ],
)
def test_finite_differences_agree_with_analytic(pmap):
    pts = spiral_points(1000)
    sampled = UserSampled(fn=pmap.value, source=pmap.source)
    a = pmap.jet(pts)
    f = sampled.jet(pts)
    assert f.derivation == "finite-difference"
    scale = np.abs(a.wz) + np.abs(a.wzbar) + 1.0
    assert np.max(np.abs(a.wz - f.wz) / scale) < 1e-6
    assert np.max(np.abs(a.wzbar - f.wzbar) / scale) < 1e-6


def test_radial_power_zero_is_identity():
    pts = spiral_points(1000, radius=0.999)
    w = RadialPower(k=0).value(pts)
    assert np.max(np.abs(w - pts)) < 1e-14


def test_composition_chain_rule_against_finite_differences():
    comp = Composition(parts=(Moebius(a=0.3 + 0.1j, theta=0.8), RadialPower(k=1)))
    pts = spiral_points(500)
    a = comp.jet(pts)
    f = UserSampled(fn=comp.value).jet(pts)
    scale = np.abs(a.wz) + np.abs(a.wzbar) + 1.0
    assert np.max(np.abs(a.wz - f.wz) / scale) < 1e-6
    assert np.max(np.abs(a.wzbar - f.wzbar) / scale) < 1e-6


def test_composition_applies_right_to_left():
    # parts[-1] first: z -> |z| z -> moebius(|z| z)
    inner = RadialPower(k=1)
    outer = Moebius(a=0.5 + 0j)
    comp = Composition(parts=(outer, inner))
    z = 0.6 + 0.2j
    assert comp.value(z) == pytest.approx(outer.value(inner.value(z)))


def test_distortion_pointwise_families():
    assert distortion_pointwise(Identity(), 0.5j).K_point == pytest.approx(1.0)
    for k in (0.5, 2.0, 4.0):
        s = distortion_pointwise(RadialPower(k=k), 0.4 + 0.1j)
        assert s.K_point == pytest.approx(k + 1, rel=1e-12)
    for k in (1.0, 2.5, 4.0):
        s = distortion_pointwise(CardioidPower(k=k), -0.2 + 0.5j)
        assert s.K_point == pytest.approx(k, rel=1e-12)


def test_distortion_pointwise_degenerate():
    with pytest.raises(DegenerateJacobian):
        distortion_pointwise(CardioidPower(k=2), -1.0 + 0j)  # cusp preimage
    with pytest.raises(DegenerateJacobian):
        distortion_pointwise(RadialPower(k=1), 0j)


def test_distortion_inequality_opnorm(disc_grid0):
    # |D phi|^2 <= K * J at sampled points, the planar distortion inequality
    for pmap in (RadialPower(k=2), CardioidPower(k=3), Moebius(a=0.2 + 0.4j)):
        K = distortion_global(pmap, disc_grid0)
        pts = spiral_points(500)
        j = pmap.jet(pts)
        assert np.all(j.opnorm**2 <= K * j.jacobian * (1 + 1e-9) + 1e-15)


def test_distortion_global_builtin_constants(disc_grid0):
    assert distortion_global(Identity(), disc_grid0) == 1.0
    assert distortion_global(CardioidPower(k=3), disc_grid0) == 3.0
    assert distortion_global(RadialPower(k=2), disc_grid0) == 3.0
    assert distortion_global(Moebius(a=0.7j, theta=2.0), disc_grid0) == 1.0


def test_distortion_global_grid_branch_moebius(disc_grid0):
    # conformal map through the sampled branch: K should be 1 up to rounding
    target = Moebius(a=0.3 + 0.3j, theta=0.4)
    sampled = UserSampled(fn=target.value)
    K = distortion_global(sampled, disc_grid0)
    assert K == pytest.approx(1.0, abs=5e-5)


def test_distortion_global_composition_upper_bound(disc_grid0):
    comp = Composition(parts=(Moebius(a=0.2 + 0.1j), RadialPower(k=1.5)))
    assert distortion_global(comp, disc_grid0) == pytest.approx(2.5)
    info = comp.analytic_distortion()
    assert info == (2.5, False)  # product bound, not exact


def test_cardioid_requires_k_at_least_one():
    with pytest.raises(DerivativeSingularity):
        CardioidPower(k=0.5)


def test_moebius_requires_a_in_disc():
    with pytest.raises(ValueError):
        Moebius(a=1.0 + 0j)


def test_cardioid_disc_only():
    with pytest.raises(ValueError):
        CardioidPower(k=1, source=Source.CENTERED_SQUARE)
