import math

import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad

from qcneumann import (
    CardioidPower,
    Identity,
    Moebius,
    RadialPower,
    Source,
    ProbeFunction,
    UserSampled,
    build_grid,
    check_poincare_unweighted,
    check_poincare_weighted,
    esssup_jacobian,
    grid_for_map,
    integrate,
    lbeta_jacobian_norm,
    monomials,
    regularity_scan,
)
from qcneumann.errors import NonFiniteIntegrand, NotConverged
from qcneumann.quadrature import _minimize_shift


def radial_norm_closed_form(k: float, beta: float) -> float:
    """Analytic radial integration of ((k+1) r^(2k))^beta * 2 pi r dr."""
    return (k + 1) * (math.pi / (k * beta + 1)) ** (1.0 / beta)


def test_weight_sums(disc_grid0, square_grid0):
    assert disc_grid0.weights.sum() == pytest.approx(math.pi, rel=1e-12)
    assert square_grid0.weights.sum() == pytest.approx(2.0, rel=1e-12)
    assert np.all(disc_grid0.weights > 0)
    assert np.all(square_grid0.weights > 0)


def test_level_one_node_counts():
    g = build_grid(Source.UNIT_DISC, 1)
    assert (g.radial_nodes, g.angular_nodes) == (256, 512)
    assert len(g.points) == 256 * 512
    assert g.weights.sum() == pytest.approx(math.pi, rel=1e-12)


def test_integrate_constants(disc_grid0, square_grid0):
    assert integrate(disc_grid0, lambda z: np.ones_like(z, dtype=float)) == pytest.approx(
        math.pi, rel=1e-13
    )
    assert integrate(square_grid0, lambda z: np.ones_like(z, dtype=float)) == pytest.approx(
        2.0, rel=1e-13
    )


def test_integrate_r_squared(disc_grid0):
    assert integrate(disc_grid0, lambda z: np.abs(z) ** 2) == pytest.approx(
        math.pi / 2, rel=1e-13
    )


def test_integrate_error_estimate(disc_grid0):
    val, err = integrate(disc_grid0, lambda z: np.abs(z) ** 2, error_estimate=True)
    assert val == pytest.approx(math.pi / 2, rel=1e-13)
    assert err < 1e-12


def test_integrate_nonfinite(disc_grid0):
    with pytest.raises(NonFiniteIntegrand):
        integrate(disc_grid0, lambda z: np.where(np.abs(z) < 0.5, np.inf, 1.0))


@pytest.mark.parametrize("k", [0.0, 1.0, 2.0, 3.0, 5.0])
@pytest.mark.parametrize("beta", [1.0, 1.5, 2.0, 4.0, 8.0])
def test_radial_norm_closed_form_grid(disc_grid0, k, beta):
    value = lbeta_jacobian_norm(RadialPower(k=k), beta, disc_grid0)
    assert value == pytest.approx(radial_norm_closed_form(k, beta), rel=1e-8)


def test_radial_norm_against_independent_quadrature(disc_grid0):
    # 1-D oracle: scipy.integrate.quad on the radial reduction
    k, beta = 1.5, 2.5
    integral, err = scipy_quad(
        lambda r: ((k + 1) * r ** (2 * k)) ** beta * 2 * math.pi * r, 0.0, 1.0
    )
    assert err < 1e-10
    value = lbeta_jacobian_norm(RadialPower(k=k), beta, disc_grid0)
    assert value == pytest.approx(integral ** (1 / beta), rel=1e-9)


def test_identity_norm_any_beta(disc_grid0):
    for beta in (1.0, 3.0, 7.5):
        assert lbeta_jacobian_norm(Identity(), beta, disc_grid0) == pytest.approx(
            math.pi ** (1 / beta), rel=1e-12
        )


@pytest.mark.parametrize("k", [1.0, 2.0, 4.0])
def test_cardioid_image_area(disc_grid0, k):
    # the image is the same cardioid of area 6 pi for every k
    assert lbeta_jacobian_norm(CardioidPower(k=k), 1.0, disc_grid0) == pytest.approx(
        6 * math.pi, rel=1e-6
    )


def test_cardioid_grid_gets_doubled_angles():
    g = grid_for_map(CardioidPower(k=2), 0)
    assert g.angular_nodes == 512
    assert grid_for_map(RadialPower(k=2), 0).angular_nodes == 256


def test_esssup_values(disc_grid0, square_grid0):
    assert esssup_jacobian(Identity(), disc_grid0) == 1.0
    assert esssup_jacobian(RadialPower(k=3), disc_grid0) == 4.0
    assert esssup_jacobian(RadialPower(k=3, source=Source.CENTERED_SQUARE), square_grid0) == 4.0
    assert esssup_jacobian(CardioidPower(k=2), disc_grid0) == 32.0


def test_esssup_sampled_branch(disc_grid0):
    target = Moebius(a=0.5 + 0j)
    sampled = UserSampled(fn=target.value)
    exact = target.analytic_esssup_jacobian()
    assert esssup_jacobian(sampled, disc_grid0) == pytest.approx(exact, rel=1e-3)


def test_regularity_scan_identity(disc_grid0):
    rep = regularity_scan(Identity(), [1.0, 2.0, math.inf], disc_grid0)
    assert all(p.converged for p in rep.beta_probes)
    assert rep.esssup == 1.0
    assert rep.image_area == pytest.approx(math.pi, rel=1e-12)
    assert rep.K == 1.0
    assert math.isinf(rep.astala_limit)


def test_regularity_scan_radial(disc_grid0):
    rep = regularity_scan(RadialPower(k=2), [1.0, 2.0, 4.0], disc_grid0)
    assert rep.K == 3.0
    assert rep.astala_limit == pytest.approx(1.5)
    p2 = rep.probe(2.0)
    assert p2.converged
    assert p2.norm == pytest.approx(3 * (math.pi / 5) ** 0.5, rel=1e-8)
    assert rep.image_area == pytest.approx(math.pi, rel=1e-8)  # disc onto disc


def test_regularity_scan_flags_divergence(disc_grid0):
    # w = |z|^a z with a = -1/2: J ~ r^(-1), so the area integral is exact
    # but |J|^2 diverges logarithmically at the origin
    a = -0.5

    def wobble(z):
        r = np.abs(z)
        return np.where(r > 0, r**a * z, 0.0)

    rep = regularity_scan(UserSampled(fn=wobble), [1.0, 2.0], disc_grid0)
    assert rep.probe(1.0).converged
    assert not rep.probe(2.0).converged


def test_norm_monotone_after_source_normalization(disc_grid0):
    for pmap in (RadialPower(k=1), RadialPower(k=3), CardioidPower(k=2)):
        betas = [1.0, 1.5, 2.0, 4.0, 8.0]
        means = [
            lbeta_jacobian_norm(pmap, b, disc_grid0) / pmap.source.area ** (1 / b)
            for b in betas
        ]
        assert all(m2 >= m1 * (1 - 1e-12) for m1, m2 in zip(means, means[1:]))


def test_not_converged_carries_levels(disc_grid0):
    a = -0.95

    def wobble(z):
        r = np.abs(z)
        return np.where(r > 0, r**a * z, 0.0)

    with pytest.raises(NotConverged) as err:
        lbeta_jacobian_norm(UserSampled(fn=wobble), 4.0, disc_grid0)
    assert err.value.fine != err.value.coarse


def test_minimizer_matches_weighted_mean():
    rng = np.random.default_rng(7)
    vals = rng.standard_normal(1000)
    weights = rng.random(1000) + 0.1
    c, _ = _minimize_shift(vals, weights, 2.0)
    assert c == pytest.approx(np.sum(weights * vals) / np.sum(weights), abs=1e-10)


def test_minimizer_ternary_close_to_mean_for_s2():
    rng = np.random.default_rng(11)
    vals = rng.standard_normal(500)
    weights = np.ones(500)
    c2, _ = _minimize_shift(vals, weights, 2.0)
    # exponent 2.000...01 via ternary search lands at the same spot
    c_t, _ = _minimize_shift(vals, weights, 2.0000000001)
    assert c_t == pytest.approx(c2, abs=1e-6)


def test_poincare_weighted_constant_function(disc_grid0):
    const = ProbeFunction(lambda w: np.ones_like(w, dtype=float), lambda w: np.zeros_like(w))
    chk = check_poincare_weighted(Identity(), const, 2.0, disc_grid0)
    assert chk.lhs == pytest.approx(0.0, abs=1e-12)
    assert chk.ratio == 0.0


def test_poincare_weighted_identity_linear(disc_grid0):
    f = ProbeFunction(lambda w: w.real, lambda w: np.ones_like(w.real) + 0j)
    chk = check_poincare_weighted(Identity(), f, 2.0, disc_grid0)
    assert chk.lhs == pytest.approx((math.pi / 4) ** 0.5, rel=1e-10)
    assert chk.rhs == pytest.approx(4.0 * math.sqrt(math.pi), rel=1e-10)
    assert chk.ratio == pytest.approx(0.125, rel=1e-9)
    assert chk.ratio < 1


def test_poincare_weighted_cardioid_linear(disc_grid0):
    f = ProbeFunction(lambda w: w.real, lambda w: np.ones_like(w.real) + 0j)
    chk = check_poincare_weighted(CardioidPower(k=1), f, 2.0, disc_grid0)
    assert chk.ratio <= 1 + 1e-6


def test_poincare_unweighted_identity(disc_grid0):
    f = ProbeFunction(lambda w: w.real, lambda w: np.ones_like(w.real) + 0j)
    chk = check_poincare_unweighted(Identity(), f, 2.0, disc_grid0)
    assert chk.lhs == pytest.approx((math.pi / 4) ** 0.5, rel=1e-10)
    assert chk.ratio <= 1 + 1e-6


def test_poincare_unweighted_radial_quadratic(disc_grid0):
    f = ProbeFunction(
        lambda w: w.real**2 + w.imag**2,
        lambda w: 2 * w.real + 2j * w.imag,
    )
    chk = check_poincare_unweighted(RadialPower(k=1), f, 2.0, disc_grid0)
    assert chk.ratio <= 1 + 1e-6


def test_poincare_square_source_rejected(square_grid0):
    f = monomials(1)[0]
    with pytest.raises(ValueError):
        check_poincare_weighted(
            RadialPower(k=1, source=Source.CENTERED_SQUARE), f, 2.0, square_grid0
        )


def test_monomials_count_and_gradients():
    ms = monomials(3)
    assert len(ms) == 2 + 3 + 4
    w = np.array([0.3 + 0.4j, -0.1 + 0.9j])
    for tf in ms:
        g = tf.grad(w)
        h = 1e-6
        fd = (tf.value(w + h) - tf.value(w - h)) / (2 * h) + 1j * (
            tf.value(w + 1j * h) - tf.value(w - 1j * h)
        ) / (2 * h)
        assert np.allclose(g, fd, rtol=1e-5, atol=1e-6)


def test_grid_csv_dump(tmp_path, disc_grid0):
    path = tmp_path / "grid.csv"
    disc_grid0.dump_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,weight"
    assert len(lines) == 1 + len(disc_grid0.points)
