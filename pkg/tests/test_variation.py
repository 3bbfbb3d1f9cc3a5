import numpy as np
import pytest

from anisoshape.anisotropy import elliptic, iso, lq, wulff_shape
from anisoshape.curve2d import MultiCurve, build, circle
from anisoshape.errors import DimensionMismatch, StepTooLarge
from anisoshape.potential import quadratic, signed_distance_potential
from anisoshape.variation import (
    anisotropic_curvature,
    bulk_gradient,
    check_variations,
    closed_form_curvature,
    energy,
    first_variation_residual,
    jacobi_operator,
    spectrum,
    stability_form,
)
from oracles import critical_radii, star


def unit_circle(n=256, r=1.0):
    return MultiCurve((circle(r, n),))


def test_energy_values():
    e = energy(unit_circle(), iso(), None)
    assert e.surface == pytest.approx(2 * 256 * np.sin(np.pi / 256))
    assert e.bulk == 0
    sq = build([[(0, 0), (1, 0), (1, 1), (0, 1)]])
    assert energy(sq, elliptic(2.0, 1.0), None).surface == pytest.approx(6.0)
    assert energy(unit_circle(), iso(), quadratic(1.0)).bulk == pytest.approx(np.pi / 2, abs=1e-3)


@pytest.mark.parametrize("r", [1.0, 2.0, 0.5])
def test_circle_curvature(r):
    H = anisotropic_curvature(unit_circle(256, r), iso())
    assert np.abs(H - 1 / r).max() < 1e-3 / r


def test_wulff_curvature_converges_to_one():
    errs = []
    for n in (64, 128, 256):
        H = anisotropic_curvature(wulff_shape(elliptic(2.0, 1.0), n), elliptic(2.0, 1.0))
        errs.append(np.abs(H - 1).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_curvature_routes_agree():
    c = star(3, 512, amplitude=0.2)
    for a in (iso(), elliptic(2.0, 1.0), lq(4.0)):
        H1 = anisotropic_curvature(c, a)
        H2 = closed_form_curvature(c, a)
        assert np.abs(H1 - H2).max() < 5 * c.h * max(1.0, np.abs(H2).max())


def test_stationarity_disk():
    rep = first_variation_residual(unit_circle(), iso(), quadratic(1.0), constrained=True)
    assert rep.mu == pytest.approx(2.0, abs=1e-3)
    assert rep.residual_sup < 1e-9
    assert abs(np.sum(rep.residual * np.full(256, 1.0))) < 1e-8  # uniform dual lengths


@pytest.mark.parametrize("r", critical_radii())
def test_critical_ball_residual(r):
    rep = first_variation_residual(unit_circle(256, r), iso(), quadratic(3.0, (0, 0), -3.0), constrained=False)
    assert rep.residual_sup < 1e-3


def test_star_not_critical():
    rep = first_variation_residual(star(0, 256), iso(), quadratic(1.0))
    assert rep.residual_sup > 1.0


@pytest.mark.parametrize("k, expected", [(0, -2 * np.pi), (1, 0.0), (2, 3 * np.pi), (3, 8 * np.pi)])
def test_fourier_stability_form(k, expected):
    c = unit_circle(512)
    theta = np.arctan2(c.points[:, 1], c.points[:, 0])
    assert stability_form(c, iso(), None, np.cos(k * theta)) == pytest.approx(expected, abs=1e-2 * (1 + k * k))


def test_stability_form_potential_term():
    c = unit_circle(512)
    assert stability_form(c, iso(), quadratic(1.0), np.ones(512)) == pytest.approx(2 * np.pi, abs=1e-3)
    assert stability_form(c, iso(), quadratic(1.0), np.zeros(512)) == 0.0


def test_operator_matches_form_and_is_symmetric():
    c = star(1, 200)
    op = jacobi_operator(c, elliptic(2.0, 1.0), quadratic(1.0))
    M = op.matrix.toarray()
    assert np.abs(M - M.T).max() < 1e-12
    phi = np.random.default_rng(0).normal(size=200)
    assert phi @ M @ phi == pytest.approx(stability_form(c, elliptic(2.0, 1.0), quadratic(1.0), phi), rel=1e-10)


def test_form_depends_on_g_only_through_normal_derivative():
    c = star(2, 128)
    phi = np.random.default_rng(1).normal(size=128)
    q1 = stability_form(c, iso(), quadratic(1.0), phi)
    q2 = stability_form(c, iso(), quadratic(1.0, (0, 0), 5.0), phi)
    assert q1 == q2


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        stability_form(unit_circle(), iso(), None, np.ones(3))


def test_spectrum_unit_circle():
    c = unit_circle(512)
    free = spectrum(c, iso(), None, "free", k=4).values
    assert free[0] == pytest.approx(-1.0, abs=5e-3)
    assert np.allclose(free[1:3], 0.0, atol=5e-3)
    assert free[3] == pytest.approx(3.0, abs=1e-2)
    mz = spectrum(c, iso(), None, "mean_zero", k=3).values
    assert abs(mz[0]) < 5e-3
    shifted = spectrum(c, iso(), quadratic(1.0), "free", k=1).values
    assert shifted[0] == pytest.approx(1.0, abs=5e-3)


def test_mean_zero_not_below_free():
    c = star(4, 128)
    g = quadratic(1.0)
    assert spectrum(c, iso(), g, "mean_zero", k=1).values[0] >= spectrum(c, iso(), g, "free", k=1).values[0] - 1e-9


def test_eigenvectors_are_mass_orthonormal():
    c = star(5, 128)
    sp = spectrum(c, elliptic(2.0, 1.0), quadratic(1.0), k=4)
    d = jacobi_operator(c, elliptic(2.0, 1.0), None).mass
    G = sp.vectors.T @ (sp.vectors * d[:, None])
    assert np.allclose(G, np.eye(4), atol=1e-9)
    assert sp.max_residual < 1e-9


def test_variations_at_disk():
    c = unit_circle(512)
    theta = np.arctan2(c.points[:, 1], c.points[:, 0])
    chk = check_variations(c, iso(), quadratic(1.0), np.cos(2 * theta), 1e-4)
    assert chk.first_gap < 1e-6 * np.sqrt(np.pi)
    assert chk.second_asserted
    assert chk.second_gap < 1e-3


def test_variations_zero_field():
    chk = check_variations(unit_circle(), iso(), quadratic(1.0), np.zeros(256), 1e-4)
    assert chk.first_gap == 0 and chk.second_gap < 1e-6


def test_first_variation_on_random_curve_anisotropic():
    c = star(7, 300)
    phi = np.random.default_rng(7).normal(size=300)
    chk = check_variations(c, lq(4.0), quadratic(1.0, (0.2, 0.1)), phi, 1e-6)
    assert chk.first_relative < 1e-6
    assert not chk.second_asserted


def test_step_too_large():
    with pytest.raises(StepTooLarge):
        check_variations(unit_circle(), iso(), quadratic(1.0), np.ones(256), 0.1)


def test_band_quadrature_gradient_and_value():
    base = unit_circle(128)
    g = signed_distance_potential(base, 0.1)
    rng = np.random.default_rng(0)
    c = base.with_points(base.points * 0.97 + 0.003 * rng.normal(size=base.points.shape))
    F, G = bulk_gradient(c, g)
    h = 1e-7
    for i in (0, 17, 90):
        for k in range(2):
            p = c.points.copy()
            p[i, k] += h
            fp = bulk_gradient(c.with_points(p), g)[0]
            p[i, k] -= 2 * h
            fm = bulk_gradient(c.with_points(p), g)[0]
            assert (fp - fm) / (2 * h) == pytest.approx(G[i, k], abs=1e-6)
    # against the radial closed form of int (|x| - 1) / tau over a disk of radius 0.97
    r = 0.97
    assert F == pytest.approx(2 * np.pi * (r**3 / 3 - r**2 / 2) / 0.1, rel=2e-3)
