import numpy as np
import pytest

from anisoshape.anisotropy import (
    Anisotropy,
    elliptic,
    ellipticity_audit,
    iso,
    lq,
    parse_anisotropy,
    smoothness_probe,
    tangential_coefficient,
    unit,
    wulff_shape,
)
from anisoshape.curve2d import convex_hull
from anisoshape.errors import InputError, NonSmoothAnisotropy, NonUnitNormal

FAMILIES = [iso(), elliptic(2.0, 1.0), elliptic(1.0, 3.0), lq(4.0), lq(1.5, 0.05)]


@pytest.mark.parametrize("aniso", FAMILIES, ids=lambda a: a.spec)
def test_gradient_matches_finite_differences(aniso):
    rng = np.random.default_rng(0)
    nu = unit(rng.uniform(0, 2 * np.pi, 100))
    h = 1e-5
    fd = np.stack([(aniso.value(nu + h * e) - aniso.value(nu - h * e)) / (2 * h) for e in np.eye(2)], axis=1)
    rel = np.linalg.norm(fd - aniso.grad(nu), axis=1) / np.linalg.norm(aniso.grad(nu), axis=1)
    assert rel.max() < 1e-6


@pytest.mark.parametrize("aniso", FAMILIES, ids=lambda a: a.spec)
def test_hessian_matches_gradient_differences(aniso):
    rng = np.random.default_rng(1)
    nu = unit(rng.uniform(0, 2 * np.pi, 50))
    h = 1e-6
    fd = np.stack([(aniso.grad(nu + h * e) - aniso.grad(nu - h * e)) / (2 * h) for e in np.eye(2)], axis=2)
    assert np.abs(fd - aniso.hess(nu)).max() < 1e-6 * max(1.0, np.abs(aniso.hess(nu)).max())


@pytest.mark.parametrize("aniso", FAMILIES, ids=lambda a: a.spec)
def test_hessian_annihilates_normal(aniso):
    nu = unit(np.linspace(0, 2 * np.pi, 97))
    assert np.abs(np.einsum("nij,nj->ni", aniso.hess(nu), nu)).max() < 1e-9


@pytest.mark.parametrize("aniso", FAMILIES, ids=lambda a: a.spec)
def test_tangential_coefficient_equals_angular_identity(aniso):
    theta = np.linspace(0, 2 * np.pi, 73)
    h = 1e-4
    f = lambda t: aniso.value(unit(t))  # noqa: E731
    second = (f(theta + h) - 2 * f(theta) + f(theta - h)) / h**2
    assert np.allclose(aniso.tangential(unit(theta)), f(theta) + second, atol=1e-6 * 10)


def test_elliptic_tangential_values():
    a = elliptic(2.0, 1.0)
    assert tangential_coefficient(a, [1.0, 0.0]) == pytest.approx(0.5)
    assert tangential_coefficient(a, [0.0, 1.0]) == pytest.approx(4.0)
    assert tangential_coefficient(iso(), [0.6, 0.8]) == pytest.approx(1.0)


def test_tangential_requires_unit_normal():
    with pytest.raises(NonUnitNormal):
        tangential_coefficient(iso(), [2.0, 0.0])


def test_ellipticity_audit():
    assert ellipticity_audit(iso()).lambda_min == pytest.approx(1.0)
    audit = ellipticity_audit(elliptic(2.0, 1.0))
    assert audit.lambda_min == pytest.approx(0.5, rel=1e-6)
    assert audit.passed


def test_crystalline_rejected():
    with pytest.raises(NonSmoothAnisotropy):
        smoothness_probe(lq(1.0, 0.0))


def test_bad_parameters():
    with pytest.raises(InputError):
        Anisotropy("elliptic", (1.0,))
    with pytest.raises(InputError):
        Anisotropy("hexagonal")
    with pytest.raises(InputError):
        parse_anisotropy("elliptic:2,x")


def test_parse():
    assert parse_anisotropy("elliptic:2,1") == elliptic(2.0, 1.0)
    assert parse_anisotropy("iso") == iso()


def test_wulff_iso_is_unit_circle():
    w = wulff_shape(iso(), 64)
    assert np.allclose(np.linalg.norm(w.points, axis=1), 1.0)


def test_wulff_elliptic_support_function():
    a = elliptic(2.0, 1.0)
    w = wulff_shape(a, 256)
    nu = unit(2 * np.pi * np.arange(720) / 720)
    support = (nu @ w.points.T).max(axis=1)
    assert np.all(support <= a.value(nu) + 1e-8)
    gen = unit(2 * np.pi * np.arange(256) / 256)
    assert np.allclose(np.sum(gen * w.points, axis=1), a.value(gen), atol=1e-8)
    assert np.abs(w.points[:, 0]).max() == pytest.approx(2.0)
    assert np.abs(w.points[:, 1]).max() == pytest.approx(1.0)


def test_wulff_scaling_and_convexity():
    a = lq(4.0)
    w1, w2 = wulff_shape(a, 128), wulff_shape(a, 128, 2.0)
    assert np.array_equal(w2.points, 2 * w1.points)
    assert convex_hull(w1).distance.max() < 1e-10
