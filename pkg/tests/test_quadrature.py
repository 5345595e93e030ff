"""Sphere rules and boundary integrals via the curvature change of variables."""

import math

import numpy as np
import pytest

from randpoly.errors import ConfigError, NumericalError, Unsupported
from randpoly.geom import Ball, PolytopeV, axis_ellipsoid, boundary_batch
from randpoly.quadrature import (
    MIN_NODES,
    boundary_integral,
    curvature_integral,
    integrate_sphere,
    sphere_rule,
)

# frozen oracle values for the ellipse with semiaxes (2, 1); both recomputed
# below from independent parametric quadratures before use
ELLIPSE_PERIMETER = 9.688448220547677
ELLIPSE_KAPPA_43 = 6.103339926942274


def arclength_perimeter(a, b, n=1 << 16):
    """Trapezoid on the smooth periodic speed |c'(t)|; spectrally accurate."""
    th = np.arange(n) * (2.0 * np.pi / n)
    return float(np.hypot(a * np.sin(th), b * np.cos(th)).sum() * (2.0 * np.pi / n))


def parametric_kappa_power(a, b, p, panels=10**6):
    """Direct 1D quadrature of kappa^p over the parametric ellipse boundary.

    kappa(t) = ab / w(t)^3 and ds = w(t) dt with w = sqrt(a^2 sin^2 + b^2 cos^2).
    """
    th = np.arange(panels) * (2.0 * np.pi / panels)
    w = np.sqrt(a * a * np.sin(th) ** 2 + b * b * np.cos(th) ** 2)
    return float(((a * b / w**3) ** p * w).sum() * (2.0 * np.pi / panels))


def test_rule_weight_sums():
    r2 = sphere_rule(2, 128)
    assert r2.weights.sum() == pytest.approx(2 * math.pi, abs=1e-12)
    assert np.all(r2.weights > 0)
    r3 = sphere_rule(3, 16)
    assert r3.nodes.shape == (16 * 32, 3)
    assert r3.weights.sum() == pytest.approx(4 * math.pi, abs=1e-12)
    assert np.all(np.abs(np.linalg.norm(r3.nodes, axis=1) - 1.0) < 1e-12)


def test_rule_minimum_size():
    assert MIN_NODES == 8
    r = sphere_rule(2, 8)
    assert np.allclose(r.weights, 2 * math.pi / 8)
    for m in (4, 7):
        with pytest.raises(ConfigError):
            sphere_rule(2, m)
    with pytest.raises(Unsupported):
        sphere_rule(4, 64)


def test_integrate_sphere_polynomials():
    r2 = sphere_rule(2, 64)
    assert integrate_sphere(lambda u: np.ones(u.shape[0]), r2) == pytest.approx(2 * math.pi, abs=1e-12)
    assert integrate_sphere(lambda u: u[:, 0] ** 2, r2) == pytest.approx(math.pi, abs=1e-12)
    r3 = sphere_rule(3, 32)
    assert integrate_sphere(lambda u: u[:, 0] ** 2, r3) == pytest.approx(4 * math.pi / 3, abs=1e-10)


def test_integrate_sphere_rejects_nonfinite():
    r2 = sphere_rule(2, 16)

    def bad(u):
        out = np.ones(u.shape[0])
        out[3] = np.nan
        return out

    with pytest.raises(NumericalError) as err:
        integrate_sphere(bad, r2)
    assert "node" in str(err.value)


def test_boundary_integral_ball_circumference():
    r2 = sphere_rule(2, 64)
    val = boundary_integral(Ball(np.zeros(2), 2.5), lambda xs, ns, ks: np.ones(xs.shape[0]), r2)
    assert val == pytest.approx(2 * math.pi * 2.5, rel=1e-12)
    r3 = sphere_rule(3, 24)
    s = boundary_integral(Ball(np.zeros(3), 2.0), lambda xs, ns, ks: np.ones(xs.shape[0]), r3)
    assert s == pytest.approx(4 * math.pi * 4.0, rel=1e-10)


def test_boundary_integral_ellipse_perimeter_oracle():
    oracle = arclength_perimeter(2.0, 1.0)
    assert oracle == pytest.approx(ELLIPSE_PERIMETER, abs=1e-10)
    rule = sphere_rule(2, 2048)
    ell = axis_ellipsoid(np.zeros(2), (2.0, 1.0))
    per = boundary_integral(ell, lambda xs, ns, ks: np.ones(xs.shape[0]), rule)
    assert per == pytest.approx(oracle, abs=1e-8)


def test_boundary_integral_total_curvature():
    # integral of kappa over a closed convex planar curve is 2 pi
    rule = sphere_rule(2, 512)
    ell = axis_ellipsoid(np.zeros(2), (2.0, 1.0))
    val = boundary_integral(ell, lambda xs, ns, ks: ks, rule)
    assert val == pytest.approx(2 * math.pi, abs=1e-10)


def test_boundary_integral_unsupported_body():
    rule = sphere_rule(2, 64)
    tri = PolytopeV(np.array([[0, 0], [1, 0], [0, 1]], float))
    with pytest.raises(Unsupported):
        boundary_integral(tri, lambda xs, ns, ks: np.ones(xs.shape[0]), rule)


def test_curvature_integral_ball_closed_forms():
    r2 = sphere_rule(2, 64)
    R = 2.0
    val = curvature_integral(Ball(np.zeros(2), R), -1.0 / 3.0, r2)
    assert val == pytest.approx(2 * math.pi * R ** (4.0 / 3.0), rel=1e-12)
    for p in (-0.25, 0.0, 1.7):
        assert curvature_integral(Ball(np.zeros(2), 1.0), p, r2) == pytest.approx(2 * math.pi, rel=1e-12)
    r3 = sphere_rule(3, 24)
    assert curvature_integral(Ball(np.zeros(3), 1.0), 0.5, r3) == pytest.approx(4 * math.pi, rel=1e-10)


def test_curvature_integral_ellipse_parametric_oracle():
    oracle = parametric_kappa_power(2.0, 1.0, 4.0 / 3.0)
    assert oracle == pytest.approx(ELLIPSE_KAPPA_43, abs=1e-9)
    rule = sphere_rule(2, 2048)
    ell = axis_ellipsoid(np.zeros(2), (2.0, 1.0))
    val = curvature_integral(ell, 4.0 / 3.0, rule)
    assert val == pytest.approx(oracle, abs=1e-7)


def test_rule_doubling_consistency():
    ell = axis_ellipsoid(np.zeros(2), (2.0, 1.0))
    f = lambda u: np.exp(u[:, 0]) * (1.0 + u[:, 1] ** 2)
    a = integrate_sphere(f, sphere_rule(2, 256))
    b = integrate_sphere(f, sphere_rule(2, 512))
    assert abs(a - b) < 1e-9
    p1 = curvature_integral(ell, 0.5, sphere_rule(2, 1024))
    p2 = curvature_integral(ell, 0.5, sphere_rule(2, 2048))
    assert abs(p1 - p2) < 1e-9

    g = lambda u: np.exp(u[:, 2]) + u[:, 0] ** 2 * u[:, 1] ** 2
    a3 = integrate_sphere(g, sphere_rule(3, 24))
    b3 = integrate_sphere(g, sphere_rule(3, 48))
    assert abs(a3 - b3) < 1e-6


@pytest.mark.parametrize(
    "body",
    [Ball(np.zeros(2), 1.0), axis_ellipsoid(np.zeros(2), (2.0, 1.0))],
)
def test_gauss_map_change_of_variables_identity(body):
    # pushing f through the inverse Gauss map with weight kappa recovers the
    # plain sphere integral; five polynomial test functions
    rule = sphere_rule(2, 2048)
    polys = [
        lambda u: np.ones(u.shape[0]),
        lambda u: u[:, 0],
        lambda u: u[:, 0] ** 2,
        lambda u: u[:, 0] * u[:, 1],
        lambda u: u[:, 1] ** 3 + 0.5 * u[:, 0] ** 2,
    ]
    xs, normals, kappas = boundary_batch(body, rule.nodes)
    assert np.max(np.abs(normals - rule.nodes)) < 1e-10
    for f in polys:
        lhs = integrate_sphere(f, rule)
        rhs = boundary_integral(body, lambda x, ns, ks, f=f: f(ns) * ks, rule)
        assert rhs == pytest.approx(lhs, rel=1e-8, abs=1e-12)


def test_positive_integrand_positive_result():
    rule = sphere_rule(3, 16)
    val = boundary_integral(
        axis_ellipsoid(np.zeros(3), (2.0, 1.0, 1.0)),
        lambda xs, ns, ks: 0.1 + xs[:, 0] ** 2,
        rule,
    )
    assert val > 0
