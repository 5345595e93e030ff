"""Point and hyperplane samplers: correctness of laws, bands, and streams."""

import math

import numpy as np
import pytest

from randpoly.errors import ConfigError, EnvelopeTooLoose, NumericalError
from randpoly.functionals import BandIndicator, Constant, PowerT, sphere_area
from randpoly.geom import Ball, Hyperplane, PolytopeV, contains, support_vec
from randpoly.quadrature import sphere_rule
from randpoly.sampling import (
    HyperplaneSampler,
    InducedPolar,
    RadialPower,
    Role,
    StreamKey,
    UniformOnBody,
    induced_polar_density,
    mu_q_mass,
    sample_hyperplane,
    sample_point,
    sample_points,
    validate_hyperplane_weight,
)

DISK = Ball(np.zeros(2), 1.0)


def ks_one_sample(xs: np.ndarray, cdf) -> float:
    xs = np.sort(xs)
    n = xs.shape[0]
    F = cdf(xs)
    up = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(up - F), np.max(F - lo)))


def ks_crit_1pct(n: int) -> float:
    # asymptotic one-sample critical value at alpha = 0.01
    return math.sqrt(-0.5 * math.log(0.005)) / math.sqrt(n)


# ---------------------------------------------------------------------------
# streams

def test_stream_determinism_and_separation():
    a = StreamKey(42, 7, Role.POINT).generator().uniform(size=8)
    b = StreamKey(42, 7, Role.POINT).generator().uniform(size=8)
    assert np.array_equal(a, b)
    c = StreamKey(42, 7, Role.PLANE).generator().uniform(size=8)
    d = StreamKey(42, 8, Role.POINT).generator().uniform(size=8)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    with pytest.raises(ConfigError):
        StreamKey(42, -1, Role.POINT).generator()


def test_sample_points_reproducible():
    rho = UniformOnBody(DISK)
    p1 = sample_points(rho, 50, StreamKey(3, 0, Role.POINT).generator())
    p2 = sample_points(rho, 50, StreamKey(3, 0, Role.POINT).generator())
    assert np.array_equal(p1, p2)


# ---------------------------------------------------------------------------
# point densities

def test_uniform_disk_radius_moment():
    # E |x|^2 = int_0^1 r^2 (2 r) dr = 1/2; Var(|x|^2) = 1/3 - 1/4 = 1/12
    pts = sample_points(UniformOnBody(DISK), 100_000, StreamKey(11, 0, Role.POINT).generator())
    m = float(np.mean(np.sum(pts**2, axis=1)))
    se = math.sqrt(1.0 / 12.0 / 100_000)
    assert abs(m - 0.5) < 3.3 * se
    assert np.all(contains(DISK, pts))


def test_uniform_square_mean():
    # side-2 square centered at (1/2, 1/2); o stays interior as required
    sq = PolytopeV(np.array([[-0.5, -0.5], [1.5, -0.5], [1.5, 1.5], [-0.5, 1.5]]))
    pts = sample_points(UniformOnBody(sq), 100_000, StreamKey(12, 0, Role.POINT).generator())
    se = math.sqrt(4.0 / 12.0 / 100_000)
    assert abs(float(pts[:, 0].mean()) - 0.5) < 3.3 * se
    assert abs(float(pts[:, 1].mean()) - 0.5) < 3.3 * se


def test_uniform_disk_radius_cdf():
    pts = sample_points(UniformOnBody(DISK), 100_000, StreamKey(13, 0, Role.POINT).generator())
    r = np.linalg.norm(pts, axis=1)
    stat = ks_one_sample(r, lambda x: x**2)
    assert stat < ks_crit_1pct(100_000)


def test_radial_power_density():
    rho = RadialPower(DISK, 2.0)
    # normalization: c * int r^2 over the disk = c * 2 pi / 4
    assert rho.coeff == pytest.approx(2.0 / math.pi, rel=1e-10)
    pts = sample_points(rho, 50_000, StreamKey(14, 0, Role.POINT).generator())
    r = np.linalg.norm(pts, axis=1)
    stat = ks_one_sample(r, lambda x: x**4)
    assert stat < ks_crit_1pct(50_000)


def test_radial_power_guards():
    with pytest.raises(ConfigError):
        RadialPower(DISK, -2.0)  # not integrable at o
    with pytest.raises(ConfigError):
        RadialPower(DISK, 2.0, coeff=1.0)  # implied mass far from 1
    neg = RadialPower(DISK, -0.5)
    with pytest.raises(EnvelopeTooLoose):
        sample_points(neg, 10, StreamKey(0, 0, Role.POINT).generator())
    # exact coefficient within 1% passes and is rescaled exactly
    ok = RadialPower(DISK, 2.0, coeff=2.0 / math.pi * 1.005)
    assert ok.coeff == pytest.approx(2.0 / math.pi, rel=1e-9)


def test_orthant_masses():
    masses2 = UniformOnBody(DISK).orthant_masses()
    assert np.allclose(masses2, 0.25, atol=1e-15)
    masses3 = UniformOnBody(Ball(np.zeros(3), 1.0)).orthant_masses()
    assert np.allclose(masses3, 0.125, atol=1e-12)
    # shifted square: quadrant areas 2.25, 0.75, 0.25, 0.75 out of 4, in the
    # quadrant order (+,+), (-,+), (-,-), (+,-)
    off = UniformOnBody(PolytopeV(np.array([[-0.5, -0.5], [1.5, -0.5], [1.5, 1.5], [-0.5, 1.5]])))
    m = off.orthant_masses()
    assert np.allclose(m, [0.5625, 0.1875, 0.0625, 0.1875], atol=5e-4)
    assert float(m.sum()) == pytest.approx(1.0, abs=1e-3)


def test_bad_envelope_detected():
    class Lying:
        body = DISK

        def pdf(self, pts):
            return np.full(np.atleast_2d(pts).shape[0], 1.0 / math.pi)

        def envelope(self):
            return 0.1 / math.pi  # below the true sup

    with pytest.raises(NumericalError):
        sample_points(Lying(), 100, StreamKey(0, 0, Role.POINT).generator())


# ---------------------------------------------------------------------------
# induced polar density

def test_induced_polar_support_and_pointwise_value():
    dens = InducedPolar(DISK, Constant(1.0))
    # density (2 pi)^{-1} |x|^{-3} on the annulus 1/2 <= |x| <= 1
    at_edge = float(dens.pdf(np.array([[1.0, 0.0]]))[0])
    assert at_edge == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-12)
    mid = float(dens.pdf(np.array([[0.8, 0.0]]))[0])
    assert mid == pytest.approx(0.8**-3 / (2.0 * math.pi), rel=1e-12)
    assert float(dens.pdf(np.array([[0.3, 0.0]]))[0]) == 0.0
    assert float(dens.pdf(np.array([[1.2, 0.0]]))[0]) == 0.0

    pts = sample_points(dens, 10_000, StreamKey(15, 0, Role.POINT).generator())
    r = np.linalg.norm(pts, axis=1)
    assert np.all(r >= 0.5 - 1e-12)
    assert np.all(r <= 1.0 + 1e-12)
    # radial law: P(|x| <= s) = int_{1/2}^s r^{-2} dr = 2 - 1/s
    stat = ks_one_sample(r, lambda x: 2.0 - 1.0 / x)
    assert stat < ks_crit_1pct(10_000)


def test_induced_polar_mass_numeric():
    # numeric mass by polar quadrature: sum_u w int pdf(r u) r^{d-1} dr.
    # Integrate each density over its exact radial support (the band maps to
    # r = 1/s), nudged inward so the jump at the edges is never straddled.
    cases = [
        (Constant(1.0), 0.5, 1.0),
        (BandIndicator(1.0, 1.5, 2.0), 1.0 / 1.5, 1.0),
    ]
    rule = sphere_rule(2, 256)
    for q, r_lo, r_hi in cases:
        dens = InducedPolar(DISK, q)
        rs = np.linspace(r_lo + 1e-9, r_hi - 1e-9, 4001)
        total = 0.0
        for u, w in zip(rule.nodes, rule.weights):
            vals = dens.pdf(rs[:, None] * u[None, :]) * rs
            total += w * float(np.trapezoid(vals, rs))
        assert total == pytest.approx(1.0, abs=1e-6)


def test_induced_polar_helper_and_validation():
    dens = induced_polar_density(DISK, Constant(1.0))
    assert isinstance(dens, InducedPolar)
    with pytest.raises(ConfigError):
        InducedPolar(DISK, Constant(0.5))  # band mass 1/2, not a probability


# ---------------------------------------------------------------------------
# hyperplane measure and sampler

def test_mu_q_mass_closed_forms():
    rule = sphere_rule(2, 128)
    assert mu_q_mass(DISK, Constant(1.0), rule) == pytest.approx(1.0, abs=1e-15)
    assert mu_q_mass(DISK, Constant(2.0), rule) == pytest.approx(2.0, abs=1e-14)
    # half band at doubled level: (1/2pi) * 2pi * int_1^{1.5} 2 dt = 1
    assert mu_q_mass(DISK, BandIndicator(1.0, 1.5, 2.0), rule) == pytest.approx(1.0, abs=1e-12)
    ell_rule = sphere_rule(3, 32)
    ball3 = Ball(np.zeros(3), 1.0)
    assert mu_q_mass(ball3, Constant(1.0), ell_rule) == pytest.approx(1.0, abs=1e-12)


def test_weight_band_validation():
    rule = sphere_rule(2, 128)
    validate_hyperplane_weight(DISK, Constant(1.0), rule)
    with pytest.raises(ConfigError):
        validate_hyperplane_weight(DISK, Constant(0.9), rule)  # mass 0.9
    # mass exactly 1 but vanishing at the inner band edge h_K = 1
    dead_inner = BandIndicator(1.2, 2.0, 1.25)
    assert mu_q_mass(DISK, dead_inner, rule) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ConfigError):
        validate_hyperplane_weight(DISK, dead_inner, rule)


def test_hyperplane_sampler_band_exact():
    rule = sphere_rule(2, 128)
    sampler = HyperplaneSampler(DISK, Constant(1.0), rule)
    rng = StreamKey(21, 0, Role.PLANE).generator()
    normals, offsets = sampler.sample(100_000, rng)
    h = support_vec(DISK, normals)
    resid = offsets - h
    assert np.all(resid >= 0.0)
    assert np.all(resid <= 1.0)
    # K subset of every sampled halfspace and each plane meets K_1
    assert np.min(offsets - h) >= -1e-12
    assert np.max(offsets - (h + 1.0)) <= 1e-12
    # offsets uniform over the band for constant q
    stat = ks_one_sample(resid, lambda x: x)
    assert stat < ks_crit_1pct(resid.shape[0])
    # directions are isotropic: coordinate means vanish
    se = math.sqrt(0.5 / normals.shape[0])
    assert abs(float(normals[:, 0].mean())) < 3.3 * se
    assert abs(float(normals[:, 1].mean())) < 3.3 * se


def test_hyperplane_sampler_power_band_law():
    # q(t) = (2/3) t on the band [1, 2]: mass 1, offset cdf (t^2-1)/3
    q = PowerT(2.0 / 3.0, 1.0)
    rule = sphere_rule(2, 128)
    assert mu_q_mass(DISK, q, rule) == pytest.approx(1.0, abs=1e-12)
    sampler = HyperplaneSampler(DISK, q, rule)
    rng = StreamKey(22, 0, Role.PLANE).generator()
    _, offsets = sampler.sample(50_000, rng)
    stat = ks_one_sample(offsets, lambda t: (t * t - 1.0) / 3.0)
    assert stat < ks_crit_1pct(50_000)


def test_hyperplane_sampler_reproducible():
    rule = sphere_rule(2, 64)
    sampler = HyperplaneSampler(DISK, Constant(1.0), rule)
    n1, o1 = sampler.sample(200, StreamKey(23, 4, Role.PLANE).generator())
    n2, o2 = sampler.sample(200, StreamKey(23, 4, Role.PLANE).generator())
    assert np.array_equal(n1, n2)
    assert np.array_equal(o1, o2)


def test_induced_polar_envelope_covers_density():
    dens = InducedPolar(DISK, BandIndicator(1.0, 1.5, 2.0))
    rs = np.linspace(0.4, 1.1, 500)
    us = np.column_stack([np.cos(np.linspace(0, 2 * np.pi, 37)), np.sin(np.linspace(0, 2 * np.pi, 37))])
    env = dens.envelope()
    for u in us:
        assert np.all(dens.pdf(rs[:, None] * u[None, :]) <= env + 1e-12)
    # sampling from the band-limited density stays inside its support
    pts = sample_points(dens, 2000, StreamKey(24, 0, Role.POINT).generator())
    s = 1.0 / np.linalg.norm(pts, axis=1)
    assert np.all(s >= 1.0 - 1e-12)
    assert np.all(s <= 1.5 + 1e-12)


# ---------------------------------------------------------------------------
# single-draw wrappers

def test_sample_point_single_draw():
    rho = UniformOnBody(DISK)
    x = sample_point(DISK, rho, StreamKey(31, 0, Role.POINT))
    assert x.shape == (2,)
    assert contains(DISK, x[None, :])[0]
    again = sample_point(DISK, rho, StreamKey(31, 0, Role.POINT))
    assert np.array_equal(x, again)
    other = sample_point(DISK, rho, StreamKey(31, 1, Role.POINT))
    assert not np.array_equal(x, other)


def test_sample_point_dimension_mismatch():
    ball3 = Ball(np.zeros(3), 1.0)
    with pytest.raises(ConfigError):
        sample_point(ball3, UniformOnBody(DISK), StreamKey(31, 0, Role.POINT))


def test_sample_hyperplane_single_draw():
    hp = sample_hyperplane(DISK, Constant(1.0), StreamKey(32, 0, Role.PLANE))
    assert isinstance(hp, Hyperplane)
    assert float(np.linalg.norm(hp.u)) == pytest.approx(1.0, abs=1e-12)
    h = float(support_vec(DISK, hp.u[None, :])[0])
    assert h - 1e-12 <= hp.t <= h + 1.0 + 1e-12
    again = sample_hyperplane(DISK, Constant(1.0), StreamKey(32, 0, Role.PLANE))
    assert np.array_equal(hp.u, again.u)
    assert hp.t == again.t
    other = sample_hyperplane(DISK, Constant(1.0), StreamKey(32, 5, Role.PLANE))
    assert hp.t != other.t or not np.array_equal(hp.u, other.u)


def test_sphere_area_helper():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
