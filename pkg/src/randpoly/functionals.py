"""Geometric functionals: mean width, weighted mean width, weighted volume,
the dimensional constant of the limit theorems, and their right-hand sides.

Weight families carry closed-form inner integrals so the outer spherical
quadrature is the only numeric step. The weighted mean width uses the oriented
integral int_0^h q(s, u) ds, which is negative when h < 0; weights stay
nonnegative by extending power weights evenly in s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError, Unsupported
from .geom import Ball, Ellipsoid, body_dim, radial_vec, support_vec
from .quadrature import SphereRule, boundary_integral


def kappa_d(d: int) -> float:
    """Volume of the d-dimensional unit ball."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def sphere_area(d: int) -> float:
    """Surface measure of S^{d-1}, equal to d * kappa_d."""
    return d * kappa_d(d)


def c_d_constant(d: int) -> float:
    """Dimensional constant in front of the n^{-2/(d+1)} limits.

    c_3 = sqrt(pi); c_2 = pi^{2/3} Gamma(2/3) / 3^{1/3} = 2.0139529...
    """
    if d < 2:
        raise ConfigError("the limit constant is defined for d >= 2")
    dk = d * kappa_d(d)
    return (
        dk ** (2.0 / (d + 1))
        * math.gamma(2.0 / (d + 1))
        / ((d + 1) ** ((d - 1.0) / (d + 1)) * kappa_d(d - 1) ** (2.0 / (d + 1)))
    )


# ---------------------------------------------------------------------------
# weight families

@dataclass(frozen=True)
class Constant:
    c: float = 1.0

    def __post_init__(self):
        if self.c < 0:
            raise ConfigError("weight level must be nonnegative")

    def value(self, s, nodes):
        return np.broadcast_to(float(self.c), np.shape(s)).copy()

    def integral0(self, h, nodes):
        """Oriented int_0^h q ds."""
        return self.c * np.asarray(h, dtype=float)

    def radial_moment(self, r, nodes, d):
        """int_0^r t^{d-1} q(t, u) dt for r >= 0."""
        r = np.asarray(r, dtype=float)
        return self.c * r**d / d


@dataclass(frozen=True)
class PowerT:
    """q(s, u) = c * |s|^alpha; even in s so the weight stays nonnegative."""

    c: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.c < 0:
            raise ConfigError("weight level must be nonnegative")
        if self.alpha < 0:
            raise ConfigError("PowerT exponent must be nonnegative")

    def value(self, s, nodes):
        return self.c * np.abs(np.asarray(s, dtype=float)) ** self.alpha

    def integral0(self, h, nodes):
        h = np.asarray(h, dtype=float)
        return self.c * np.sign(h) * np.abs(h) ** (self.alpha + 1.0) / (self.alpha + 1.0)

    def radial_moment(self, r, nodes, d):
        r = np.asarray(r, dtype=float)
        return self.c * r ** (d + self.alpha) / (d + self.alpha)


@dataclass(frozen=True)
class BandIndicator:
    """q(s, u) = c on [lo, hi], zero elsewhere."""

    lo: float
    hi: float
    c: float = 1.0

    def __post_init__(self):
        if self.c < 0:
            raise ConfigError("weight level must be nonnegative")
        if self.hi < self.lo:
            raise ConfigError("BandIndicator needs lo <= hi")

    def value(self, s, nodes):
        s = np.asarray(s, dtype=float)
        return np.where((s >= self.lo) & (s <= self.hi), float(self.c), 0.0)

    def integral0(self, h, nodes):
        h = np.asarray(h, dtype=float)
        return self.c * (np.clip(h, self.lo, self.hi) - np.clip(0.0, self.lo, self.hi))

    def radial_moment(self, r, nodes, d):
        r = np.asarray(r, dtype=float)
        lo = max(self.lo, 0.0)
        hi = max(self.hi, lo)
        upper = np.clip(r, lo, hi)
        return self.c * (upper**d - lo**d) / d


@dataclass(frozen=True)
class DirectionalWeight:
    """q(s, u) = table(u): constant in s, direction-dependent via a closure.

    ``table`` maps an (m, d) array of directions to (m,) nonnegative values.
    """

    table: object

    def _t(self, nodes):
        vals = np.asarray(self.table(np.atleast_2d(nodes)), dtype=float)
        if np.any(vals < 0):
            raise ConfigError("directional weight table must be nonnegative")
        return vals

    def value(self, s, nodes):
        return np.broadcast_to(self._t(nodes), np.shape(s)).copy()

    def integral0(self, h, nodes):
        return self._t(nodes) * np.asarray(h, dtype=float)

    def radial_moment(self, r, nodes, d):
        r = np.asarray(r, dtype=float)
        return self._t(nodes) * r**d / d


Weight = Constant | PowerT | BandIndicator | DirectionalWeight


def band_integral(q, lo, hi, nodes):
    """int_lo^hi q(s, u) ds per node (oriented)."""
    return q.integral0(hi, nodes) - q.integral0(lo, nodes)


# ---------------------------------------------------------------------------
# width and volume functionals

def mean_width(h_vals: np.ndarray, rule: SphereRule) -> float:
    """W = (2 / (d kappa_d)) * int h dS from precomputed support values."""
    d = rule.dim
    return 2.0 / sphere_area(d) * float(rule.weights @ h_vals)


def body_mean_width(body, rule: SphereRule) -> float:
    return mean_width(support_vec(body, rule.nodes), rule)


def weighted_mean_width(h_vals: np.ndarray, q, rule: SphereRule) -> float:
    """W_q = (2 / (d kappa_d)) * int int_0^{h(u)} q(s, u) ds dS."""
    inner = q.integral0(h_vals, rule.nodes)
    return 2.0 / sphere_area(rule.dim) * float(rule.weights @ inner)


def body_weighted_mean_width(body, q, rule: SphereRule) -> float:
    return weighted_mean_width(support_vec(body, rule.nodes), q, rule)


def clipped_weighted_volume(rho_vals: np.ndarray, rho_outer: np.ndarray, lam, rule: SphereRule) -> float:
    """V_lambda of the star body min(rho, rho_outer) around the origin.

    rho values may be +inf (unbounded rays of a halfspace intersection); the
    outer clip must be finite.
    """
    if not np.all(np.isfinite(rho_outer)):
        raise NumericalError("outer clipping radius must be finite on all nodes")
    r = np.minimum(rho_vals, rho_outer)
    moments = lam.radial_moment(r, rule.nodes, rule.dim)
    return float(rule.weights @ moments)


def body_weighted_volume(body, lam, rule: SphereRule) -> float:
    rho = radial_vec(body, rule.nodes)
    return clipped_weighted_volume(rho, rho, lam, rule)


# ---------------------------------------------------------------------------
# limit right-hand sides

INSCRIBED_MEAN_WIDTH = "inscribed_mean_width"
CIRCUMSCRIBED_VOLUME = "circumscribed_volume"


def limit_rhs(kind: str, body, q, rule: SphereRule, rho_density=None, lam=None) -> float:
    """Right-hand side of the scaled limit for the requested model.

    inscribed_mean_width:
        (2 c_d / (d kappa_d)^{(d+3)/(d+1)}) *
        int_dK kappa^{(d+2)/(d+1)} q(h_K(n(x)), n(x)) rho(x)^{-2/(d+1)} dH
    circumscribed_volume:
        c_d * int_dK q(h_K(n(x)), n(x))^{-2/(d+1)} lambda(|x|, x/|x|) kappa^{-1/(d+1)} dH

    The body must be smooth (ball or ellipsoid) so curvature integrals are
    available; densities and weights must be positive where they enter with a
    negative power.
    """
    if not isinstance(body, (Ball, Ellipsoid)):
        raise Unsupported("limit_rhs needs a smooth body (ball or ellipsoid)")
    d = body_dim(body)
    h_on_nodes = support_vec(body, rule.nodes)
    if kind == INSCRIBED_MEAN_WIDTH:
        if rho_density is None:
            raise ConfigError("inscribed limit needs a point density")

        def g(xs, normals, kap):
            qv = q.value(h_on_nodes, normals)
            if np.any(qv <= 0):
                raise NumericalError("width weight vanishes at the support boundary")
            pv = np.asarray(rho_density.pdf(xs), dtype=float)
            if np.any(pv <= 0):
                raise NumericalError("point density vanishes on the boundary")
            return kap ** ((d + 2.0) / (d + 1.0)) * qv * pv ** (-2.0 / (d + 1.0))

        front = 2.0 * c_d_constant(d) / sphere_area(d) ** ((d + 3.0) / (d + 1.0))
        return front * boundary_integral(body, g, rule)
    if kind == CIRCUMSCRIBED_VOLUME:
        if lam is None:
            raise ConfigError("circumscribed limit needs a volume weight")

        def g(xs, normals, kap):
            qv = q.value(h_on_nodes, normals)
            if np.any(qv <= 0):
                raise NumericalError("hyperplane weight vanishes at the band inner edge")
            norms = np.linalg.norm(xs, axis=1)
            lv = lam.value(norms, xs / norms[:, None])
            return qv ** (-2.0 / (d + 1.0)) * lv * kap ** (-1.0 / (d + 1.0))

        return c_d_constant(d) * boundary_integral(body, g, rule)
    raise ConfigError(f"unknown limit kind {kind!r}")
