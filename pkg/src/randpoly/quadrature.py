"""Quadrature on the unit sphere and on smooth convex boundaries.

d=2 uses m equally spaced angles with equal weights (trapezoid on the circle,
spectrally accurate for smooth periodic integrands). d=3 uses a product rule:
m Gauss-Legendre nodes in cos(theta) times 2m equispaced longitudes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, NumericalError, Unsupported
from .geom import Ball, Ellipsoid, boundary_batch

MIN_NODES = 8


@dataclass(frozen=True, eq=False)
class SphereRule:
    """Nodes (m, d) on S^{d-1} and positive weights summing to the sphere area."""

    dim: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def count(self) -> int:
        return self.nodes.shape[0]


def sphere_rule(dim: int, m: int) -> SphereRule:
    """Build the standard rule with resolution parameter m (m >= 8)."""
    if m < MIN_NODES:
        raise ConfigError(f"rule resolution m={m} below minimum {MIN_NODES}")
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(m) / m
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(m, 2.0 * np.pi / m)
        return SphereRule(2, nodes, weights)
    if dim == 3:
        x, w = leggauss(m)  # x = cos(theta) on [-1, 1]
        phi = 2.0 * np.pi * np.arange(2 * m) / (2 * m)
        sin_t = np.sqrt(1.0 - x**2)
        cos_p, sin_p = np.cos(phi), np.sin(phi)
        nodes = np.empty((m * 2 * m, 3))
        weights = np.empty(m * 2 * m)
        idx = 0
        for k in range(m):
            nodes[idx : idx + 2 * m, 0] = sin_t[k] * cos_p
            nodes[idx : idx + 2 * m, 1] = sin_t[k] * sin_p
            nodes[idx : idx + 2 * m, 2] = x[k]
            weights[idx : idx + 2 * m] = w[k] * (2.0 * np.pi / (2 * m))
            idx += 2 * m
        return SphereRule(3, nodes, weights)
    raise Unsupported("sphere rules implemented for d in {2, 3}")


def integrate_sphere(f, rule: SphereRule) -> float:
    """Integral of f over S^{d-1} with respect to surface measure.

    f takes the (m, d) node array and returns per-node values (broadcasting
    scalars is fine).
    """
    vals = np.broadcast_to(np.asarray(f(rule.nodes), dtype=float), (rule.count,))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise NumericalError(f"non-finite integrand value {vals[j]} at node {rule.nodes[j]}")
    return float(rule.weights @ vals)


def boundary_integral(body, g, rule: SphereRule) -> float:
    """Integral of g over the boundary of a ball or ellipsoid.

    Parametrizes the boundary by the inverse Gauss map of the rule nodes, so
    the surface element is 1/kappa times the spherical one. g takes
    (points (m, d), normals (m, d), kappas (m,)) and returns per-node values.
    """
    if not isinstance(body, (Ball, Ellipsoid)):
        raise Unsupported("boundary_integral needs a smooth body (ball or ellipsoid)")
    xs, normals, kap = boundary_batch(body, rule.nodes)
    if np.any(kap < 1e-14):
        raise NumericalError("vanishing curvature on a quadrature node")
    vals = np.broadcast_to(np.asarray(g(xs, normals, kap), dtype=float), (rule.count,))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise NumericalError(f"non-finite boundary integrand at x={xs[j]}")
    return float(rule.weights @ (vals / kap))


def curvature_integral(body, p: float, rule: SphereRule) -> float:
    """Integral of kappa^p over the boundary."""
    return boundary_integral(body, lambda x, n, k: k**p, rule)
