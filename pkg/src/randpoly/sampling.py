"""Random input generation for both polytope models.

Streams are counter-based (Philox) and keyed by (seed, trial, role), so any
trial can be regenerated in isolation and concurrent schedules cannot change
what a trial sees. Rejection samplers draw fixed-size proposal chunks, which
keeps the consumed stream a pure function of the key.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ConfigError, EnvelopeTooLoose, NumericalError
from .functionals import band_integral, sphere_area
from .geom import (
    Hyperplane,
    ParallelBody,
    body_dim,
    bounding_box,
    contains,
    polar,
    support_vec,
    volume,
)

_CHUNK = 4096  # cap on proposals per rejection round
_ENVELOPE_INFLATION = 1.05
_SCAN_POINTS = 10_000  # grid size for envelope scans
MIN_ACCEPT_RATE = 1e-4
MIN_PROPOSALS_BEFORE_GIVING_UP = 1_000_000


class Role(IntEnum):
    POINT = 0
    PLANE = 1
    AUX = 2


@dataclass(frozen=True)
class StreamKey:
    seed: int
    trial: int
    role: Role

    def generator(self) -> np.random.Generator:
        if self.trial < 0:
            raise ConfigError("trial index must be nonnegative")
        key = np.array(
            [np.uint64(self.seed & (2**64 - 1)), np.uint64((self.trial << 2) | int(self.role))],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# point densities

class UniformOnBody:
    """Uniform probability density on a convex body."""

    def __init__(self, body):
        self.body = body
        self._inv_vol = 1.0 / volume(body)

    def pdf(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.where(contains(self.body, pts), self._inv_vol, 0.0)

    def envelope(self) -> float:
        return self._inv_vol * _ENVELOPE_INFLATION

    def orthant_masses(self, rule_m: int = 720) -> np.ndarray:
        return _orthant_masses_radial(self.body, lambda r, nodes, d: r**d / d, rule_m, self._inv_vol)


class RadialPower:
    """Density proportional to |x|^beta on a convex body with o interior.

    If ``coeff`` is given, the implied total mass must come out within 1% of
    one (then the density is rescaled to integrate to one exactly); otherwise
    the normalizing constant is computed here.
    """

    def __init__(self, body, beta: float, coeff: float | None = None, rule_m: int = 2048):
        if beta <= -body_dim(body):
            raise ConfigError("beta too negative: density not integrable at the origin")
        self.body = body
        self.beta = float(beta)
        from .quadrature import sphere_rule

        d = body_dim(body)
        rule = sphere_rule(d, rule_m)
        from .geom import radial_vec

        rho = radial_vec(body, rule.nodes)
        raw_mass = float(rule.weights @ (rho ** (d + beta) / (d + beta)))
        if coeff is not None:
            implied = coeff * raw_mass
            if abs(implied - 1.0) > 0.01:
                raise ConfigError(f"radial power coefficient gives mass {implied}, expected 1")
            self.coeff = coeff / implied  # exact rescale
        else:
            self.coeff = 1.0 / raw_mass
        self._sup_norm = float(np.max(rho))

    def pdf(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        inside = contains(self.body, pts)
        with np.errstate(divide="ignore"):
            vals = self.coeff * r**self.beta
        if self.beta < 0:
            vals = np.where(r > 0, vals, np.inf)
        return np.where(inside, vals, 0.0)

    def envelope(self) -> float:
        if self.beta < 0:
            raise EnvelopeTooLoose("negative radial exponents have an unbounded density")
        return self.coeff * self._sup_norm**self.beta * _ENVELOPE_INFLATION

    def orthant_masses(self, rule_m: int = 720) -> np.ndarray:
        b = self.beta
        return _orthant_masses_radial(
            self.body, lambda r, nodes, d: r ** (d + b) / (d + b), rule_m, self.coeff
        )


class InducedPolar:
    """Pushforward of the hyperplane measure for (K, q) under polarity.

    Supported on K* minus the polar of the parallel body K_1, with density
    (d kappa_d)^{-1} q(1/|x|, x/|x|) |x|^{-(d+1)}. Its mass equals the
    hyperplane measure's mass, which a valid q makes 1; the stored density is
    rescaled by the numeric mass so it integrates to one exactly.
    """

    def __init__(self, inner_body, q, rule_m: int = 2048):
        from .quadrature import sphere_rule

        self.k_body = inner_body
        self.q = q
        d = body_dim(inner_body)
        self.d = d
        self.body = polar(inner_body)  # rejection box lives on K*
        rule = sphere_rule(d, rule_m)
        mass = mu_q_mass(inner_body, q, rule)
        if abs(mass - 1.0) > 0.01:
            raise ConfigError(f"hyperplane weight has band mass {mass}, expected 1")
        self._norm = mass
        h1 = support_vec(inner_body, rule.nodes) + 1.0
        t_grid = np.linspace(0.0, 1.0, 64)
        h0 = h1 - 1.0
        band_vals = q.value(h0[None, :] + t_grid[:, None], rule.nodes)
        self._q_sup = float(np.max(band_vals))
        self._h1_sup = float(np.max(h1))

    def pdf(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        out = np.zeros(pts.shape[0])
        ok = r > 1e-300
        if not np.any(ok):
            return out
        u = pts[ok] / r[ok, None]
        h = support_vec(self.k_body, u)
        s = 1.0 / r[ok]
        in_band = (s >= h) & (s <= h + 1.0)
        qv = self.q.value(s, u)
        dens = qv * r[ok] ** (-(self.d + 1.0)) / (sphere_area(self.d) * self._norm)
        out[ok] = np.where(in_band, dens, 0.0)
        return out

    def envelope(self) -> float:
        return (
            self._q_sup
            * self._h1_sup ** (self.d + 1.0)
            / (sphere_area(self.d) * self._norm)
            * _ENVELOPE_INFLATION
        )


def _orthant_masses_radial(body, moment, rule_m, scale_coeff) -> np.ndarray:
    """Masses of a radial density over the 2^d coordinate orthants.

    Orthants are radial cones, so each one gets its own angular sub-rule with
    nodes strictly interior to the orthant; boundary overlap carries no mass.
    """
    from .geom import radial_vec

    d = body_dim(body)
    masses = []
    if d == 2:
        per = max(90, rule_m // 4)
        for k in range(4):
            theta = (k + (np.arange(per) + 0.5) / per) * (np.pi / 2.0)
            nodes = np.column_stack([np.cos(theta), np.sin(theta)])
            w = np.full(per, (np.pi / 2.0) / per)
            rho = radial_vec(body, nodes)
            masses.append(scale_coeff * float(w @ moment(rho, nodes, d)))
        return np.array(masses)
    if d == 3:
        from numpy.polynomial.legendre import leggauss

        mq = max(24, rule_m // 16)
        xs, ws = leggauss(mq)  # reused per octant on [0, 1] and [pi/2] wedges
        cos_t = 0.5 * (xs + 1.0)  # cos(theta) in (0, 1)
        wt = 0.5 * ws
        for sz in (1.0, -1.0):
            for k in range(4):
                phi0 = k * np.pi / 2.0
                phi = phi0 + (np.pi / 2.0) * (0.5 * (xs + 1.0))
                wp = (np.pi / 2.0) * 0.5 * ws
                st = np.sqrt(1.0 - cos_t**2)
                nodes = np.empty((mq * mq, 3))
                w = np.empty(mq * mq)
                idx = 0
                for i in range(mq):
                    nodes[idx : idx + mq, 0] = st[i] * np.cos(phi)
                    nodes[idx : idx + mq, 1] = st[i] * np.sin(phi)
                    nodes[idx : idx + mq, 2] = sz * cos_t[i]
                    w[idx : idx + mq] = wt[i] * wp
                    idx += mq
                rho = radial_vec(body, nodes)
                masses.append(scale_coeff * float(w @ moment(rho, nodes, d)))
        return np.array(masses)
    raise ConfigError("orthant masses implemented for d in {2, 3}")


# ---------------------------------------------------------------------------
# samplers

def _round_size(remaining: int, rate_hint: float) -> int:
    """Proposal count for one rejection round.

    A deterministic function of the demand and a static rate estimate, so the
    stream consumed is reproducible for a given sampler configuration.
    """
    need = int(remaining / min(max(rate_hint, 1e-3), 1.0) * 1.3) + 16
    return min(_CHUNK, need)


def sample_points(density, n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent draws from ``density`` by rejection from its bounding box."""
    body = density.body
    lo, hi = bounding_box(body)
    d = lo.shape[0]
    env = density.envelope()
    box_vol = float(np.prod(hi - lo))
    rate_hint = 1.0 / (env * box_vol)  # pdf integrates to 1
    out = np.empty((n, d))
    got = 0
    proposed = 0
    while got < n:
        k = _round_size(n - got, rate_hint)
        pts = rng.uniform(lo, hi, size=(k, d))
        v = rng.uniform(0.0, 1.0, size=k)
        dens = density.pdf(pts)
        if np.any(dens > env):
            raise NumericalError("density exceeds its rejection envelope")
        acc = pts[v * env < dens]
        proposed += k
        take = min(n - got, acc.shape[0])
        out[got : got + take] = acc[:take]
        got += take
        if proposed >= MIN_PROPOSALS_BEFORE_GIVING_UP and got / proposed < MIN_ACCEPT_RATE:
            raise EnvelopeTooLoose(
                f"acceptance rate {got / proposed:.2e} after {proposed} proposals"
            )
    return out


def sample_point(body, rho, key: StreamKey) -> np.ndarray:
    """One exact draw from rho on the body, addressed by its stream key.

    Wrapper over sample_points for callers that vectorize over keys instead
    of over points per key.
    """
    if body_dim(body) != body_dim(rho.body):
        raise ConfigError("body and density dimensions differ")
    return sample_points(rho, 1, key.generator())[0]


def mu_q_mass(body, q, rule) -> float:
    """Total mass of the hyperplane measure: the q-integral over the band of
    width one outside the support hyperplanes, normalized by the sphere area."""
    h = support_vec(body, rule.nodes)
    inner = band_integral(q, h, h + 1.0, rule.nodes)
    return float(rule.weights @ inner) / sphere_area(rule.dim)


def validate_hyperplane_weight(body, q, rule) -> float:
    """Config-time gate: band mass 1 within 1e-3 and q positive on the inner
    band edge (else the sampled model or the limit formula degenerates)."""
    mass = mu_q_mass(body, q, rule)
    if abs(mass - 1.0) > 1e-3:
        raise ConfigError(f"hyperplane weight mass {mass:.6f} must be 1 within 1e-3")
    h = support_vec(body, rule.nodes)
    if np.any(q.value(h, rule.nodes) <= 0.0):
        raise ConfigError("hyperplane weight vanishes somewhere on the support band edge")
    return mass


class HyperplaneSampler:
    """Draws hyperplanes tangent-band distributed around a body.

    Directions are uniform on the sphere, offsets uniform on the unit band
    outside the support value, thinned by rejection against q. The envelope
    q_max comes from a coarse grid scan of the band, inflated by 5%.
    """

    def __init__(self, body, q, rule):
        validate_hyperplane_weight(body, q, rule)
        self.body = body
        self.q = q
        self.d = body_dim(body)
        n_dirs = max(64, _SCAN_POINTS // 100)
        from .quadrature import sphere_rule

        scan = sphere_rule(self.d, n_dirs if self.d == 2 else 32)
        h = support_vec(body, scan.nodes)
        t_grid = np.linspace(0.0, 1.0, _SCAN_POINTS // scan.count + 2)
        vals = q.value(h[None, :] + t_grid[:, None], scan.nodes)
        self.q_max = float(np.max(vals)) * _ENVELOPE_INFLATION
        if self.q_max <= 0:
            raise ConfigError("hyperplane weight is zero on the whole band")

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Returns (normals (n, d), offsets (n,))."""
        normals = np.empty((n, self.d))
        offsets = np.empty(n)
        rate_hint = 1.0 / self.q_max  # band q averages to the unit mass
        got = 0
        proposed = 0
        while got < n:
            k = _round_size(n - got, rate_hint)
            g = rng.standard_normal(size=(k, self.d))
            nrm = np.linalg.norm(g, axis=1)
            ok = nrm > 1e-12
            u = g[ok] / nrm[ok, None]
            tband = rng.uniform(0.0, 1.0, size=k)[ok]
            v = rng.uniform(0.0, 1.0, size=k)[ok]
            h = support_vec(self.body, u)
            t = h + tband
            qv = self.q.value(t, u)
            if np.any(qv > self.q_max):
                raise NumericalError("hyperplane weight exceeds its scan envelope")
            keep = v * self.q_max < qv
            acc_u, acc_t = u[keep], t[keep]
            proposed += k
            take = min(n - got, acc_u.shape[0])
            normals[got : got + take] = acc_u[:take]
            offsets[got : got + take] = acc_t[:take]
            got += take
            if proposed >= MIN_PROPOSALS_BEFORE_GIVING_UP and got / proposed < MIN_ACCEPT_RATE:
                raise EnvelopeTooLoose(
                    f"acceptance rate {got / proposed:.2e} after {proposed} proposals"
                )
        return normals, offsets


def sample_hyperplane(body, q, key: StreamKey, rule_m: int = 512) -> Hyperplane:
    """One tangent-band hyperplane draw; H^-(u, t) always contains the body.

    Builds a sampler per call, so batch callers should hold a
    HyperplaneSampler instead.
    """
    from .quadrature import sphere_rule

    rule = sphere_rule(body_dim(body), rule_m)
    normals, offsets = HyperplaneSampler(body, q, rule).sample(1, key.generator())
    return Hyperplane(normals[0], float(offsets[0]))


def induced_polar_density(body, q, rule_m: int = 2048) -> InducedPolar:
    """Density of the polar image of the hyperplane model's random planes."""
    return InducedPolar(body, q, rule_m)


def parallel_body(body, r: float = 1.0) -> ParallelBody:
    return ParallelBody(body, r)
