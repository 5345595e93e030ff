"""Convex body primitives: support and radial functions, polar bodies,
boundary curvature, and 2D halfspace vertex enumeration.

Bodies live in R^d with d in {2, 3}. Directions are unit vectors; inputs
whose norm deviates from 1 by more than DIRECTION_TOL are rejected instead of
silently renormalized, so a bad caller fails loudly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    NotOnBoundary,
    NumericalError,
    OriginOutside,
    Unbounded,
    Unsupported,
)

DIRECTION_TOL = 1e-9  # max allowed deviation of ||u|| from 1 on input
RADIAL_EPS = 1e-14  # denominators at or below this count as "ray misses plane"
BOUNDARY_TOL = 1e-10  # support residual allowed for a claimed boundary point


def as_direction(u) -> np.ndarray:
    """Validate and exactly normalize a direction vector."""
    u = np.asarray(u, dtype=float)
    nrm = float(np.linalg.norm(u))
    if abs(nrm - 1.0) > DIRECTION_TOL:
        raise ValueError(f"direction norm {nrm} deviates from 1 by more than {DIRECTION_TOL}")
    return u / nrm


def _arr(x) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Oriented hyperplane {x : <u, x> = t}; H^- is the halfspace <u, x> <= t."""

    u: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "u", as_direction(self.u))
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _arr(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.shape[0]


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Points c + frame.T @ z with sum (z_i / a_i)^2 <= 1.

    Rows of ``frame`` are the axis directions (orthonormal within 1e-12).
    """

    center: np.ndarray
    frame: np.ndarray
    semiaxes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", _arr(self.center))
        object.__setattr__(self, "frame", _arr(self.frame))
        object.__setattr__(self, "semiaxes", _arr(self.semiaxes))
        d = self.center.shape[0]
        if self.frame.shape != (d, d) or self.semiaxes.shape != (d,):
            raise ValueError("inconsistent ellipsoid shapes")
        if np.any(self.semiaxes <= 0):
            raise ValueError("semiaxes must be positive")
        if not np.allclose(self.frame @ self.frame.T, np.eye(d), atol=1e-12):
            raise ValueError("frame rows must be orthonormal")

    @property
    def dim(self) -> int:
        return self.center.shape[0]


def axis_ellipsoid(center, semiaxes) -> Ellipsoid:
    center = _arr(center)
    return Ellipsoid(center, np.eye(center.shape[0]), semiaxes)


@dataclass(frozen=True, eq=False)
class PolytopeV:
    """Convex hull of a finite vertex list, rows of ``vertices``."""

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.atleast_2d(_arr(self.vertices)))
        if self.vertices.shape[0] < 1:
            raise ValueError("need at least one vertex")

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


@dataclass(frozen=True, eq=False)
class HalfspaceSet:
    """Intersection of halfspaces <u_i, x> <= t_i with unit normals u_i."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        normals = np.atleast_2d(_arr(self.normals))
        offsets = np.atleast_1d(_arr(self.offsets))
        if normals.shape[0] != offsets.shape[0]:
            raise ValueError("normals and offsets length mismatch")
        nrm = np.linalg.norm(normals, axis=1)
        if np.any(np.abs(nrm - 1.0) > DIRECTION_TOL):
            raise ValueError("halfspace normals must be unit vectors")
        object.__setattr__(self, "normals", normals / nrm[:, None])
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def planes(self):
        return [Hyperplane(u, t) for u, t in zip(self.normals, self.offsets)]


@dataclass(frozen=True, eq=False)
class ParallelBody:
    """Minkowski sum inner + r * unit ball."""

    inner: object
    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))
        if self.r < 0:
            raise ValueError("parallel radius must be nonnegative")

    @property
    def dim(self) -> int:
        return body_dim(self.inner)


@dataclass(frozen=True, eq=False)
class OraclePolar:
    """Polar of ``inner`` represented through the duality rho_{K*} = 1/h_K.

    Used for body kinds with no closed-form polar. Requires the origin in the
    interior of ``inner``.
    """

    inner: object

    @property
    def dim(self) -> int:
        return body_dim(self.inner)


Body = Ball | Ellipsoid | PolytopeV | HalfspaceSet | ParallelBody | OraclePolar


def body_dim(body) -> int:
    return body.dim


# ---------------------------------------------------------------------------
# support function

def support_vec(body, nodes: np.ndarray) -> np.ndarray:
    """h_K at each row of ``nodes`` (assumed unit). Returns (m,)."""
    nodes = np.atleast_2d(_arr(nodes))
    if isinstance(body, Ball):
        return nodes @ body.center + body.radius
    if isinstance(body, Ellipsoid):
        proj = nodes @ body.frame.T  # (m, d) components along axes
        return nodes @ body.center + np.sqrt(((proj * body.semiaxes) ** 2).sum(axis=1))
    if isinstance(body, PolytopeV):
        return (nodes @ body.vertices.T).max(axis=1)
    if isinstance(body, HalfspaceSet):
        return support_vec(enumerate_vertices(body), nodes)
    if isinstance(body, ParallelBody):
        return support_vec(body.inner, nodes) + body.r
    if isinstance(body, OraclePolar):
        return 1.0 / radial_vec(body.inner, nodes)
    raise Unsupported(f"support not defined for {type(body).__name__}")


def support(body, u) -> float:
    return float(support_vec(body, as_direction(u)[None, :])[0])


# ---------------------------------------------------------------------------
# radial function

def _require_origin_interior(body, margin=0.0):
    d = body_dim(body)
    eye = np.eye(d)
    h = support_vec(body, np.vstack([eye, -eye]))
    # o interior iff h_K(u) > 0 for all u; axis directions alone do not prove
    # it, so fall back to the exact per-kind checks below where available.
    if np.any(h <= margin):
        raise OriginOutside("origin not interior to the body")


def radial_vec(body, nodes: np.ndarray) -> np.ndarray:
    """rho_K at each row of ``nodes``; origin must be interior. Returns (m,)."""
    nodes = np.atleast_2d(_arr(nodes))
    if isinstance(body, Ball):
        c, R = body.center, body.radius
        if np.linalg.norm(c) >= R:
            raise OriginOutside("origin not interior to the ball")
        b = nodes @ c
        disc = b * b - (c @ c - R * R)
        return b + np.sqrt(disc)
    if isinstance(body, Ellipsoid):
        # solve sum ((t p_i - q_i)/a_i)^2 = 1 for t > 0
        proj = (nodes @ body.frame.T) / body.semiaxes  # (m, d)
        q = (body.frame @ body.center) / body.semiaxes  # (d,)
        A = (proj**2).sum(axis=1)
        B = proj @ q
        C = q @ q - 1.0
        if C >= 0:
            raise OriginOutside("origin not interior to the ellipsoid")
        disc = B * B - A * C
        return (B + np.sqrt(disc)) / A
    if isinstance(body, HalfspaceSet):
        den = body.normals @ nodes.T  # (k, m)
        pos = den > RADIAL_EPS
        if np.any(body.offsets <= 0):
            raise OriginOutside("origin not interior to the halfspace intersection")
        ratio = np.where(pos, body.offsets[:, None] / np.where(pos, den, 1.0), np.inf)
        return ratio.min(axis=0)
    if isinstance(body, PolytopeV):
        if body.dim != 2:
            raise Unsupported("PolytopeV radial function implemented for d=2 only")
        return radial_vec(_polygon_to_halfspaces(body), nodes)
    if isinstance(body, ParallelBody):
        if isinstance(body.inner, Ball):
            return radial_vec(Ball(body.inner.center, body.inner.radius + body.r), nodes)
        if body_dim(body) == 2:
            return _parallel_radial_2d(body, nodes)
        raise Unsupported("ParallelBody radial in d=3 implemented for ball cores only")
    if isinstance(body, OraclePolar):
        return 1.0 / support_vec(body.inner, nodes)
    raise Unsupported(f"radial not defined for {type(body).__name__}")


def radial(body, u) -> float:
    return float(radial_vec(body, as_direction(u)[None, :])[0])


def _parallel_radial_2d(body: ParallelBody, nodes: np.ndarray) -> np.ndarray:
    """rho of inner + r B via rho(u) = min_phi (h_inner(u') + r) / <u', u>.

    Coarse scan then golden-section refinement per node; the minimand is
    unimodal in the angle of u' on the half-circle facing u.
    """
    _require_origin_interior(body)
    r = body.r
    angles = np.linspace(-np.pi / 2, np.pi / 2, 181)
    out = np.empty(nodes.shape[0])
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    for j, u in enumerate(nodes):
        base = np.arctan2(u[1], u[0])

        def f(phi):
            up = np.array([np.cos(base + phi), np.sin(base + phi)])
            den = float(up @ u)
            if den <= RADIAL_EPS:
                return np.inf
            return (support(body.inner, up) + r) / den

        vals = [f(p) for p in angles]
        k = int(np.argmin(vals))
        lo = angles[max(0, k - 1)]
        hi = angles[min(len(angles) - 1, k + 1)]
        # golden-section to ~1e-10 in angle
        a, b = lo, hi
        c1 = b - gr * (b - a)
        c2 = a + gr * (b - a)
        f1, f2 = f(c1), f(c2)
        while b - a > 1e-10:
            if f1 <= f2:
                b, c2, f2 = c2, c1, f1
                c1 = b - gr * (b - a)
                f1 = f(c1)
            else:
                a, c1, f1 = c1, c2, f2
                c2 = a + gr * (b - a)
                f2 = f(c2)
        out[j] = min(f1, f2)
    return out


def _polygon_to_halfspaces(poly: PolytopeV) -> HalfspaceSet:
    """Edge halfspaces of a 2D convex polygon containing the origin."""
    v = poly.vertices
    if v.shape[0] < 3:
        raise Unsupported("need at least 3 vertices for a 2D polygon H-rep")
    order = np.argsort(np.arctan2(v[:, 1] - v[:, 1].mean(), v[:, 0] - v[:, 0].mean()))
    v = v[order]
    normals, offsets = [], []
    k = v.shape[0]
    for i in range(k):
        a, b = v[i], v[(i + 1) % k]
        e = b - a
        n = np.array([e[1], -e[0]])
        nn = np.linalg.norm(n)
        if nn < 1e-14:
            continue
        n = n / nn
        t = float(n @ a)
        if t < 0:  # flip outward
            n, t = -n, -t
        normals.append(n)
        offsets.append(t)
    hs = HalfspaceSet(np.array(normals), np.array(offsets))
    if np.any(hs.offsets <= 0):
        raise OriginOutside("origin not interior to the polygon")
    return hs


# ---------------------------------------------------------------------------
# polar bodies

def polar(body):
    """Polar body K* = {y : <x, y> <= 1 for all x in K}; needs o interior."""
    if isinstance(body, Ball):
        c, R = body.center, body.radius
        t = float(np.linalg.norm(c))
        if t >= R:
            raise OriginOutside("polar of a ball needs the origin interior")
        if t == 0.0:
            return Ball(np.zeros_like(c), 1.0 / R)
        d = c.shape[0]
        denom = R * R - t * t
        axis = c / t
        frame = _frame_with_first_axis(axis, d)
        semiaxes = np.full(d, 1.0 / np.sqrt(denom))
        semiaxes[0] = R / denom
        return Ellipsoid(-c / denom, frame, semiaxes)
    if isinstance(body, PolytopeV):
        v = body.vertices
        nrm = np.linalg.norm(v, axis=1)
        if np.any(nrm < 1e-14):
            # a vertex at o contributes no constraint
            v = v[nrm >= 1e-14]
            nrm = nrm[nrm >= 1e-14]
        if v.shape[0] == 0:
            raise OriginOutside("degenerate polytope")
        return HalfspaceSet(v / nrm[:, None], 1.0 / nrm)
    if isinstance(body, HalfspaceSet):
        if np.any(body.offsets <= 0):
            raise OriginOutside("polar of a halfspace set needs positive offsets")
        if body.dim == 2:
            enumerate_vertices(body)  # raises Unbounded if not a bounded polygon
        return PolytopeV(body.normals / body.offsets[:, None])
    if isinstance(body, OraclePolar):
        return body.inner
    if isinstance(body, (Ellipsoid, ParallelBody)):
        _require_origin_interior(body)
        return OraclePolar(body)
    raise Unsupported(f"polar not defined for {type(body).__name__}")


def _frame_with_first_axis(axis: np.ndarray, d: int) -> np.ndarray:
    frame = np.eye(d)
    frame[0] = axis
    # Gram-Schmidt the remaining rows against the given first axis
    basis = [axis]
    for e in np.eye(d):
        w = e - sum((e @ b) * b for b in basis)
        nn = np.linalg.norm(w)
        if nn > 1e-10:
            basis.append(w / nn)
        if len(basis) == d:
            break
    return np.array(basis)


# ---------------------------------------------------------------------------
# curvature and boundary data

@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    """Boundary point with outer unit normal and generalized Gauss curvature."""

    x: np.ndarray
    normal: np.ndarray
    kappa: float


def curvature(body, x) -> BoundaryPoint:
    """Boundary data at x on a ball or ellipsoid.

    kappa is the product of the principal curvatures at x (Gauss curvature in
    d=3, ordinary boundary curvature in d=2).
    """
    x = _arr(x)
    if isinstance(body, Ball):
        rel = x - body.center
        nrm = float(np.linalg.norm(rel))
        if abs(nrm - body.radius) > BOUNDARY_TOL * max(1.0, body.radius):
            raise NotOnBoundary(f"|x - c| = {nrm}, radius {body.radius}")
        normal = rel / nrm
        return BoundaryPoint(x, normal, body.radius ** (-(body.dim - 1)))
    if isinstance(body, Ellipsoid):
        z = body.frame @ (x - body.center)
        a = body.semiaxes
        resid = float((z / a) @ (z / a)) - 1.0
        if abs(resid) > 1e-8:
            raise NotOnBoundary(f"quadric residual {resid}")
        grad = z / a**2
        gn = float(np.linalg.norm(grad))
        normal = body.frame.T @ (grad / gn)
        d = body.dim
        kappa = 1.0 / (np.prod(a**2) * gn ** (d + 1))
        return BoundaryPoint(x, normal, float(kappa))
    raise Unsupported("curvature implemented for balls and ellipsoids")


def gauss_preimage(body, nodes: np.ndarray) -> np.ndarray:
    """Boundary points whose outer normal equals each node direction.

    Smooth strictly convex bodies only (ball, ellipsoid). Returns (m, d).
    """
    nodes = np.atleast_2d(_arr(nodes))
    if isinstance(body, Ball):
        return body.center + body.radius * nodes
    if isinstance(body, Ellipsoid):
        nu = nodes @ body.frame.T  # normals in the body frame
        za = nu * body.semiaxes**2
        s = np.sqrt((za * nu).sum(axis=1))
        z = za / s[:, None]
        return body.center + z @ body.frame
    raise Unsupported("gauss_preimage implemented for balls and ellipsoids")


def boundary_batch(body, nodes: np.ndarray):
    """(points, normals, kappas) over the node directions, vectorized."""
    nodes = np.atleast_2d(_arr(nodes))
    xs = gauss_preimage(body, nodes)
    if isinstance(body, Ball):
        kap = np.full(nodes.shape[0], body.radius ** (-(body.dim - 1)))
        return xs, nodes.copy(), kap
    a = body.semiaxes
    z = (xs - body.center) @ body.frame.T
    gn = np.linalg.norm(z / a**2, axis=1)
    d = body.dim
    kap = 1.0 / (np.prod(a**2) * gn ** (d + 1))
    return xs, nodes.copy(), kap


def lemmaB_principal_radii(R: float, t: float, x1: float) -> tuple[float, float]:
    """Principal curvature radii of the polar of Ball(t e1, R) at the boundary
    point with first normalized coordinate x1 in [-1, 1].

    Returns (r_meridian, r_parallel); both are >= 1/R.
    """
    if not (0 <= t < R):
        raise DomainError("need 0 <= t < R")
    if not (-1.0 <= x1 <= 1.0):
        raise DomainError("x1 must lie in [-1, 1]")
    s = (t / R) ** 2
    bracket = 1.0 - s + s * x1 * x1
    r2 = (bracket ** (-1.5)) / R
    r_other = (bracket ** (-0.5)) / R
    return r2, r_other


def rolling_radius(body) -> float:
    """Largest r such that a radius-r ball rolls freely inside the body:
    the minimum principal curvature radius over the boundary."""
    if isinstance(body, Ball):
        return body.radius
    if isinstance(body, Ellipsoid):
        a = np.sort(body.semiaxes)[::-1]
        return float(a[-1] ** 2 / a[0])
    raise Unsupported("rolling_radius implemented for balls and ellipsoids")


# ---------------------------------------------------------------------------
# 2D vertex enumeration

def _monotone_chain(points: np.ndarray) -> np.ndarray:
    """Indices of the convex hull of 2D points, counterclockwise."""
    order = np.lexsort((points[:, 1], points[:, 0]))

    def cross(o, a, b):
        return (points[a, 0] - points[o, 0]) * (points[b, 1] - points[o, 1]) - (
            points[a, 1] - points[o, 1]
        ) * (points[b, 0] - points[o, 0])

    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= 0:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in order[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= 0:
            upper.pop()
        upper.append(i)
    return np.array(lower[:-1] + upper[:-1], dtype=int)


def enumerate_vertices(hs: HalfspaceSet) -> PolytopeV:
    """Vertices of a bounded 2D halfspace intersection, counterclockwise.

    Works through the polar: dual points u_i / t_i, convex hull, one primal
    vertex per hull edge. Raises Unbounded when the intersection is not a
    bounded polygon and OriginOutside when some offset is nonpositive.
    """
    if hs.dim != 2:
        raise Unsupported("vertex enumeration implemented for d=2 only")
    if np.any(hs.offsets <= 0):
        raise OriginOutside("vertex enumeration needs the origin interior (t_i > 0)")
    duals = hs.normals / hs.offsets[:, None]
    if duals.shape[0] < 3:
        raise Unbounded("fewer than 3 effective halfspaces")
    hull = _monotone_chain(duals)
    if hull.shape[0] < 3:
        raise Unbounded("dual points are affinely degenerate")
    # o strictly inside the dual hull iff the intersection is bounded
    hp = duals[hull]
    k = hp.shape[0]
    for i in range(k):
        a, b = hp[i], hp[(i + 1) % k]
        if (b[0] - a[0]) * (-a[1]) - (b[1] - a[1]) * (-a[0]) <= 1e-14:
            raise Unbounded("halfspace intersection is unbounded")
    verts = np.empty((k, 2))
    for i in range(k):
        ia, ib = hull[i], hull[(i + 1) % k]
        A = np.array([hs.normals[ia], hs.normals[ib]])
        b = np.array([hs.offsets[ia], hs.offsets[ib]])
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if abs(det) < 1e-16:
            raise NumericalError("near-parallel adjacent facets")
        verts[i, 0] = (b[0] * A[1, 1] - b[1] * A[0, 1]) / det
        verts[i, 1] = (A[0, 0] * b[1] - A[1, 0] * b[0]) / det
    return PolytopeV(verts)


# ---------------------------------------------------------------------------
# misc helpers used across modules

def scale(body, c: float):
    """The dilate c K."""
    c = float(c)
    if c <= 0:
        raise ValueError("scale factor must be positive")
    if isinstance(body, Ball):
        return Ball(c * body.center, c * body.radius)
    if isinstance(body, Ellipsoid):
        return Ellipsoid(c * body.center, body.frame, c * body.semiaxes)
    if isinstance(body, PolytopeV):
        return PolytopeV(c * body.vertices)
    if isinstance(body, HalfspaceSet):
        return HalfspaceSet(body.normals, c * body.offsets)
    if isinstance(body, ParallelBody):
        return ParallelBody(scale(body.inner, c), c * body.r)
    raise Unsupported(f"scale not defined for {type(body).__name__}")


def bounding_box(body) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box [lo, hi] containing the body, from support values."""
    d = body_dim(body)
    eye = np.eye(d)
    hi = support_vec(body, eye)
    lo = -support_vec(body, -eye)
    return lo, hi


def contains(body, pts: np.ndarray) -> np.ndarray:
    """Boolean membership for each row of pts."""
    pts = np.atleast_2d(_arr(pts))
    if isinstance(body, Ball):
        return np.linalg.norm(pts - body.center, axis=1) <= body.radius
    if isinstance(body, Ellipsoid):
        z = (pts - body.center) @ body.frame.T / body.semiaxes
        return (z**2).sum(axis=1) <= 1.0
    if isinstance(body, HalfspaceSet):
        return np.all(pts @ body.normals.T <= body.offsets + 1e-12, axis=1)
    if isinstance(body, PolytopeV):
        if body.dim != 2:
            raise Unsupported("membership for PolytopeV implemented for d=2 only")
        return contains(_polygon_to_halfspaces(body), pts)
    if isinstance(body, ParallelBody) and isinstance(body.inner, Ball):
        return contains(Ball(body.inner.center, body.inner.radius + body.r), pts)
    raise Unsupported(f"membership not defined for {type(body).__name__}")


def volume(body) -> float:
    """Lebesgue volume, for the kinds where a closed form is cheap."""
    from .functionals import kappa_d  # local import to avoid a cycle

    if isinstance(body, Ball):
        return float(kappa_d(body.dim) * body.radius**body.dim)
    if isinstance(body, Ellipsoid):
        return float(kappa_d(body.dim) * np.prod(body.semiaxes))
    if isinstance(body, PolytopeV):
        if body.dim != 2:
            raise Unsupported("volume for PolytopeV implemented for d=2 only")
        v = body.vertices
        order = np.argsort(np.arctan2(v[:, 1] - v[:, 1].mean(), v[:, 0] - v[:, 0].mean()))
        v = v[order]
        x, y = v[:, 0], v[:, 1]
        return float(abs(x @ np.roll(y, -1) - y @ np.roll(x, -1)) / 2.0)
    if isinstance(body, HalfspaceSet):
        if body.dim != 2:
            raise Unsupported("volume for HalfspaceSet implemented for d=2 only")
        return volume(enumerate_vertices(body))
    raise Unsupported(f"volume not defined for {type(body).__name__}")
