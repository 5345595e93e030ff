"""Hot loops shared by the simulation drivers.

Two interchangeable backends compute the same quantities:

* ``numba``: jit-compiled loops, parallel over trials (default when numba
  imports cleanly),
* ``numpy``: vectorized fallback with no compiled dependency.

Selection is via the ``RANDPOLY_BACKEND`` environment variable ("numba" or
"numpy"), read once at import. Both backends reduce per output cell with the
same operation order up to summation order inside dot products, so results
agree to floating-point roundoff; ``benchmarks/bench_kernels.py`` measures the
gap and the speed difference.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConfigError

_ENV_FLAG = "RANDPOLY_BACKEND"


def _pick_backend() -> str:
    choice = os.environ.get(_ENV_FLAG, "").strip().lower()
    if choice in ("numba", "numpy"):
        if choice == "numba":
            try:
                import numba  # noqa: F401
            except ImportError as exc:  # pragma: no cover - env without numba
                raise ConfigError(f"{_ENV_FLAG}=numba but numba is not importable") from exc
        return choice
    if choice:
        raise ConfigError(f"{_ENV_FLAG} must be 'numba' or 'numpy', got {choice!r}")
    try:
        import numba  # noqa: F401

        return "numba"
    except ImportError:  # pragma: no cover - env without numba
        return "numpy"


BACKEND = _pick_backend()


# ---------------------------------------------------------------------------
# numpy reference implementations

def hull_support_numpy(points: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Support values of conv(points) at each node direction.

    points: (trials, n, d), nodes: (m, d). Returns (trials, m).
    """
    trials = points.shape[0]
    m = nodes.shape[0]
    out = np.empty((trials, m))
    for c in range(trials):
        # (m, n) per trial keeps peak memory modest for large trial chunks
        out[c] = (nodes @ points[c].T).max(axis=1)
    return out


def _radial_from_dual_support(h: np.ndarray, eps: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(h > eps, 1.0 / np.where(h > eps, h, 1.0), np.inf)


def halfspace_radial_numpy(
    normals: np.ndarray, offsets: np.ndarray, nodes: np.ndarray, eps: float = 1e-14
) -> np.ndarray:
    """Radial function of the halfspace intersection at each node direction.

    normals: (trials, n, d) unit rows, offsets: (trials, n) strictly positive,
    nodes: (m, d). Works through polarity: rho(u) = 1 / max_i <u_i/t_i, u>,
    +inf where the dual support is <= eps (unbounded ray). Returns (trials, m).
    """
    if np.any(offsets <= 0):
        raise ValueError("halfspace offsets must be positive (origin interior)")
    scaled = normals / offsets[:, :, None]
    return _radial_from_dual_support(hull_support_numpy(scaled, nodes), eps)


def prefix_hull_support_numpy(points: np.ndarray, nodes: np.ndarray, checkpoints) -> np.ndarray:
    """Support of conv(points[:k]) at the nodes, for each k in checkpoints.

    points: (n, d), nodes: (m, d), checkpoints increasing. Returns (len(checkpoints), m).
    """
    dots = points @ nodes.T  # (n, m)
    out = np.empty((len(checkpoints), nodes.shape[0]))
    running = np.full(nodes.shape[0], -np.inf)
    start = 0
    for row, k in enumerate(checkpoints):
        running = np.maximum(running, dots[start:k].max(axis=0))
        start = k
        out[row] = running
    return out


# ---------------------------------------------------------------------------
# numba implementations

if BACKEND == "numba":
    import warnings

    from numba import NumbaWarning, njit, prange

    # hosts with an old TBB emit a version warning when the pool starts and
    # fall back to another threading layer; nothing actionable for callers
    warnings.filterwarnings(
        "ignore", message=".*TBB threading layer.*", category=NumbaWarning
    )

    @njit(parallel=True, fastmath=False, cache=True, nogil=True)
    def _hull_support_nb(points, nodes, out):  # pragma: no cover - compiled
        trials, n, d = points.shape
        m = nodes.shape[0]
        for c in prange(trials):
            for j in range(m):
                out[c, j] = -np.inf
            if d == 2:
                for i in range(n):
                    p0 = points[c, i, 0]
                    p1 = points[c, i, 1]
                    for j in range(m):
                        s = p0 * nodes[j, 0] + p1 * nodes[j, 1]
                        v = out[c, j]
                        out[c, j] = s if s > v else v
            else:
                for i in range(n):
                    p0 = points[c, i, 0]
                    p1 = points[c, i, 1]
                    p2 = points[c, i, 2]
                    for j in range(m):
                        s = p0 * nodes[j, 0] + p1 * nodes[j, 1] + p2 * nodes[j, 2]
                        v = out[c, j]
                        out[c, j] = s if s > v else v

    def hull_support(points, nodes):
        points = np.ascontiguousarray(points, dtype=np.float64)
        nodes = np.ascontiguousarray(nodes, dtype=np.float64)
        out = np.empty((points.shape[0], nodes.shape[0]))
        _hull_support_nb(points, nodes, out)
        return out

    def halfspace_radial(normals, offsets, nodes, eps=1e-14):
        if np.any(offsets <= 0):
            raise ValueError("halfspace offsets must be positive (origin interior)")
        scaled = np.ascontiguousarray(normals / offsets[:, :, None])
        nodes = np.ascontiguousarray(nodes, dtype=np.float64)
        out = np.empty((scaled.shape[0], nodes.shape[0]))
        _hull_support_nb(scaled, nodes, out)
        return _radial_from_dual_support(out, float(eps))

else:
    hull_support = hull_support_numpy
    halfspace_radial = halfspace_radial_numpy

prefix_hull_support = prefix_hull_support_numpy


def set_threads(n: int | None) -> None:
    """Bound worker threads for the numba backend; no-op for numpy."""
    if n is None or BACKEND != "numba":
        return
    import numba

    numba.set_num_threads(max(1, int(n)))
