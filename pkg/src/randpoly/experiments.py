"""Simulation drivers for the two dual random models and the diagnostic
checks around them.

Inscribed model: convex hull of n density-rho points inside K; tracked
functional is the weighted mean width deficit W_q(K) - W_q(K_n).

Circumscribed model: intersection of n random halfspaces tangent-band
distributed around K, clipped by the parallel body K_1; tracked functional is
the weighted volume excess V_lambda(K^n cap K_1) - V_lambda(K).

Both deficits scale like n^{-2/(d+1)} with an explicit limit constant, and
their variances decay like n^{-(d+3)/(d+1)}.
"""

from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import kernels
from .errors import ConfigError, DomainError, HypothesisError, NumericalError, Unsupported
from .functionals import (
    CIRCUMSCRIBED_VOLUME,
    INSCRIBED_MEAN_WIDTH,
    Constant,
    sphere_area,
    weighted_mean_width,
)
from .geom import ParallelBody, body_dim, polar, radial_vec, support_vec
from .quadrature import SphereRule, sphere_rule
from .sampling import (
    HyperplaneSampler,
    InducedPolar,
    Role,
    StreamKey,
    UniformOnBody,
    sample_points,
)

Z95 = 1.959963984540054  # two-sided 95% normal quantile
VALUE_FLOOR = -1e-9  # monotone differences may only go negative by roundoff


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    dim: int
    body: object
    q: object
    rho: object | None
    lam: object | None
    n_grid: tuple[int, ...]
    trials: int
    seed: int
    quad_m: int = 1024
    out_path: str | None = None

    def __post_init__(self):
        if self.mode not in (INSCRIBED_MEAN_WIDTH, CIRCUMSCRIBED_VOLUME):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.dim not in (2, 3):
            raise ConfigError("dim must be 2 or 3")
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) == 0 or any(n < 1 for n in grid) or any(
            b <= a for a, b in zip(grid, grid[1:])
        ):
            raise ConfigError("n_grid must be strictly increasing positive integers")
        object.__setattr__(self, "n_grid", grid)
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.mode == INSCRIBED_MEAN_WIDTH and self.rho is None:
            raise ConfigError("inscribed mode needs a point density")
        if self.mode == CIRCUMSCRIBED_VOLUME and self.lam is None:
            raise ConfigError("circumscribed mode needs a volume weight")
        if body_dim(self.body) != self.dim:
            raise ConfigError("body dimension does not match dim")


@dataclass(frozen=True)
class SummaryRow:
    n: int
    trials: int
    mean: float
    var: float
    ci_half: float
    scaled_mean: float
    scaled_var: float
    seconds: float


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summaries: list[SummaryRow]
    values: dict[int, np.ndarray] = field(default_factory=dict)
    aux: dict[int, np.ndarray] = field(default_factory=dict)
    failures: list[tuple[int, int, str]] = field(default_factory=list)


def summarize(values: np.ndarray, n: int, d: int, seconds: float) -> SummaryRow:
    t = values.shape[0]
    mean = float(values.mean())
    var = float(values.var(ddof=1)) if t > 1 else 0.0
    ci = Z95 * math.sqrt(var / t) if t > 1 else 0.0
    return SummaryRow(
        n=n,
        trials=t,
        mean=mean,
        var=var,
        ci_half=ci,
        scaled_mean=n ** (2.0 / (d + 1)) * mean,
        scaled_var=n ** ((d + 3.0) / (d + 1)) * var,
        seconds=seconds,
    )


def _chunk_size(n: int) -> int:
    # keep per-chunk arrays a few MB so kernels stay cache-friendly
    return min(1024, max(1, 2_097_152 // max(n, 1) // 2))


def _check_values(vals: np.ndarray, n: int, base_trial: int, seed: int, role: Role):
    bad = ~np.isfinite(vals) | (vals < VALUE_FLOOR)
    if np.any(bad):
        j = int(np.argmax(bad))
        key = StreamKey(seed, base_trial + j, role)
        raise NumericalError(f"invalid trial value {vals[j]} at n={n}, stream key {key}")


class _InscribedEngine:
    def __init__(self, cfg: ExperimentConfig, rule: SphereRule):
        self.cfg = cfg
        self.rule = rule
        self.h_body = support_vec(cfg.body, rule.nodes)
        self.w_body = weighted_mean_width(self.h_body, cfg.q, rule)
        self.front = 2.0 / sphere_area(rule.dim)

    role = Role.POINT

    def run_block(self, n: int, trial_indices: np.ndarray) -> np.ndarray:
        cfg, rule = self.cfg, self.rule
        out = np.empty(trial_indices.shape[0])
        pos = 0
        chunk = _chunk_size(n)
        while pos < trial_indices.shape[0]:
            idx = trial_indices[pos : pos + chunk]
            pts = np.empty((idx.shape[0], n, cfg.dim))
            for row, trial in enumerate(idx):
                rng = StreamKey(cfg.seed, int(trial), Role.POINT).generator()
                pts[row] = sample_points(cfg.rho, n, rng)
            hull_h = kernels.hull_support(pts, rule.nodes)
            inner = cfg.q.integral0(hull_h, rule.nodes)
            wq = self.front * (inner @ rule.weights)
            out[pos : pos + idx.shape[0]] = self.w_body - wq
            pos += idx.shape[0]
        return out


class _CircumscribedEngine:
    def __init__(self, cfg: ExperimentConfig, rule: SphereRule):
        self.cfg = cfg
        self.rule = rule
        self.sampler = HyperplaneSampler(cfg.body, cfg.q, rule)
        self.rho_body = radial_vec(cfg.body, rule.nodes)
        self.rho_outer = radial_vec(ParallelBody(cfg.body, 1.0), rule.nodes)
        base = cfg.lam.radial_moment(self.rho_body, rule.nodes, rule.dim)
        self.v_body = float(rule.weights @ base)

    role = Role.PLANE

    def run_block(self, n: int, trial_indices: np.ndarray) -> np.ndarray:
        cfg, rule = self.cfg, self.rule
        out = np.empty(trial_indices.shape[0])
        pos = 0
        chunk = _chunk_size(n)
        while pos < trial_indices.shape[0]:
            idx = trial_indices[pos : pos + chunk]
            normals = np.empty((idx.shape[0], n, cfg.dim))
            offsets = np.empty((idx.shape[0], n))
            for row, trial in enumerate(idx):
                rng = StreamKey(cfg.seed, int(trial), Role.PLANE).generator()
                normals[row], offsets[row] = self.sampler.sample(n, rng)
            rad = kernels.halfspace_radial(normals, offsets, rule.nodes)
            clipped = np.minimum(rad, self.rho_outer)
            moments = cfg.lam.radial_moment(clipped, rule.nodes, rule.dim)
            out[pos : pos + idx.shape[0]] = moments @ rule.weights - self.v_body
            pos += idx.shape[0]
        return out


def _make_engine(cfg: ExperimentConfig, rule: SphereRule):
    if cfg.mode == INSCRIBED_MEAN_WIDTH:
        return _InscribedEngine(cfg, rule)
    return _CircumscribedEngine(cfg, rule)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Simulate every (n, trial) cell of the config and summarize per n.

    Trials are keyed by a global index n_index * trials + trial so samples are
    independent across the n grid as well as across trials.
    """
    rule = sphere_rule(cfg.dim, cfg.quad_m)
    engine = _make_engine(cfg, rule)
    result = ExperimentResult(cfg, [])
    for n_index, n in enumerate(cfg.n_grid):
        t0 = time.perf_counter()
        base = n_index * cfg.trials
        idx = np.arange(base, base + cfg.trials)
        vals = engine.run_block(n, idx)
        _check_values(vals, n, base, cfg.seed, engine.role)
        seconds = time.perf_counter() - t0
        result.values[n] = vals
        result.summaries.append(summarize(vals, n, cfg.dim, seconds))
    if cfg.out_path:
        write_trials_csv(trials_path(cfg.out_path), result)
        write_summary_csv(summary_path(cfg.out_path), result.summaries)
    return result


# ---------------------------------------------------------------------------
# persistence

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def trials_path(base: str) -> str:
    return base + ".trials.csv"


def summary_path(base: str) -> str:
    return base + ".summary.csv"


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_trials_csv(path: str, result: ExperimentResult):
    lines = ["n,trial,value,aux"]
    for n in result.config.n_grid:
        vals = result.values[n]
        aux = result.aux.get(n)
        for t in range(vals.shape[0]):
            a = "" if aux is None else _fmt(float(aux[t]))
            lines.append(f"{n},{t},{_fmt(float(vals[t]))},{a}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_summary_csv(path: str, rows: list[SummaryRow]):
    lines = ["n,trials,mean,var,ci_half,scaled_mean,scaled_var,seconds"]
    for r in rows:
        lines.append(
            f"{r.n},{r.trials},{_fmt(r.mean)},{_fmt(r.var)},{_fmt(r.ci_half)},"
            f"{_fmt(r.scaled_mean)},{_fmt(r.scaled_var)},{_fmt(r.seconds)}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def read_summary_csv(path: str) -> list[SummaryRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                SummaryRow(
                    n=int(rec["n"]),
                    trials=int(rec["trials"]),
                    mean=float(rec["mean"]),
                    var=float(rec["var"]),
                    ci_half=float(rec["ci_half"]),
                    scaled_mean=float(rec["scaled_mean"]),
                    scaled_var=float(rec["scaled_var"]),
                    seconds=float(rec["seconds"]),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# scaling regression

def fit_scaling(rows: list[SummaryRow], column: str) -> RegressionResult:
    """Log-log least squares of a summary column against n."""
    if column not in ("mean", "var"):
        raise ConfigError("column must be 'mean' or 'var'")
    ns = np.array([r.n for r in rows], dtype=float)
    ys = np.array([getattr(r, column) for r in rows], dtype=float)
    if len(rows) < 3:
        raise DomainError("need at least 3 grid points for a slope with stderr")
    if np.any(ys <= 0):
        raise DomainError(f"nonpositive {column} value; log-log fit undefined")
    x = np.log(ns)
    y = np.log(ys)
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) @ (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    dof = len(rows) - 2
    sigma2 = float(resid @ resid) / dof
    stderr = math.sqrt(sigma2 / sxx)
    sst = float(((y - ym) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else 1.0
    return RegressionResult(slope, float(intercept), stderr, r2)


# ---------------------------------------------------------------------------
# Efron-Stein bound check

@dataclass(frozen=True)
class EfronSteinRow:
    n: int
    trials: int
    direct_var: float
    direct_var_ci: float
    es_bound: float
    es_bound_ci: float


def efron_stein_check(cfg: ExperimentConfig) -> list[EfronSteinRow]:
    """Compare Var(W_q(K_n)) against (n+1) E (W_q(K_{n+1}) - W_q(K_n))^2.

    Each trial draws n+1 points once and evaluates both hulls on the nested
    prefix, so the pair is coupled exactly as the bound requires.
    """
    if cfg.mode != INSCRIBED_MEAN_WIDTH:
        raise ConfigError("Efron-Stein check applies to the inscribed model")
    rule = sphere_rule(cfg.dim, cfg.quad_m)
    engine = _InscribedEngine(cfg, rule)
    rows = []
    for n_index, n in enumerate(cfg.n_grid):
        base = n_index * cfg.trials
        w_n = np.empty(cfg.trials)
        w_n1 = np.empty(cfg.trials)
        chunk = _chunk_size(n + 1)
        pos = 0
        while pos < cfg.trials:
            c = min(chunk, cfg.trials - pos)
            pts = np.empty((c, n + 1, cfg.dim))
            for row in range(c):
                rng = StreamKey(cfg.seed, base + pos + row, Role.POINT).generator()
                pts[row] = sample_points(cfg.rho, n + 1, rng)
            h_n = kernels.hull_support(pts[:, :n], rule.nodes)
            extra = pts[:, n] @ rule.nodes.T  # (c, m)
            h_n1 = np.maximum(h_n, extra)
            inner_n = cfg.q.integral0(h_n, rule.nodes)
            inner_n1 = cfg.q.integral0(h_n1, rule.nodes)
            w_n[pos : pos + c] = engine.w_body - engine.front * (inner_n @ rule.weights)
            w_n1[pos : pos + c] = engine.w_body - engine.front * (inner_n1 @ rule.weights)
            pos += c
        delta = w_n - w_n1  # widths grow with the extra point
        if np.any(delta < VALUE_FLOOR):
            raise NumericalError("nested width increment went negative")
        d2 = delta**2
        t = cfg.trials
        direct_var = float(np.var(w_n, ddof=1))
        centered = w_n - w_n.mean()
        m4 = float(np.mean(centered**4))
        var_of_var = max(m4 - direct_var**2, 0.0) / t
        es_bound = (n + 1) * float(d2.mean())
        es_ci = Z95 * (n + 1) * float(d2.std(ddof=1)) / math.sqrt(t)
        rows.append(
            EfronSteinRow(
                n=n,
                trials=t,
                direct_var=direct_var,
                direct_var_ci=Z95 * math.sqrt(var_of_var),
                es_bound=es_bound,
                es_bound_ci=es_ci,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# duality distribution test

@dataclass(frozen=True)
class DualityResult:
    statistic: float
    critical: float
    trials: int
    rejected: bool
    values_planes: np.ndarray
    values_points: np.ndarray


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.sort(a)
    b = np.sort(b)
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.shape[0]
    fb = np.searchsorted(b, grid, side="right") / b.shape[0]
    return float(np.max(np.abs(fa - fb)))


def ks_critical(n1: int, n2: int, alpha: float = 0.01) -> float:
    return math.sqrt(math.log(2.0 / alpha) / 2.0) * math.sqrt((n1 + n2) / (n1 * n2))


def duality_test(
    body,
    q,
    n: int,
    trials: int,
    seed: int,
    quad_m: int = 512,
    self_test: bool = False,
    control_uniform: bool = False,
) -> DualityResult:
    """Compare the halfspace model against polar hulls of induced-density points.

    Both arms evaluate the same functional, the volume of the intersection
    clipped by the parallel body. Under the correct induced density the two
    samples share one distribution; with self_test=True the second arm reuses
    the first arm's streams and the statistic is exactly zero; with
    control_uniform=True the second arm draws uniform points in the polar body
    and the test is expected to reject.
    """
    rule = sphere_rule(body_dim(body), quad_m)
    lam = Constant(1.0)
    rho_outer = radial_vec(ParallelBody(body, 1.0), rule.nodes)
    sampler = HyperplaneSampler(body, q, rule)

    def plane_values() -> np.ndarray:
        out = np.empty(trials)
        chunk = _chunk_size(n)
        pos = 0
        while pos < trials:
            c = min(chunk, trials - pos)
            normals = np.empty((c, n, rule.dim))
            offsets = np.empty((c, n))
            for row in range(c):
                rng = StreamKey(seed, pos + row, Role.PLANE).generator()
                normals[row], offsets[row] = sampler.sample(n, rng)
            rad = kernels.halfspace_radial(normals, offsets, rule.nodes)
            clipped = np.minimum(rad, rho_outer)
            out[pos : pos + c] = lam.radial_moment(clipped, rule.nodes, rule.dim) @ rule.weights
            pos += c
        return out

    def point_values() -> np.ndarray:
        density = (
            UniformOnBody(polar(body)) if control_uniform else InducedPolar(body, q)
        )
        out = np.empty(trials)
        chunk = _chunk_size(n)
        pos = 0
        while pos < trials:
            c = min(chunk, trials - pos)
            normals = np.empty((c, n, rule.dim))
            offsets = np.empty((c, n))
            for row in range(c):
                rng = StreamKey(seed, pos + row, Role.POINT).generator()
                pts = sample_points(density, n, rng)
                nrm = np.linalg.norm(pts, axis=1)
                if np.any(nrm < 1e-300):
                    raise NumericalError("sampled point at the origin cannot be polarized")
                normals[row] = pts / nrm[:, None]
                offsets[row] = 1.0 / nrm
            rad = kernels.halfspace_radial(normals, offsets, rule.nodes)
            clipped = np.minimum(rad, rho_outer)
            out[pos : pos + c] = lam.radial_moment(clipped, rule.nodes, rule.dim) @ rule.weights
            pos += c
        return out

    a = plane_values()
    b = a.copy() if self_test else point_values()
    stat = ks_statistic(a, b)
    crit = ks_critical(trials, trials)
    return DualityResult(stat, crit, trials, stat >= crit, a, b)


# ---------------------------------------------------------------------------
# probability that the hull misses the origin

@dataclass(frozen=True)
class MissRow:
    n: int
    trials: int
    p_hat: float
    ci_half: float
    bound: float


def origin_outside_hull(pts: np.ndarray) -> bool:
    """Exact test whether o lies outside conv(pts)."""
    d = pts.shape[1]
    if d == 2:
        ang = np.sort(np.arctan2(pts[:, 1], pts[:, 0]))
        gaps = np.diff(ang, append=ang[0] + 2.0 * np.pi)
        return bool(np.max(gaps) > np.pi)
    if d == 3:
        from scipy.optimize import linprog

        # o outside the closed hull iff some u strictly separates: X u <= -1
        res = linprog(
            c=np.zeros(3),
            A_ub=pts,
            b_ub=-np.ones(pts.shape[0]),
            bounds=[(None, None)] * 3,
            method="highs",
        )
        return bool(res.status == 0)
    raise Unsupported("origin test implemented for d in {2, 3}")


def miss_probability(body, rho, n_grid, trials: int, seed: int) -> list[MissRow]:
    """Empirical P(o not in K_n) next to the orthant-mass union bound
    2^d (1 - gamma_1)^n, gamma_1 the smallest orthant mass of rho."""
    d = body_dim(body)
    gamma1 = float(np.min(rho.orthant_masses()))
    rows = []
    for n_index, n in enumerate(n_grid):
        base = n_index * trials
        misses = 0
        for t in range(trials):
            rng = StreamKey(seed, base + t, Role.POINT).generator()
            pts = sample_points(rho, n, rng)
            if origin_outside_hull(pts):
                misses += 1
        p = misses / trials
        ci = Z95 * math.sqrt(p * (1.0 - p) / trials)
        rows.append(MissRow(n, trials, p, ci, (2.0**d) * (1.0 - gamma1) ** n))
    return rows


# ---------------------------------------------------------------------------
# scalar asymptotic integral check

@dataclass(frozen=True)
class GammaCheckResult:
    beta: float
    omega: float
    dim: int
    n: int
    gamma_coef: float
    lhs: float
    rhs: float
    ratio: float


def gamma_lemma_check(
    beta: float, omega: float, d: int, n: int, gamma_coef: float = 1.0
) -> GammaCheckResult:
    """Ratio of int_0^{g(n)} t^beta (1 - omega t^{(d+1)/2})_+^n dt to its
    asymptotic value (2/((d+1) omega^alpha)) Gamma(alpha) n^{-alpha}, with
    alpha = 2(beta+1)/(d+1) and g(n) = gamma_coef (ln n / n)^{1/d}.

    The cutoff must dominate (2(alpha+1)/omega * ln n / n)^{2/(d+1)} for the
    asymptotics to hold; violations raise HypothesisError.
    """
    if beta <= -1:
        raise ConfigError("need beta > -1 for integrability")
    if omega <= 0 or gamma_coef <= 0:
        raise ConfigError("omega and gamma_coef must be positive")
    if n < 3:
        raise ConfigError("need n >= 3 so ln n is safely positive")
    alpha = 2.0 * (beta + 1.0) / (d + 1.0)
    logs = math.log(n) / n
    g = gamma_coef * logs ** (1.0 / d)
    needed = (2.0 * (alpha + 1.0) / omega * logs) ** (2.0 / (d + 1.0))
    if g < needed:
        raise HypothesisError(
            f"cutoff g(n)={g:.3e} below the admissible threshold {needed:.3e}"
        )
    # scaled variable tau = t n^{2/(d+1)} keeps the mass near tau = O(1)
    T = g * n ** (2.0 / (d + 1.0))
    p = 1.0 if beta >= 0 else math.ceil(1.0 / (beta + 1.0))
    ex = (d + 1.0) / 2.0

    def integrand(tau):
        z = omega * tau**ex / n
        out = np.zeros_like(tau)
        ok = z < 1.0
        with np.errstate(over="ignore"):
            out[ok] = tau[ok] ** beta * np.exp(n * np.log1p(-z[ok]))
        return out

    def integrate(panels: int) -> float:
        xs, ws = leggauss(24)
        # integrate in sigma where tau = sigma^p to absorb any beta < 0 cusp
        S = T ** (1.0 / p)
        edges = np.linspace(0.0, S, panels + 1)
        total = 0.0
        for aa, bb in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (aa + bb)
            half = 0.5 * (bb - aa)
            sig = mid + half * xs
            tau = sig**p
            total += half * float(ws @ (integrand(tau) * p * sig ** (p - 1.0)))
        return total

    val, panels = integrate(64), 64
    while panels <= 4096:
        nxt = integrate(panels * 2)
        if abs(nxt - val) <= 1e-10 * max(abs(nxt), 1e-300):
            val = nxt
            break
        val, panels = nxt, panels * 2
    # undo the tau scaling: dt = n^{-2/(d+1)} dtau and t^beta = tau^beta n^{-2 beta/(d+1)}
    lhs = val * n ** (-alpha)
    rhs = 2.0 / ((d + 1.0) * omega**alpha) * math.gamma(alpha) * n ** (-alpha)
    return GammaCheckResult(beta, omega, d, n, gamma_coef, lhs, rhs, lhs / rhs)


# ---------------------------------------------------------------------------
# law-of-large-numbers style trace on one nested sample

@dataclass(frozen=True)
class TraceRow:
    n: int
    value: float
    scaled: float


def lln_trace(cfg: ExperimentConfig) -> list[TraceRow]:
    """One growing sample; reports the scaled deficit at each grid point.

    Demonstration output: a single nested trajectory, not an average.
    """
    if cfg.mode != INSCRIBED_MEAN_WIDTH:
        raise ConfigError("trace implemented for the inscribed model")
    rule = sphere_rule(cfg.dim, cfg.quad_m)
    engine = _InscribedEngine(cfg, rule)
    n_max = cfg.n_grid[-1]
    rng = StreamKey(cfg.seed, 0, Role.POINT).generator()
    pts = sample_points(cfg.rho, n_max, rng)
    prefix = kernels.prefix_hull_support(pts, rule.nodes, list(cfg.n_grid))
    rows = []
    for row, n in enumerate(cfg.n_grid):
        inner = cfg.q.integral0(prefix[row], rule.nodes)
        val = engine.w_body - engine.front * float(inner @ rule.weights)
        rows.append(TraceRow(n, val, n ** (2.0 / (cfg.dim + 1)) * val))
    return rows
