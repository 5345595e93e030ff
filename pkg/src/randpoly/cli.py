"""Command line front end.

Subcommands: constant, rhs, simulate, regress, efron-stein, duality, miss,
gamma-check, lln-trace. Exit codes: 0 success, 2 configuration error,
3 numerical error, 4 I/O error. The RANDPOLY_SEED environment variable
overrides the seed found in a config file.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys

import numpy as np

from . import __version__, kernels
from .errors import (
    ConfigError,
    DomainError,
    EnvelopeTooLoose,
    HypothesisError,
    NotOnBoundary,
    NumericalError,
    OriginOutside,
    Unbounded,
    Unsupported,
)
from .experiments import (
    ExperimentConfig,
    duality_test,
    efron_stein_check,
    fit_scaling,
    gamma_lemma_check,
    lln_trace,
    miss_probability,
    read_summary_csv,
    run_experiment,
    summary_path,
    trials_path,
)
from .functionals import (
    CIRCUMSCRIBED_VOLUME,
    INSCRIBED_MEAN_WIDTH,
    BandIndicator,
    Constant,
    PowerT,
    c_d_constant,
    limit_rhs,
)
from .geom import Ball, Ellipsoid, HalfspaceSet, ParallelBody, PolytopeV
from .quadrature import sphere_rule
from .sampling import RadialPower, UniformOnBody

_CONFIG_KEYS = {
    "mode",
    "dim",
    "body",
    "q",
    "rho",
    "lambda",
    "n_grid",
    "trials",
    "seed",
    "quad_m",
    "out",
}
_MODES = {
    "inscribed_mean_width": INSCRIBED_MEAN_WIDTH,
    "circumscribed_volume": CIRCUMSCRIBED_VOLUME,
}


def _require_keys(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")


def parse_body(spec: dict):
    _require_keys(spec, {"kind", "params"}, "body")
    kind = spec.get("kind")
    params = spec.get("params", {})
    if kind == "ball":
        _require_keys(params, {"center", "r"}, "ball params")
        return Ball(np.asarray(params["center"], dtype=float), float(params["r"]))
    if kind == "ellipsoid":
        _require_keys(params, {"center", "semiaxes", "frame"}, "ellipsoid params")
        center = np.asarray(params["center"], dtype=float)
        semiaxes = np.asarray(params["semiaxes"], dtype=float)
        frame = params.get("frame")
        frame = np.eye(center.shape[0]) if frame is None else np.asarray(frame, dtype=float)
        return Ellipsoid(center, frame, semiaxes)
    if kind == "polytope":
        _require_keys(params, {"vertices"}, "polytope params")
        return PolytopeV(np.asarray(params["vertices"], dtype=float))
    if kind == "halfspaces":
        _require_keys(params, {"normals", "offsets"}, "halfspaces params")
        return HalfspaceSet(
            np.asarray(params["normals"], dtype=float),
            np.asarray(params["offsets"], dtype=float),
        )
    if kind == "parallel":
        _require_keys(params, {"inner", "r"}, "parallel params")
        return ParallelBody(parse_body(params["inner"]), float(params["r"]))
    raise ConfigError(f"unknown body kind {kind!r}")


def parse_weight(spec: dict, where: str):
    _require_keys(spec, {"kind", "params"}, where)
    kind = spec.get("kind")
    params = spec.get("params", {})
    if kind == "constant":
        _require_keys(params, {"c"}, f"{where} params")
        return Constant(float(params.get("c", 1.0)))
    if kind == "power":
        _require_keys(params, {"c", "alpha"}, f"{where} params")
        return PowerT(float(params.get("c", 1.0)), float(params.get("alpha", 1.0)))
    if kind == "band":
        _require_keys(params, {"lo", "hi", "c"}, f"{where} params")
        return BandIndicator(float(params["lo"]), float(params["hi"]), float(params.get("c", 1.0)))
    raise ConfigError(f"unknown {where} kind {kind!r}")


def parse_density(spec: dict, body):
    _require_keys(spec, {"kind", "params"}, "rho")
    kind = spec.get("kind")
    params = spec.get("params", {})
    if kind == "uniform":
        _require_keys(params, set(), "rho params")
        return UniformOnBody(body)
    if kind == "radial_power":
        _require_keys(params, {"beta", "c"}, "rho params")
        coeff = params.get("c")
        return RadialPower(body, float(params["beta"]), None if coeff is None else float(coeff))
    raise ConfigError(f"unknown rho kind {kind!r}")


def load_config(path: str) -> tuple[ExperimentConfig, dict]:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    _require_keys(raw, _CONFIG_KEYS, "config")
    for key in ("mode", "dim", "body", "q", "n_grid", "trials", "seed"):
        if key not in raw:
            raise ConfigError(f"config missing required key {key!r}")
    mode = raw["mode"]
    if mode not in _MODES:
        raise ConfigError(f"mode must be one of {sorted(_MODES)}")
    body = parse_body(raw["body"])
    q = parse_weight(raw["q"], "q")
    rho = parse_density(raw["rho"], body) if "rho" in raw else None
    lam = parse_weight(raw["lambda"], "lambda") if "lambda" in raw else None
    seed = int(raw["seed"])
    env_seed = os.environ.get("RANDPOLY_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"RANDPOLY_SEED must be an integer, got {env_seed!r}") from exc
    cfg = ExperimentConfig(
        mode=_MODES[mode],
        dim=int(raw["dim"]),
        body=body,
        q=q,
        rho=rho,
        lam=lam,
        n_grid=tuple(int(x) for x in raw["n_grid"]),
        trials=int(raw["trials"]),
        seed=seed,
        quad_m=int(raw.get("quad_m", 1024)),
        out_path=raw.get("out"),
    )
    return cfg, raw


def write_manifest(base: str, command: str, raw_config: dict, seed: int, outputs: list[str]):
    manifest = {
        "artifact_version": __version__,
        "backend": kernels.BACKEND,
        "command": command,
        "config": raw_config,
        "effective_seed": seed,
        "outputs": sorted(outputs),
        "started": _START_STAMP,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = base + ".manifest.json"
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


_START_STAMP = datetime.datetime.now(datetime.timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# subcommand implementations

def _cmd_constant(args) -> int:
    print(f"{c_d_constant(args.dim):.16g}")
    return 0


def _cmd_rhs(args) -> int:
    cfg, _ = load_config(args.config)
    rule = sphere_rule(cfg.dim, cfg.quad_m)
    val = limit_rhs(cfg.mode, cfg.body, cfg.q, rule, rho_density=cfg.rho, lam=cfg.lam)
    print(f"{val:.17g}")
    return 0


def _cmd_simulate(args) -> int:
    cfg, raw = load_config(args.config)
    if args.out:
        cfg = ExperimentConfig(
            mode=cfg.mode,
            dim=cfg.dim,
            body=cfg.body,
            q=cfg.q,
            rho=cfg.rho,
            lam=cfg.lam,
            n_grid=cfg.n_grid,
            trials=cfg.trials,
            seed=cfg.seed,
            quad_m=cfg.quad_m,
            out_path=args.out,
        )
    kernels.set_threads(args.threads)
    result = run_experiment(cfg)
    print("n,trials,mean,var,ci_half,scaled_mean,scaled_var,seconds")
    for r in result.summaries:
        print(
            f"{r.n},{r.trials},{r.mean:.17g},{r.var:.17g},{r.ci_half:.17g},"
            f"{r.scaled_mean:.17g},{r.scaled_var:.17g},{r.seconds:.17g}"
        )
    if cfg.out_path:
        outs = [trials_path(cfg.out_path), summary_path(cfg.out_path)]
        write_manifest(cfg.out_path, "simulate", raw, cfg.seed, outs)
    return 0


def _cmd_regress(args) -> int:
    rows = read_summary_csv(args.input)
    fit = fit_scaling(rows, args.column)
    print(f"slope {fit.slope:.17g}")
    print(f"intercept {fit.intercept:.17g}")
    print(f"slope_stderr {fit.slope_stderr:.17g}")
    print(f"r_squared {fit.r_squared:.17g}")
    return 0


def _cmd_efron_stein(args) -> int:
    cfg, raw = load_config(args.config)
    kernels.set_threads(args.threads)
    rows = efron_stein_check(cfg)
    print("n,trials,direct_var,direct_var_ci,es_bound,es_bound_ci,holds")
    ok = True
    for r in rows:
        holds = r.es_bound >= r.direct_var - 2.0 * r.direct_var_ci
        ok = ok and holds
        print(
            f"{r.n},{r.trials},{r.direct_var:.17g},{r.direct_var_ci:.17g},"
            f"{r.es_bound:.17g},{r.es_bound_ci:.17g},{int(holds)}"
        )
    if cfg.out_path:
        lines = ["n,trials,direct_var,direct_var_ci,es_bound,es_bound_ci"]
        for r in rows:
            lines.append(
                f"{r.n},{r.trials},{r.direct_var:.17g},{r.direct_var_ci:.17g},"
                f"{r.es_bound:.17g},{r.es_bound_ci:.17g}"
            )
        path = cfg.out_path + ".efron_stein.csv"
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
        write_manifest(cfg.out_path, "efron-stein", raw, cfg.seed, [path])
    if not ok:
        raise NumericalError("Efron-Stein bound violated beyond statistical slack")
    return 0


def _cmd_duality(args) -> int:
    if args.config:
        cfg, _ = load_config(args.config)
        body, q, seed = cfg.body, cfg.q, cfg.seed
    else:
        body, q = Ball(np.zeros(args.dim), 1.0), Constant(1.0)
        seed = args.seed
    env_seed = os.environ.get("RANDPOLY_SEED")
    if env_seed is not None:
        seed = int(env_seed)
    res = duality_test(
        body,
        q,
        n=args.n,
        trials=args.trials,
        seed=seed,
        quad_m=args.quad_m,
        self_test=args.self_test,
        control_uniform=args.control,
    )
    verdict = "reject" if res.rejected else "consistent"
    print(f"ks_statistic {res.statistic:.17g}")
    print(f"ks_critical_1pct {res.critical:.17g}")
    print(f"decision {verdict}")
    return 0


def _cmd_miss(args) -> int:
    cfg, _ = load_config(args.config)
    if cfg.rho is None:
        raise ConfigError("miss needs a point density (rho) in the config")
    rows = miss_probability(cfg.body, cfg.rho, cfg.n_grid, cfg.trials, cfg.seed)
    print("n,trials,p_hat,ci_half,bound")
    for r in rows:
        print(f"{r.n},{r.trials},{r.p_hat:.17g},{r.ci_half:.17g},{r.bound:.17g}")
    return 0


def _cmd_gamma_check(args) -> int:
    res = gamma_lemma_check(args.beta, args.omega, args.dim, args.n, args.gamma_coef)
    print(f"lhs {res.lhs:.17g}")
    print(f"rhs {res.rhs:.17g}")
    print(f"ratio {res.ratio:.17g}")
    return 0


def _cmd_lln_trace(args) -> int:
    cfg, raw = load_config(args.config)
    rows = lln_trace(cfg)
    print("n,value,scaled")
    for r in rows:
        print(f"{r.n},{r.value:.17g},{r.scaled:.17g}")
    if cfg.out_path:
        lines = ["n,value,scaled"] + [
            f"{r.n},{r.value:.17g},{r.scaled:.17g}" for r in rows
        ]
        path = cfg.out_path + ".trace.csv"
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
        write_manifest(cfg.out_path, "lln-trace", raw, cfg.seed, [path])
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="randpoly",
        description="Random polytope simulations: inscribed hulls and circumscribed halfspace intersections.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constant", help="print the dimensional limit constant c_d")
    p.add_argument("--dim", type=int, required=True, choices=(2, 3))
    p.set_defaults(fn=_cmd_constant)

    p = sub.add_parser("rhs", help="print the limit right-hand side for a config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_rhs)

    p = sub.add_parser("simulate", help="run the Monte Carlo experiment in a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the config output base path")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("regress", help="log-log slope of a summary CSV column")
    p.add_argument("--input", required=True)
    p.add_argument("--column", required=True, choices=("mean", "var"))
    p.set_defaults(fn=_cmd_regress)

    p = sub.add_parser("efron-stein", help="variance bound check for the inscribed model")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=_cmd_efron_stein)

    p = sub.add_parser("duality", help="distributional equality of the two dual constructions")
    p.add_argument("--config", default=None)
    p.add_argument("--dim", type=int, default=2, choices=(2, 3))
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quad-m", type=int, default=512)
    p.add_argument("--self-test", action="store_true")
    p.add_argument("--control", action="store_true", help="uniform-density negative control")
    p.set_defaults(fn=_cmd_duality)

    p = sub.add_parser("miss", help="probability that the hull misses the origin")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_miss)

    p = sub.add_parser("gamma-check", help="scalar asymptotic integral against its closed form")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--dim", type=int, required=True, choices=(2, 3))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma-coef", type=float, default=1.0)
    p.set_defaults(fn=_cmd_gamma_check)

    p = sub.add_parser("lln-trace", help="scaled deficit along one growing sample")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_lln_trace)

    return ap


_CONFIG_ERRORS = (ConfigError, Unsupported)
_NUMERICAL_ERRORS = (
    NumericalError,
    DomainError,
    HypothesisError,
    EnvelopeTooLoose,
    Unbounded,
    OriginOutside,
    NotOnBoundary,
)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


def dispatch(argv=None) -> int:
    """main() with argparse's SystemExit flattened to a numeric exit code."""
    try:
        return main(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0


if __name__ == "__main__":
    sys.exit(main())
