"""Config-driven command line front end.

Runs are described by an INI-style config file with sections [domain],
[kernel], [parameters] and [run]; every output embeds the resolved config so
runs are archivable and reproducible.  Exit codes: 0 pass, 1 verification
failure, 2 config error, 3 resource/cap error.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bounds_mod
from .errors import (
    ConfigError,
    CoverageUnverifiableError,
    FamilyTooLargeError,
    RefineOmegaError,
)
from .family import count_family, enumerate_family, sample_family
from .geometry import Domain, build_partition
from .integral_op import DiscretizedOperator
from .kernels import (
    builtin_kernel,
    certified_metrics,
    estimate_metrics,
    load_tabulated_kernel,
)
from .sphere import build_sigma_net
from .verify import verify_steps, verify_bound

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3


@dataclass
class RunConfig:
    dim: int
    lower: tuple
    upper: tuple
    kernel_name: str
    kernel_params: dict = field(default_factory=dict)
    kernel_file: str | None = None
    matrix_norm: str = "spectral"
    p: float = 2.0
    r: float = 1.0
    gamma: float | None = None
    Delta: float | None = None
    delta: float | None = None
    sigma: float | None = None
    lam: float = 0.0
    epsilon: float | None = None
    quad_nodes: int = 3
    seed: int = 0
    samples: int = 200
    enum_cap: int = 10_000_000
    family_mode: str = "enumerate"
    family_samples: int = 500
    strict_metrics: bool = False
    metrics_resolution: int = 12
    output: str | None = None
    debug_bound_scale: float = 1.0


_FLOAT_FIELDS = {"p", "r", "gamma", "Delta", "delta", "sigma", "lam",
                 "epsilon", "debug_bound_scale"}
_INT_FIELDS = {"quad_nodes", "seed", "samples", "enum_cap", "family_samples",
               "metrics_resolution"}


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # Delta (partition) and delta (grid step) both occur
    cp.read_string(text)

    def need(section, key):
        if not cp.has_option(section, key):
            raise ConfigError(f"missing [{section}] {key}")
        return cp.get(section, key)

    def opt(section, key, default=None):
        return cp.get(section, key) if cp.has_option(section, key) else default

    try:
        dim = int(need("domain", "dim"))
        lower = tuple(float(v) for v in need("domain", "lower").split())
        upper = tuple(float(v) for v in need("domain", "upper").split())
    except ValueError as exc:
        raise ConfigError(f"[domain]: {exc}") from None
    if len(lower) != dim or len(upper) != dim:
        raise ConfigError("[domain] lower/upper must have `dim` entries")

    kernel_name = opt("kernel", "name", "constant")
    kernel_file = opt("kernel", "file")
    matrix_norm = opt("kernel", "matrix_norm", "spectral")
    if matrix_norm not in ("spectral", "frobenius"):
        raise ConfigError(f"[kernel] matrix_norm: unknown value {matrix_norm!r}")
    kernel_params = {}
    if cp.has_section("kernel"):
        for key, val in cp.items("kernel"):
            if key in ("name", "file", "matrix_norm"):
                continue
            try:
                kernel_params[key] = float(val)
            except ValueError:
                kernel_params[key] = val

    cfg = RunConfig(
        dim=dim, lower=lower, upper=upper,
        kernel_name=kernel_name, kernel_params=kernel_params,
        kernel_file=kernel_file, matrix_norm=matrix_norm,
    )

    alias = {"lambda": "lam"}
    for section in ("parameters", "run"):
        if not cp.has_section(section):
            continue
        for key, val in cp.items(section):
            name = alias.get(key, key)
            if name in _FLOAT_FIELDS:
                try:
                    setattr(cfg, name, float(val))
                except ValueError:
                    raise ConfigError(f"[{section}] {key}: not a number") from None
            elif name in _INT_FIELDS:
                try:
                    setattr(cfg, name, int(val))
                except ValueError:
                    raise ConfigError(f"[{section}] {key}: not an integer") from None
            elif name in ("family_mode", "output"):
                setattr(cfg, name, val)
            elif name == "strict_metrics":
                setattr(cfg, name, val.lower() in ("1", "true", "yes"))
            else:
                raise ConfigError(f"[{section}] {key}: unknown field")

    explicit = all(
        getattr(cfg, k) is not None for k in ("gamma", "Delta", "delta", "sigma")
    )
    if cfg.epsilon is None and not explicit:
        raise ConfigError(
            "[parameters]: give either epsilon or all of gamma, Delta, delta, sigma"
        )
    if cfg.epsilon is not None and explicit:
        raise ConfigError("[parameters]: epsilon and explicit parameters conflict")
    if cfg.p <= 1:
        raise ConfigError(f"[parameters] p: must exceed 1, got {cfg.p}")
    if cfg.r <= 0:
        raise ConfigError(f"[parameters] r: must be positive, got {cfg.r}")
    if cfg.family_mode not in ("enumerate", "sample"):
        raise ConfigError(f"[run] family_mode: unknown mode {cfg.family_mode!r}")
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    """Canonical INI form; parse(serialize(parse(x))) == parse(x)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["domain"] = {
        "dim": str(cfg.dim),
        "lower": " ".join(repr(v) for v in cfg.lower),
        "upper": " ".join(repr(v) for v in cfg.upper),
    }
    kern = {"name": cfg.kernel_name, "matrix_norm": cfg.matrix_norm}
    if cfg.kernel_file:
        kern["file"] = cfg.kernel_file
    for key, val in sorted(cfg.kernel_params.items()):
        kern[key] = repr(val) if isinstance(val, float) else str(val)
    cp["kernel"] = kern
    params = {"p": repr(cfg.p), "r": repr(cfg.r), "lambda": repr(cfg.lam)}
    if cfg.epsilon is not None:
        params["epsilon"] = repr(cfg.epsilon)
    else:
        for key in ("gamma", "Delta", "delta", "sigma"):
            params[key] = repr(getattr(cfg, key))
    cp["parameters"] = params
    run = {
        "quad_nodes": str(cfg.quad_nodes),
        "seed": str(cfg.seed),
        "samples": str(cfg.samples),
        "enum_cap": str(cfg.enum_cap),
        "family_mode": cfg.family_mode,
        "family_samples": str(cfg.family_samples),
        "strict_metrics": str(cfg.strict_metrics).lower(),
        "metrics_resolution": str(cfg.metrics_resolution),
        "debug_bound_scale": repr(cfg.debug_bound_scale),
    }
    if cfg.output:
        run["output"] = cfg.output
    cp["run"] = run
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _config_dict(cfg: RunConfig) -> dict:
    d = dict(cfg.__dict__)
    d["kernel_params"] = dict(cfg.kernel_params)
    d["lower"] = list(cfg.lower)
    d["upper"] = list(cfg.upper)
    return d


def resolve(cfg: RunConfig):
    """Build (domain, kernel, metrics) and fill in epsilon-mode parameters."""
    domain = Domain(np.array(cfg.lower), np.array(cfg.upper))

    if cfg.kernel_file:
        kernel, file_domain = load_tabulated_kernel(cfg.kernel_file)
        if file_domain.dim != domain.dim:
            raise ConfigError("[kernel] file: domain dimension mismatch")
    elif cfg.kernel_name == "block_diag":
        comps = []
        spec = cfg.kernel_params.get("components", "")
        for part in str(spec).split("|"):
            part = part.strip()
            if not part:
                continue
            name, _, args = part.partition(":")
            params = {}
            if args:
                for kv in args.split(","):
                    key, _, val = kv.partition("=")
                    params[key.strip()] = float(val)
            comps.append((name.strip(), params))
        if not comps:
            raise ConfigError("[kernel] components: empty block_diag")
        kernel = builtin_kernel("block_diag", domain, components=comps)
    else:
        kernel = builtin_kernel(cfg.kernel_name, domain, **cfg.kernel_params)

    if kernel.analytic is not None:
        metrics = certified_metrics(kernel)
    elif cfg.strict_metrics:
        raise ConfigError(
            "[run] strict_metrics: kernel has no analytic metrics"
        )
    else:
        deltas = np.geomspace(domain.diameter / 200.0, domain.diameter, 16)
        metrics = estimate_metrics(
            kernel, domain, deltas, cfg.metrics_resolution, cfg.matrix_norm
        )

    selection = None
    if cfg.epsilon is not None:
        selection = bounds_mod.select_parameters(
            cfg.epsilon, cfg.p, cfg.r, domain.measure, metrics,
            delta_cap=domain.diameter,
        )
        cfg.gamma = selection.gamma
        cfg.Delta = selection.delta_partition
        cfg.delta = selection.delta
        cfg.sigma = selection.sigma
        cfg.lam = selection.lam
    return domain, kernel, metrics, selection


def _dump_json(obj, path: str | None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("OPNET_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# commands


def cmd_bound(cfg: RunConfig) -> int:
    domain, kernel, metrics, selection = resolve(cfg)
    breakdown = bounds_mod.error_bound(
        cfg.p, cfg.r, domain.measure, cfg.lam, cfg.gamma, cfg.Delta,
        cfg.delta, cfg.sigma, metrics, strict=cfg.strict_metrics,
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_dict(cfg),
        "breakdown": breakdown.to_dict(),
    }
    if selection is not None:
        payload["selection"] = selection.to_dict()
    print(_dump_json(payload, cfg.output), end="")
    return EXIT_OK


def cmd_build(cfg: RunConfig) -> int:
    domain, kernel, metrics, _ = resolve(cfg)
    partition = build_partition(domain, cfg.Delta, nodes_per_axis=cfg.quad_nodes)
    import math as _math

    a = max(1, _math.ceil(cfg.gamma / cfg.delta * (1.0 - 1e-12)))
    from .family import build_magnitude_grid

    grid = build_magnitude_grid(cfg.gamma, a)
    net = build_sigma_net(kernel.n, cfg.sigma, seed=cfg.seed)
    count = count_family(partition, grid, net, cfg.p, cfg.r)

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_dict(cfg),
        "family_count": str(count),
        "cells": partition.num_cells,
        "net_size": net.size,
        "magnitude_levels": grid.a + 1,
    }
    out = cfg.output or "family"
    os.makedirs(out, exist_ok=True)
    _dump_json(manifest, os.path.join(out, "manifest.json"))

    if cfg.family_mode == "enumerate" and count > cfg.enum_cap:
        print(_dump_json(manifest, None), end="")
        print(f"family too large to enumerate ({count} > cap {cfg.enum_cap}); "
              "set family_mode = sample", file=sys.stderr)
        return EXIT_RESOURCE

    if cfg.family_mode == "enumerate":
        family = list(enumerate_family(partition, grid, net, cfg.p, cfg.r,
                                       cap=cfg.enum_cap))
    else:
        family = sample_family(partition, grid, net, cfg.p, cfg.r,
                               cfg.family_samples, cfg.seed)

    op = DiscretizedOperator(kernel, partition)
    n_cells = partition.num_cells
    with open(os.path.join(out, "family.csv"), "w") as fh:
        cols = [f"mag_{i}" for i in range(n_cells)] + \
               [f"dir_{i}" for i in range(n_cells)]
        fh.write(",".join(cols) + "\n")
        for f in family:
            row = [str(int(v)) for v in f.mag_idx] + \
                  [str(int(v)) for v in f.dir_idx]
            fh.write(",".join(row) + "\n")
    with open(os.path.join(out, "images.csv"), "w") as fh:
        p_nodes = partition.points.shape[0]
        cols = [f"node{i}_{j}" for i in range(p_nodes) for j in range(kernel.m)]
        fh.write(",".join(cols) + "\n")
        for f in family:
            y = op.apply(f)
            fh.write(",".join(repr(float(v)) for v in y.values.ravel()) + "\n")
    print(_dump_json(manifest, None), end="")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    domain, kernel, metrics, selection = resolve(cfg)
    threads = _threads()
    steps_report = verify_steps(
        kernel, domain, cfg.p, cfg.r, cfg.gamma, cfg.Delta, cfg.delta,
        cfg.sigma, cfg.samples, cfg.seed, metrics, cfg.quad_nodes,
        bound_scale=cfg.debug_bound_scale,
    )
    bound_report = verify_bound(
        kernel, domain, cfg.p, cfg.r, cfg.gamma, cfg.Delta, cfg.delta,
        cfg.sigma, cfg.samples, cfg.seed, cfg.lam, metrics, cfg.quad_nodes,
        family_mode=cfg.family_mode, enum_cap=cfg.enum_cap,
        family_samples=cfg.family_samples,
        bound_scale=cfg.debug_bound_scale, threads=threads,
    )
    passed = steps_report.passed and bound_report.passed
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_dict(cfg),
        "steps_report": steps_report.to_dict(),
        "bound_report": bound_report.to_dict(),
        "passed": passed,
    }
    _dump_json(payload, cfg.output)
    print(f"certified total: {bound_report.certified_total:.6g}")
    print(f"observed directed distance: "
          f"{bound_report.directed_sampled_to_family:.6g}")
    print(f"ratio observed/certified: {bound_report.ratio:.6g}")
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_VERIFY_FAIL


def cmd_sweep(cfg: RunConfig, axis: str, values: list[float]) -> int:
    if axis not in ("gamma", "Delta", "delta", "sigma", "lam"):
        raise ConfigError(f"sweep axis: unknown parameter {axis!r}")
    domain, kernel, metrics, _ = resolve(cfg)
    threads = _threads()
    rows = []
    for value in values:
        kwargs = {
            "gamma": cfg.gamma, "Delta": cfg.Delta, "delta": cfg.delta,
            "sigma": cfg.sigma, "lam": cfg.lam,
        }
        kwargs[axis] = value
        report = verify_bound(
            kernel, domain, cfg.p, cfg.r, kwargs["gamma"], kwargs["Delta"],
            kwargs["delta"], kwargs["sigma"], cfg.samples, cfg.seed,
            kwargs["lam"], metrics, cfg.quad_nodes,
            family_mode=cfg.family_mode, enum_cap=cfg.enum_cap,
            family_samples=cfg.family_samples, threads=threads,
        )
        rows.append((value, report.breakdown, report.certified_total,
                     report.directed_sampled_to_family))
    lines = [f"{axis},certified_total,tail_term,psi,phi,alpha,observed_distance"]
    for value, brk, total, observed in rows:
        lines.append(",".join(repr(float(v)) for v in (
            value, total, brk["tail_term"], brk["psi"], brk["phi"],
            brk["alpha"], observed,
        )))
    text = "\n".join(lines) + "\n"
    if cfg.output:
        os.makedirs(os.path.dirname(cfg.output) or ".", exist_ok=True)
        with open(cfg.output, "w") as fh:
            fh.write(text)
    print(text, end="")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="opnet",
        description="Certified finite approximation of integral-operator images",
    )
    parser.add_argument("command", choices=["bound", "build", "verify", "sweep"])
    parser.add_argument("config", help="path to the INI run config")
    parser.add_argument("--output", help="override [run] output path")
    parser.add_argument("--axis", help="sweep parameter name")
    parser.add_argument("--values", help="comma-separated sweep values")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except (OSError, configparser.Error, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output:
        cfg.output = args.output

    try:
        if args.command == "bound":
            return cmd_bound(cfg)
        if args.command == "build":
            return cmd_build(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "sweep":
            if not args.axis or not args.values:
                print("sweep needs --axis and --values", file=sys.stderr)
                return EXIT_CONFIG
            values = [float(v) for v in args.values.split(",")]
            return cmd_sweep(cfg, args.axis, values)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FamilyTooLargeError, CoverageUnverifiableError,
            RefineOmegaError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
