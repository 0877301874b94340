"""Command line entry point.

    flatlag curve     --config run.json --out results/
    flatlag build     --config run.json --out results/
    flatlag verify    --config run.json --out results/ [--points] [--strict-paper]
    flatlag structeq  --config run.json --out results/ [--points] [--strict-paper]

Exit codes: 0 all properties pass, 1 some property fails, 2 configuration or
domain error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as cfg
from .builders import DomainError
from .diffgeo import MetricError, twisted_geometry
from .legendre import IntegrationError, constraint_defect, integrate_curve, specialness_defect
from .report import VerificationReport, config_digest
from .structeq import low_discrepancy_points, run_structure_checks
from .verify import run_verification

log = logging.getLogger("flatlag")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _out_dir(args, config) -> Path:
    out = Path(args.out or config.get("output", {}).get("dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(config, section):
    if section not in config:
        raise cfg.ConfigError(f"<root>: '{section}' section is required for this command")
    return config[section]


def cmd_curve(args, config) -> int:
    sec = _require(config, "curve")
    n = sec["n"]
    coeffs = cfg.coefficients(sec, n)
    b = cfg._sf(sec["b"]) if "b" in sec else None
    init = cfg.initial_state(sec.get("init"), n)
    if constraint_defect(init).max > 1e-12:
        raise cfg.ConfigError("curve/init: initial state violates the frame constraints")
    traj = integrate_curve(init, coeffs, b, s_end=sec["s_end"], step=sec["step"],
                           renormalize=sec.get("renormalize", False))
    tol = sec.get("tolerance", 1e-8)
    worst = {}
    for st in traj:
        for k, v in constraint_defect(st).as_dict().items():
            worst[k] = max(worst.get(k, 0.0), v)
    special = specialness_defect(traj, coeffs).max
    out = _out_dir(args, config)
    traj.write_csv(out / "trajectory.csv")
    max_defect = max(worst.values())
    summary = {
        "spec": {"command": "curve", "config_sha256": config_digest(config)},
        "samples": len(traj),
        "tolerance": tol,
        "constraint_defects": worst,
        "max_constraint_defect": max_defect,
        "specialness_defect": special,
        "pass": bool(max_defect <= tol and special <= tol),
    }
    (out / "curve_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK if summary["pass"] else EXIT_FAIL


def cmd_build(args, config) -> int:
    sec = _require(config, "immersion")
    sampler = cfg.build_immersion(sec, strict=args.strict_paper)
    out = _out_dir(args, config)
    derivs = config.get("output", {}).get("derivatives", False)
    sampler.write_csv(out / "immersion.csv", sec.get("grid", 5), derivatives=derivs)
    return EXIT_OK


def _verify_settings(config, args):
    v = config.get("verify", {})
    strict = args.strict_paper or v.get("strict_paper_mode", False)
    return v, strict


def cmd_verify(args, config) -> int:
    sec = _require(config, "immersion")
    v, strict = _verify_settings(config, args)
    sampler = cfg.build_immersion(sec, strict=strict)
    try:
        report = run_verification(
            sampler,
            properties=v.get("properties"),
            tolerances=v.get("tolerances"),
            n_points=v.get("points", 100),
            seed=v.get("seed", 0),
            fd_step=v.get("fd_step", 1e-4),
            codazzi_step=v.get("codazzi_step", 1e-2),
            margin=v.get("margin"),
            strict=strict,
            spec={"command": "verify", "kind": sec["kind"], "config_sha256": config_digest(config)},
        )
    except ValueError as exc:
        if isinstance(exc, (DomainError, MetricError)):
            raise
        raise cfg.ConfigError(f"verify: {exc}") from exc
    include = args.points or config.get("output", {}).get("points", False)
    out = _out_dir(args, config)
    (out / "report.json").write_text(report.to_json(include_points=include))
    for p in report.properties():
        log.info("%-22s max=%.3e tol=%.1e %s", p.name, p.max_defect, p.tolerance, "PASS" if p.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAIL


STRUCTEQ_TOLERANCES = {"symmetry_a": 1e-10, "condition_b": 1e-6, "gauss_c": 1e-5, "strict_normalization": 1e-10}


def cmd_structeq(args, config) -> int:
    sec = _require(config, "structeq")
    strict = args.strict_paper or sec.get("strict_paper_mode", False)
    prof = cfg.profile(sec["profile"])
    prof.validate(sec["domain"])
    sigma = cfg.sigma_spec(sec, prof)
    h = sec.get("fd_step", 1e-4)
    pts = low_discrepancy_points(sec["domain"], sec.get("points", 50), seed=sec.get("seed", 0))
    geom = twisted_geometry(prof, fd_step=h)
    tols = dict(STRUCTEQ_TOLERANCES)
    tols.update(sec.get("tolerances", {}))
    if not strict:
        tols.pop("strict_normalization")
    report = VerificationReport(
        spec={"command": "structeq", "config_sha256": config_digest(config)},
        grid={"points": len(pts), "sequence": "halton-scrambled", "seed": sec.get("seed", 0), "fd_step": h,
              "domain": sec["domain"]},
        tolerances=tols,
        metadata={"curvature_convention": "R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z",
                  "christoffel_path": "closed-form twisted-product connection"},
    )
    for p in pts:
        r = run_structure_checks(sigma, geom, [p], prof if strict else None, h)
        rec = {"symmetry_a": r.symmetry_a, "condition_b": r.condition_b, "gauss_c": r.gauss_c.defect}
        if strict:
            rec["strict_normalization"] = r.normalization
        if r.gauss_c.sign_mismatch:
            report.metadata["gauss_sign_mismatch"] = True
        report.add_point(p, **rec)
    include = args.points or config.get("output", {}).get("points", False)
    out = _out_dir(args, config)
    (out / "structeq_report.json").write_text(report.to_json(include_points=include))
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"curve": cmd_curve, "build": cmd_build, "verify": cmd_verify, "structeq": cmd_structeq}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flatlag", description="Flat Lagrangian immersions into H^n.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (default: output.dir or .)")
        p.add_argument("--points", action="store_true", help="include per-point records in the report")
        p.add_argument("--strict-paper", action="store_true", help="require sum r_i^-2 = 1 for twist data")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = cfg.load(args.config)
        return COMMANDS[args.command](args, config)
    except cfg.ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, MetricError, IntegrationError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
