"""Property suite run over deterministic sample points of an immersion."""
from __future__ import annotations

import itertools

import numpy as np

from . import diffgeo
from .builders import ConeSampler, CylinderSampler, ProfileSampler, TwistedLegendreSampler
from .report import VerificationReport
from .structeq import low_discrepancy_points

DEFAULT_TOLERANCES = {
    "metric": 1e-6,
    "flatness": 1e-4,
    "lagrangian": 1e-8,
    "umbilical_lambda": 1e-6,
    "umbilical_mu": 1e-6,
    "umbilical_residual": 1e-6,
    "ratio_spread": 1e-8,
    "codazzi_lambda": 1e-3,
    "codazzi_connection": 1e-3,
    "mixed_partials": 1e-9,
    "normality": 1e-8,
    "frame": 1e-10,
    "strict_normalization": 1e-10,
}

ALL_PROPERTIES = tuple(DEFAULT_TOLERANCES)


def default_properties(sampler) -> list[str]:
    if isinstance(sampler, (TwistedLegendreSampler, ProfileSampler)):
        props = [p for p in ALL_PROPERTIES if p != "strict_normalization"]
    elif isinstance(sampler, CylinderSampler):
        props = [p for p in ALL_PROPERTIES if p not in ("ratio_spread", "strict_normalization")]
    elif isinstance(sampler, ConeSampler):
        props = ["flatness", "lagrangian", "mixed_partials", "normality"]
    else:
        props = ["flatness", "lagrangian", "mixed_partials"]
    return props


def _legendre_ratios(sampler, x):
    """Legendre coefficients (alpha, beta, gamma) at x, if the sampler carries them."""
    if isinstance(sampler, ProfileSampler):
        return np.array([float(r(x[0])) for r in sampler.profile.ratios])
    if isinstance(sampler, TwistedLegendreSampler):
        c = sampler.coeffs
        return np.array([c.alpha(x[0]), c.beta(x[0]), c.gamma(x[0])], dtype=float)
    return None


def ratio_spread(sampler, x, margin: float) -> float:
    """Spread of sqrt(g_11) * lambda_a over points sharing x_1 but differing in the other coordinates."""
    box = sampler.domain
    choices = [(lo + margin, 0.5 * (lo + hi), hi - margin) for lo, hi in box[1:]]
    vals = []
    for u in itertools.chain([tuple(x[1:])], itertools.product(*choices)):
        p = np.array([x[0], *u])
        sff = diffgeo.second_fundamental_form(sampler, p)
        vals.append(np.sqrt(sff.metric.g[0, 0]) * sff.lam)
    vals = np.array(vals)
    return float(np.max(np.ptp(vals, axis=0)))


def run_verification(
    sampler,
    properties=None,
    tolerances=None,
    n_points: int = 100,
    seed: int = 0,
    fd_step: float = 1e-4,
    codazzi_step: float = 1e-2,
    margin: float | None = None,
    strict: bool = False,
    spec: dict | None = None,
) -> VerificationReport:
    props = list(properties) if properties else default_properties(sampler)
    if strict and "strict_normalization" not in props and _legendre_ratios(sampler, sampler.domain[:, 0]) is not None:
        props.append("strict_normalization")
    unknown = [p for p in props if p not in DEFAULT_TOLERANCES]
    if unknown:
        raise ValueError(f"unknown properties {unknown}")
    tols = {p: DEFAULT_TOLERANCES[p] for p in props}
    tols.update({k: v for k, v in (tolerances or {}).items() if k in tols})
    if margin is None:
        margin = 2 * max(fd_step, codazzi_step if any(p.startswith("codazzi") for p in props) else 0.0)
    pts = low_discrepancy_points(sampler.domain, n_points, seed=seed, margin=margin)

    report = VerificationReport(
        spec=spec or {},
        grid={
            "points": n_points,
            "sequence": "halton-scrambled",
            "seed": seed,
            "margin": margin,
            "fd_step": fd_step,
            "codazzi_step": codazzi_step,
            "domain": sampler.domain.tolist(),
        },
        tolerances=tols,
        metadata={
            "curvature_convention": "R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z",
            "christoffel_path": "projection" if sampler.analytic else "metric-differencing",
            "sampler": type(sampler).__name__,
        },
    )
    mu_max = 0.0
    for p in pts:
        rec = {}
        if "metric" in props:
            exp = sampler.expected_metric(p)
            if exp is None:
                raise ValueError("metric property requested but the sampler has no closed-form metric")
            g = diffgeo.induced_metric(sampler, p).g
            rec["metric"] = float(np.max(np.abs(g - exp)) / np.max(np.abs(exp)))
        if "flatness" in props:
            rec["flatness"] = diffgeo.curvature(sampler, p, fd_step).flatness_defect
        if "lagrangian" in props:
            rec["lagrangian"] = diffgeo.lagrangian_defect(sampler, p)
        need_sff = any(k.startswith("umbilical") or k == "normality" for k in props)
        if need_sff:
            sff = diffgeo.second_fundamental_form(sampler, p)
            mu_max = max(mu_max, sff.mu_max)
            if "umbilical_lambda" in props:
                exp = sampler.expected_lambda(p)
                if exp is None:
                    raise ValueError("umbilical_lambda requested but the sampler predicts no lambda")
                rec["umbilical_lambda"] = float(np.max(np.abs(sff.lam - exp)))
            if "umbilical_mu" in props:
                rec["umbilical_mu"] = sff.mu_max
            if "umbilical_residual" in props:
                rec["umbilical_residual"] = sff.residual
            if "normality" in props:
                rec["normality"] = sff.normality
        if "ratio_spread" in props:
            rec["ratio_spread"] = ratio_spread(sampler, p, margin)
        if "codazzi_lambda" in props or "codazzi_connection" in props:
            cz = diffgeo.codazzi_check(sampler, [p], codazzi_step)
            if "codazzi_lambda" in props:
                rec["codazzi_lambda"] = cz.lambda_defect
            if "codazzi_connection" in props:
                rec["codazzi_connection"] = cz.connection_defect
            report.metadata["codazzi_note"] = cz.note
        if "mixed_partials" in props:
            rec["mixed_partials"] = diffgeo.mixed_partial_defect(sampler, p)
        if "frame" in props:
            rec["frame"] = diffgeo.frame_defect(sampler, p)
        if "strict_normalization" in props:
            r = _legendre_ratios(sampler, p)
            rec["strict_normalization"] = abs(float(np.sum(r**-2.0)) - 1.0)
        report.add_point(p, **rec)
    report.metadata["max_abs_mu"] = mu_max
    return report
