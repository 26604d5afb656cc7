"""Command-line front end: norms, filter checks, theorem runs, sweeps."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _dump(obj, stream=None) -> None:
    json.dump(obj, stream or sys.stdout, indent=2, default=_json_default)
    (stream or sys.stdout).write("\n")


def _parse_exponent(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _parse_frequency(value) -> float:
    """Accepts a number or 'pi/8'-style strings."""
    if isinstance(value, str) and value.startswith("pi/"):
        return math.pi / float(value[3:])
    if isinstance(value, str) and value == "pi":
        return math.pi
    return float(value)


def _cmd_norms(args) -> int:
    from .amalgam import AmalgamParams, amalgam_norm
    from .signals import signal_from_csv

    f = signal_from_csv(args.input)
    params = AmalgamParams(_parse_exponent(args.p), _parse_exponent(args.q),
                           float(args.r))
    value = amalgam_norm(f, params)
    _dump({"norm": value,
           "params": {"p": "inf" if math.isinf(params.p) else params.p,
                      "q": "inf" if math.isinf(params.q) else params.q,
                      "radius": params.radius},
           "grid": {"n_samples": f.grid.n_samples, "spacing": f.grid.spacing}})
    return 0


def _cmd_mra_verify(args) -> int:
    from .mra import (filter_by_name, riesz_bounds, verify_assumption_b,
                      verify_assumption_c)

    filt = filter_by_name(args.filter)
    lo, hi = riesz_bounds(filt)
    report = verify_assumption_b(filt, args.alpha)
    out = {"riesz": [lo, hi],
           "wiener": report.wiener.value if report.wiener.converged else "fail",
           "weighted": (report.weighted.value if report.weighted.converged
                        else "fail"),
           "assumption_c": verify_assumption_c(filt, args.alpha)}
    _dump(out)
    return 0


def _theorem_sensitivity(cfg, modulated: bool):
    from .bounds import verify_modulated, verify_sensitivity
    from .mra import MraSpace, filter_by_name
    from .signals import Grid

    grid = Grid(int(cfg.get("N", 1024)), float(cfg.get("spacing", 1.0)))
    space = MraSpace(filter_by_name(cfg.get("filter", "bspline1")),
                     float(cfg["scale"]), grid)
    amplitudes = cfg.get("amplitudes")
    if amplitudes is None and "ratios" in cfg:
        amplitudes = [float(r) * space.scale for r in cfg["ratios"]]
    trials = int(cfg.get("trials", 6))
    seed = int(cfg.get("seed", 0))
    if modulated:
        report = verify_modulated(space, amplitudes,
                                  cfg.get("omega_amplitudes", (0.0,)),
                                  trials, seed)
    else:
        net = None
        if cfg.get("network"):
            from .experiments import build_network
            net = build_network(cfg["network"], grid)
        report = verify_sensitivity(space, amplitudes, trials, seed, net)
    return report


def _theorem_besov(cfg):
    from .bounds import verify_besov
    from .deform import RandomFieldSpec, draw_random_field
    from .experiments import tent_profile_coefficients
    from .mra import MraSpace, filter_by_name
    from .signals import Grid

    grid = Grid(int(cfg.get("N", 1024)), float(cfg.get("spacing", 1.0)))
    space = MraSpace(filter_by_name(cfg.get("filter", "bspline1")),
                     float(cfg["scale"]), grid)
    half_width = float(cfg.get("half_width", space.scale))
    c = tent_profile_coefficients(space, half_width)
    seed = int(cfg.get("seed", 0))
    trials = int(cfg.get("trials", 4))
    coeffs, fields = [], []
    for i, amp in enumerate(cfg["amplitudes"]):
        for t in range(trials):
            coeffs.append(c)
            fields.append(draw_random_field(
                RandomFieldSpec(float(amp), seed, i * 65536 + t), grid))
    return verify_besov(coeffs, fields, float(cfg.get("sigma", 0.5)),
                        tuple(cfg.get("j_range", (0, 8))))


def _theorem_sharp_large(cfg):
    from .bounds import sharpness_large_regime
    from .signals import Grid

    grid = Grid(int(cfg.get("N", 1024)), float(cfg.get("spacing", 1.0)))
    return sharpness_large_regime(_parse_frequency(cfg.get("band", "pi/8")),
                                  cfg.get("rk_values", (4, 8, 16, 32, 64)),
                                  grid)


def _theorem_sharp_small(cfg):
    from .bounds import sharpness_small_regime
    from .signals import Grid

    grid = Grid(int(cfg.get("N", 1024)), float(cfg.get("spacing", 1.0)))
    return sharpness_small_regime(float(cfg["scale"]),
                                  cfg.get("n_alt", (4, 8, 16, 32)), grid,
                                  int(cfg.get("J", 8)), int(cfg.get("Q", 1)))


def _theorem_random(cfg):
    from .bounds import verify_random_mean
    from .experiments import build_network, tent_profile_coefficients
    from .mra import MraSpace, filter_by_name
    from .signals import Grid

    grid = Grid(int(cfg.get("N", 1024)), float(cfg.get("spacing", 1.0)))
    space = MraSpace(filter_by_name(cfg.get("filter", "bspline1")),
                     float(cfg["scale"]), grid)
    half_width = float(cfg.get("half_width", 4 * space.scale))
    c = tent_profile_coefficients(space, half_width)
    net = None
    if cfg.get("network"):
        net = build_network(cfg["network"], grid)
    return verify_random_mean(c, cfg.get("ratios", (0.125, 0.5, 1.0, 2.0, 8.0)),
                              int(cfg.get("n_mc", 48)),
                              int(cfg.get("seed", 0)), net)


def _rows_to_csv(rows, path: str) -> None:
    if not rows:
        return
    keys = sorted(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % row[k] if isinstance(row[k], float)
                              else str(row[k]) for k in keys) + "\n")


def _cmd_verify(args) -> int:
    from .bounds import BoundReport, report_rows_to_csv

    with open(args.config) as fh:
        cfg = json.load(fh)
    runners = {"sensitivity": lambda: _theorem_sensitivity(cfg, False),
               "modulated": lambda: _theorem_sensitivity(cfg, True),
               "besov": lambda: _theorem_besov(cfg),
               "sharp-large": lambda: _theorem_sharp_large(cfg),
               "sharp-small": lambda: _theorem_sharp_small(cfg),
               "random": lambda: _theorem_random(cfg)}
    result = runners[args.theorem]()
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.join(args.out, args.theorem.replace("-", "_"))
    if isinstance(result, BoundReport):
        payload = result.to_dict()
        report_rows_to_csv(result, stem + "_rows.csv")
    else:
        payload = result
        _rows_to_csv(result.get("rows", []), stem + "_rows.csv")
    with open(stem + "_report.json", "w") as fh:
        _dump(payload, fh)
    _dump(payload)
    return 0


def _cmd_sweep(args) -> int:
    from .experiments import (build_network, amplitude_grid, plot_sweep,
                              scale_estimate_from_sweep, stability_sweep,
                              sweep_to_csv, tent_profile_coefficients,
                              wls_cubic_fit)
    from .mra import MraSpace, filter_by_name
    from .signals import Grid

    with open(args.config) as fh:
        cfg = json.load(fh)
    sig = cfg["signal"]
    if sig.get("kind", "tent") != "tent":
        raise SystemExit("only tent signals are wired into the sweep command")
    grid = Grid(int(sig.get("N", 1024)), float(sig.get("spacing", 1.0)))
    space = MraSpace(filter_by_name(sig.get("filter", "bspline1")),
                     float(sig["s"]), grid)
    c = tent_profile_coefficients(space, float(sig.get("half_width", sig["s"])),
                                  normalized=bool(sig.get("normalized", True)))
    net = build_network(cfg["network"], grid)
    sc = cfg["sweep"]
    a_values = amplitude_grid(float(sc["A_min"]), float(sc["A_max"]),
                              int(sc["points"]), sc.get("spacing", "log"))
    sweep = stability_sweep(c, a_values, int(sc["n_real"]), net,
                            int(cfg.get("seed", 0)))
    os.makedirs(args.out, exist_ok=True)
    sweep_to_csv(sweep, os.path.join(args.out, "sweep.csv"))
    fit = wls_cubic_fit(sweep)
    with open(os.path.join(args.out, "fit.json"), "w") as fh:
        _dump(fit.to_dict(), fh)
    estimate = scale_estimate_from_sweep(sweep)
    with open(os.path.join(args.out, "estimate.json"), "w") as fh:
        _dump(estimate.to_dict(), fh)
    plot_sweep(sweep, fit, os.path.join(args.out, "plot.svg"),
               scale_hint=float(sig["s"]))
    _dump({"s_hat_mean": estimate.mean, "ci": [estimate.ci_low, estimate.ci_high],
           "n_used": estimate.n_used, "out": args.out})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deformlab",
        description="deformation stability toolkit: norms, banks, bounds, sweeps")
    sub = parser.add_subparsers(dest="command", required=True)

    p_norms = sub.add_parser("norms", help="amalgam norm of a CSV signal")
    p_norms.add_argument("--p", required=True)
    p_norms.add_argument("--q", required=True)
    p_norms.add_argument("--r", required=True, type=float)
    p_norms.add_argument("--input", required=True)
    p_norms.set_defaults(func=_cmd_norms)

    p_mra = sub.add_parser("mra", help="filter diagnostics")
    mra_sub = p_mra.add_subparsers(dest="mra_command", required=True)
    p_mv = mra_sub.add_parser("verify", help="Riesz bounds and assumptions")
    p_mv.add_argument("--filter", required=True)
    p_mv.add_argument("--alpha", type=float, default=1.0)
    p_mv.set_defaults(func=_cmd_mra_verify)

    p_verify = sub.add_parser("verify", help="run a theorem harness")
    p_verify.add_argument("--theorem", required=True,
                          choices=["sensitivity", "besov", "sharp-large",
                                   "sharp-small", "random", "modulated"])
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--out", default=".")
    p_verify.set_defaults(func=_cmd_verify)

    p_sweep = sub.add_parser("sweep", help="random-deformation sweep pipeline")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
