"""Batch front-end: every verification as a reproducible command with
machine-readable output.

Each subcommand resolves its configuration (flags or a single JSON config
document via `run --config`), executes, writes a JSON report embedding the
resolved configuration, its SHA-256 hash, package/library versions and the
tolerances used, and exits 0 when every pass flag is true.  Exit code 2
signals a configuration/schema problem, 3 a numerical precondition failure.
Identical configuration and seeds produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from . import __version__
from .interactions import (
    EstimateSpec,
    closed_mass_conjugate,
    closed_mass_plain,
    monte_carlo_mass_plain,
    quadrature_mass_conjugate,
)
from .mb import (
    critical_point_test,
    extremiser_ascent,
    gaussian_fit_residual,
    mb_residual,
    pq_maps,
    sample_collisions,
)
from .oracle import oracle_deficit
from .special_functions import (
    carneiro_constant,
    check_duplication_consistency,
    ot_classical_constant,
    ot_general_constant,
    pv_constant,
)
from .spectral import (
    GaussianDatum,
    Geometry,
    GridField,
    GridResolutionError,
    SpaceTimeGrid,
    random_band_limited,
    random_band_pair,
    render_gaussian,
)
from .verify import (
    complete_monotonicity_check,
    curve_to_csv,
    heat_flow_curve,
    verify_estimate,
    verify_foschi_benchmarks,
    verify_identity_1d_conjugate,
    verify_identity_1d_dispersive,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# Tuned grid presets: (n, extent, n_t, T, band, loc_width) per use.
PRESETS = {
    ("conjugate", 1): dict(n=2048, extent=330.0, n_t=1024, T=50.0, band=4.0, loc_width=1.2),
    ("plain", 1): dict(n=2048, extent=190.0, n_t=1024, T=20.0, band=3.0, loc_width=1.2),
    ("conjugate", 2): dict(n=256, extent=56.0, n_t=256, T=6.0, band=3.0, loc_width=1.5),
    ("plain", 2): dict(n=128, extent=30.0, n_t=256, T=5.0, band=2.0, loc_width=1.5),
}


def _grid_from_args(args, family: str, d: int):
    preset = PRESETS[(family, d)]
    n = args.n or preset["n"]
    extent = args.extent or preset["extent"]
    n_t = args.nt or preset["n_t"]
    t_half = args.time_extent or preset["T"]
    geo = Geometry(d, n, extent)
    return geo, SpaceTimeGrid(geo, n_t, t_half), preset


def _data_from_args(args, geo, preset):
    if args.data == "gaussian":
        a = complex(args.a_re, args.a_im)
        b = [complex(br, bi) for br, bi in zip(args.b_re, args.b_im)]
        datum = GaussianDatum(a, b)
        u0 = render_gaussian(datum, geo)
        return u0, u0
    if args.data == "random":
        band = args.band or preset["band"]
        loc = args.loc_width or preset["loc_width"]
        u0 = random_band_limited(geo, band, loc, seed=args.seed)
        v0 = random_band_limited(geo, band, loc, seed=args.seed + 10_000)
        return u0, v0
    if args.data == "random-pair":
        band = args.band or preset["band"]
        loc = args.loc_width or preset["loc_width"]
        return random_band_pair(geo, centre=2.0 * band, band=band, loc_width=loc, seed=args.seed)
    raise ValueError(f"unknown data descriptor {args.data!r}")


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------

def cmd_constants(args):
    rows = []
    ok = True
    for d in range(args.d_min, args.d_max + 1):
        dup = check_duplication_consistency(d)
        ot_case = abs(
            ot_general_constant(d, (2.0 - d) / 4.0) * (2.0 * math.pi) ** (2 * d)
            - ot_classical_constant(d)
        ) / ot_classical_constant(d)
        pv_case = abs(ot_general_constant(d, (3.0 - d) / 4.0) - pv_constant(d)) / pv_constant(d)
        row = {
            "d": d,
            "OT": ot_classical_constant(d),
            "C": carneiro_constant(d),
            "PV": pv_constant(d),
            "OT_sigma0": ot_general_constant(d, 0.0),
            "duplication_residual": dup,
            "ot_case_residual": ot_case,
            "pv_case_residual": pv_case,
        }
        ok = ok and dup <= 1e-13 and ot_case <= 1e-12 and pv_case <= 1e-12
        rows.append(row)
    return {"table": rows}, ok


def cmd_verify(args):
    spec = EstimateSpec(args.family, args.d, args.exponent)
    geo, st, preset = _grid_from_args(args, args.family, args.d)
    u0, v0 = _data_from_args(args, geo, preset)
    report = verify_estimate(spec, u0, v0, st, tol_rel=args.tol_rel)
    return {"report": report.to_dict()}, report.passed


def cmd_identity1d(args):
    geo, st, preset = _grid_from_args(args, args.family, 1)
    if args.family == "conjugate":
        u0, v0 = _data_from_args(args, geo, preset)
        report = verify_identity_1d_conjugate(u0, v0, args.exponent, st, tol_rel=args.tol_rel)
    else:
        if args.data == "random-pair":
            u0, v0 = _data_from_args(args, geo, preset)
        else:
            u0, v0 = _data_from_args(args, geo, preset)
        report = verify_identity_1d_dispersive(
            u0, v0, args.exponent, st, variant=args.variant, tol_rel=args.tol_rel
        )
    return {"report": report.to_dict()}, report.passed


def cmd_benchmarks(args):
    out = verify_foschi_benchmarks(n_random=args.trials, seed=args.seed, tol=args.tol_abs or 1e-4)
    return {"benchmarks": out}, out["passed"]


def cmd_heatflow(args):
    spec = EstimateSpec(args.family, args.d, args.exponent)
    geo, st, preset = _grid_from_args(args, args.family, args.d)
    if args.family == "plain" and args.d >= 2:
        u0, v0 = random_band_pair(
            geo, centre=2.0 * (args.band or preset["band"]),
            band=args.band or preset["band"],
            loc_width=args.loc_width or preset["loc_width"], seed=args.seed,
        )
    else:
        u0 = random_band_limited(
            geo, args.band or preset["band"], args.loc_width or preset["loc_width"], seed=args.seed
        )
        v0 = u0
    rho = np.linspace(args.rho_min, args.rho_max, args.rho_count)
    curve = heat_flow_curve(spec, u0, v0, rho, st)
    cm = complete_monotonicity_check(curve, orders=3)
    if args.csv:
        curve_to_csv(curve, args.csv)
    result = {
        "rho": [float(r) for r in curve.rho],
        "deficit": [float(x) for x in curve.deficit],
        "slack": curve.slack,
        "nonincreasing": curve.is_nonincreasing(),
        "complete_monotonicity": {
            str(j): cm[j] for j in range(1, 4)
        },
    }
    return {"heatflow": result}, bool(curve.is_nonincreasing() and cm["passed"])


def cmd_lemma_mass(args):
    rng = np.random.default_rng(args.seed)
    rows = []
    ok = True
    for trial in range(args.trials):
        z1 = rng.standard_normal(args.d) * 2.0
        z2 = rng.standard_normal(args.d) * 2.0
        if args.family == "conjugate":
            closed = closed_mass_conjugate(z1, z2, args.exponent, args.d)
            quadr = quadrature_mass_conjugate(z1, z2, args.exponent, args.d)
            rel = abs(quadr - closed) / closed
            passed = rel <= 1e-6
        else:
            closed = closed_mass_plain(z1, z2, args.exponent, args.d)
            quadr = monte_carlo_mass_plain(
                z1, z2, args.exponent, args.d, n_samples=args.mc_samples, seed=args.seed + trial
            )
            rel = abs(quadr - closed) / closed
            passed = rel <= 5e-3
        ok = ok and passed
        rows.append({"trial": trial, "closed": closed, "numeric": quadr, "rel_error": rel})
    return {"family": args.family, "rows": rows}, ok


def cmd_mb(args):
    quadruples = sample_collisions(args.d, args.n, scale=1.0, seed=args.seed)
    datum = GaussianDatum(complex(args.a_re, 0.3), [0.2 + 0.1j] * args.d, c=0.05 - 0.2j)
    stats = mb_residual(datum.evaluate, quadruples)
    result = {"gaussian": stats}
    ok = stats["max"] <= 1e-10
    if args.perturb > 0.0:
        def perturbed(points):
            return datum.evaluate(points) * (1.0 + args.perturb * np.cos(points[..., 0]))

        pstats = mb_residual(perturbed, quadruples)
        result["perturbed"] = pstats
        ok = ok and pstats["rms"] >= 1e-3
    cons = max(max(q.momentum_residual(), q.energy_residual()) for q in quadruples)
    result["worst_conservation_residual"] = cons
    return {"mb": result}, bool(ok and cons <= 1e-14)


def cmd_pq(args):
    rng = np.random.default_rng(args.seed)
    datum = GaussianDatum(-0.8 + 0.2j, [0.3 - 0.4j] * args.d, c=0.1j)
    worst_mom = worst_en = worst_inv = 0.0
    for _ in range(args.trials):
        x = rng.standard_normal(args.d)
        y = rng.standard_normal(args.d)
        if np.linalg.norm(x + y) < 1e-9:
            continue
        p, q = pq_maps(x, y)
        worst_mom = max(worst_mom, float(np.linalg.norm(p + q - x - y)))
        e_in = float(x @ x + y @ y)
        worst_en = max(worst_en, abs(float(p @ p + q @ q) - e_in) / e_in)
        f = datum.evaluate
        prod_in = f(x[None, :])[0] * f(y[None, :])[0]
        prod_out = f(p[None, :])[0] * f(q[None, :])[0]
        worst_inv = max(worst_inv, abs(prod_in - prod_out) / abs(prod_in))
    result = {
        "momentum_residual": worst_mom,
        "energy_residual": worst_en,
        "gaussian_invariance": worst_inv,
        "trials": args.trials,
    }
    ok = worst_mom <= 1e-14 and worst_en <= 1e-14 and worst_inv <= 1e-12
    return {"pq": result}, bool(ok)


def cmd_ascend(args):
    spec = EstimateSpec("conjugate", 2, 0.0)
    geo = Geometry(2, args.n, args.extent or 30.0)
    st = SpaceTimeGrid(geo, args.nt or 128, args.time_extent or 3.6)
    if args.data == "gaussian":
        init = render_gaussian(GaussianDatum(-1.0, [0.0, 0.0]), geo)
    else:
        init = random_band_limited(geo, args.band or 2.0, args.loc_width or 1.5, seed=args.seed)
    result = extremiser_ascent(spec, init, st, max_steps=args.steps, step_policy=args.policy)
    fit, _ = gaussian_fit_residual(result.field)
    history = [float(r) for r in result.ratio_history]
    if args.csv:
        np.savetxt(
            args.csv,
            np.column_stack([np.arange(len(history)), history]),
            delimiter=",",
            header="step,ratio",
            comments="",
        )
    out = {
        "history": history,
        "final_ratio": history[-1],
        "status": result.status,
        "gaussian_fit_residual": fit,
        "nondecreasing": bool(all(b >= a for a, b in zip(history, history[1:]))),
    }
    return {"ascent": out}, bool(out["nondecreasing"])


def cmd_critical(args):
    radii = [float(x) for x in args.radii.split(",")]
    rows = critical_point_test(
        args.d, args.a_re, [0.0] * args.d, radii, n_samples=args.samples, seed=args.seed
    )
    if args.csv:
        np.savetxt(
            args.csv,
            np.array([[r["R"], r["J"], r["stderr"]] for r in rows]),
            delimiter=",",
            header="R,J,stderr",
            comments="",
        )
    j0 = rows[0]["J"]
    spread = max(abs(r["J"] - j0) for r in rows)
    err = math.sqrt(sum(r["stderr"] ** 2 for r in rows))
    if args.d == 2:
        ok = spread <= 3.0 * max(err, 1e-12 * abs(j0))
    else:
        gaps = [(r["J"] - j0, math.hypot(r["stderr"], rows[0]["stderr"])) for r in rows[1:]]
        ok = all(g > 3.0 * s for g, s in gaps)
    return {"critical": {"rows": rows, "constant_within_3se": args.d == 2 and ok}}, bool(ok)


def cmd_oracle(args):
    spec = EstimateSpec(args.family, args.d, args.exponent)
    a = complex(args.a_re, args.a_im)
    b = [complex(br, bi) for br, bi in zip(args.b_re, args.b_im)]
    res = oracle_deficit(spec, a, b)
    out = {
        "lhs_sq": res.lhs_sq,
        "interaction": res.rhs_interaction,
        "constant": res.constant,
        "relative_deficit": res.relative_deficit,
    }
    return {"oracle": out}, bool(abs(res.relative_deficit) <= 1e-8)


_COMMANDS = {
    "constants": cmd_constants,
    "verify": cmd_verify,
    "identity1d": cmd_identity1d,
    "benchmarks": cmd_benchmarks,
    "heatflow": cmd_heatflow,
    "lemma-mass": cmd_lemma_mass,
    "mb": cmd_mb,
    "pq": cmd_pq,
    "ascend": cmd_ascend,
    "critical": cmd_critical,
    "oracle": cmd_oracle,
}


def _add_grid_flags(p):
    p.add_argument("--n", type=int, default=None, help="points per axis (power of two)")
    p.add_argument("--extent", type=float, default=None, help="spatial half-width L")
    p.add_argument("--nt", type=int, default=None, help="time nodes (power of two)")
    p.add_argument("--time-extent", type=float, default=None, help="time half-width T")
    p.add_argument("--band", type=float, default=None)
    p.add_argument("--loc-width", type=float, default=None)


def _add_data_flags(p):
    p.add_argument("--data", choices=["gaussian", "random", "random-pair"], default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--a-re", type=float, default=-1.0)
    p.add_argument("--a-im", type=float, default=0.0)
    p.add_argument("--b-re", type=float, nargs="*", default=None)
    p.add_argument("--b-im", type=float, nargs="*", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bistrich",
        description="verification lab for sharp bilinear space-time estimates",
    )
    parser.add_argument("--out", type=str, default=None, help="write the JSON report here")
    parser.add_argument("--tol-rel", type=float, default=1e-3)
    parser.add_argument("--tol-abs", type=float, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="sharp constants and consistency residuals")
    p.add_argument("--d-min", type=int, default=2)
    p.add_argument("--d-max", type=int, default=6)

    p = sub.add_parser("verify", help="one estimate verification on the grid")
    p.add_argument("--family", choices=["conjugate", "plain"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--exponent", "--sigma", "--beta", dest="exponent", type=float, required=True)
    _add_grid_flags(p)
    _add_data_flags(p)

    p = sub.add_parser("identity1d", help="one-dimensional identity check")
    p.add_argument("--family", choices=["conjugate", "plain"], default="conjugate")
    p.add_argument("--exponent", type=float, default=0.25)
    p.add_argument("--variant", choices=["auto", "separated", "symmetrized"], default="auto")
    _add_grid_flags(p)
    _add_data_flags(p)

    p = sub.add_parser("benchmarks", help="classical L6/L4 space-time benchmarks")
    p.add_argument("--trials", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("heatflow", help="heat-flow monotonicity curve")
    p.add_argument("--family", choices=["conjugate", "plain"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--exponent", type=float, required=True)
    p.add_argument("--rho-min", type=float, default=0.05)
    p.add_argument("--rho-max", type=float, default=0.5)
    p.add_argument("--rho-count", type=int, default=16)
    p.add_argument("--csv", type=str, default=None)
    _add_grid_flags(p)
    _add_data_flags(p)

    p = sub.add_parser("lemma-mass", help="collision-measure mass lemmas")
    p.add_argument("--family", choices=["conjugate", "plain"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--exponent", type=float, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-samples", type=int, default=1_000_000)

    p = sub.add_parser("mb", help="Maxwell-Boltzmann residual diagnostics")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--a-re", type=float, default=-1.0)
    p.add_argument("--perturb", type=float, default=0.1)

    p = sub.add_parser("pq", help="collision-sphere P/Q construction checks")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ascend", help="extremiser ascent (d=2, sigma=0)")
    p.add_argument("--data", choices=["gaussian", "random"], default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=60)
    p.add_argument("--policy", choices=["gradient", "gradient+heat"], default="gradient+heat")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--extent", type=float, default=None)
    p.add_argument("--nt", type=int, default=None)
    p.add_argument("--time-extent", type=float, default=None)
    p.add_argument("--band", type=float, default=None)
    p.add_argument("--loc-width", type=float, default=None)
    p.add_argument("--csv", type=str, default=None)

    p = sub.add_parser("critical", help="critical-point integral J(R)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--radii", type=str, default="0,1,2,4")
    p.add_argument("--a-re", type=float, default=-1.0)
    p.add_argument("--samples", type=int, default=4_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", type=str, default=None)

    p = sub.add_parser("oracle", help="closed-form Gaussian oracle deficit")
    p.add_argument("--family", choices=["conjugate", "plain"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--exponent", type=float, required=True)
    p.add_argument("--a-re", type=float, default=-1.0)
    p.add_argument("--a-im", type=float, default=0.0)
    p.add_argument("--b-re", type=float, nargs="*", default=None)
    p.add_argument("--b-im", type=float, nargs="*", default=None)

    p = sub.add_parser("run", help="execute a single JSON config document")
    p.add_argument("--config", type=str, required=True)
    return parser


def _normalize_args(args):
    dim = getattr(args, "d", 2)
    if hasattr(args, "b_re") and args.b_re is None:
        args.b_re = [0.0] * dim
    if hasattr(args, "b_im") and args.b_im is None:
        args.b_im = [0.0] * dim
    return args


def _args_from_config(parser, path):
    with open(path) as fh:
        doc = json.load(fh)
    if "command" not in doc:
        raise KeyError("config document must name a 'command'")
    command = doc.pop("command")
    if command not in _COMMANDS:
        raise KeyError(f"unknown command {command!r}")
    argv = [command]
    known = set()
    for action in parser._subparsers._group_actions[0].choices[command]._actions:
        for opt in action.option_strings:
            known.add(opt.lstrip("-").replace("-", "_"))
    for key, value in doc.items():
        norm = key.replace("-", "_")
        if norm not in known and norm not in ("out", "tol_rel", "tol_abs"):
            raise KeyError(f"unknown config key {key!r} for command {command!r}")
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif isinstance(value, (list, tuple)):
            argv.append(flag)
            argv.extend(str(v) for v in value)
        else:
            argv.extend([flag, str(value)])
    return argv


def _resolved_config(args) -> dict:
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key in ("out",) or callable(value):
            continue
        if isinstance(value, (list, tuple)):
            cfg[key] = list(value)
        else:
            cfg[key] = value
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        try:
            expanded = _args_from_config(parser, args.config)
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        out_path = args.out
        args = parser.parse_args(expanded)
        args.out = args.out or out_path
    args = _normalize_args(args)

    try:
        results, passed = _COMMANDS[args.command](args)
    except (GridResolutionError, ValueError, ZeroDivisionError) as exc:
        print(f"numerical precondition failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    config = _resolved_config(args)
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    report = {
        "command": args.command,
        "config": config,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "versions": {
            "bistrich": __version__,
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        "tolerance_provenance": {
            "tol_rel": getattr(args, "tol_rel", None),
            "tol_abs": getattr(args, "tol_abs", None),
        },
        "results": results,
        "passed": bool(passed),
    }
    payload = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return EXIT_OK if passed else 1


if __name__ == "__main__":
    sys.exit(main())
