"""Command-line interface.

Subcommands: estimate | test | power | ks-check | marks. All randomness
flows from --seed; when omitted a seed is chosen and printed so every run is
replayable. Exit codes: 0 ok, 2 usage, 3 data, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv as _csv
import json
import secrets
import sys
import time

import numpy as np

from . import __version__, backend
from .data import load_csv, parse_roles
from .datagen import (
    SCENARIOS,
    ScenarioSpec,
    gen_scenario,
    load_marks,
    marks_dataset,
    subsample,
)
from .errors import CbdError, InvalidInputError, SchemaError
from .estimator import WeightFunction, cbd_linear, cbd_ustat, cbd_vstat, normalized_cbd
from .harness import (
    ExperimentSpec,
    KsStudySpec,
    derive_rng,
    derive_seed,
    manifest,
    power_table_rows,
    resolve_sampler,
    run_ks_study,
    run_power,
)
from .inference import run_test
from .kernels import default_bandwidths
from .resampling import GaussianAffineSampler, ResamplePlan


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="master seed (chosen and printed if omitted)")
    p.add_argument("--threads", type=int, default=None, help="cap kernel worker threads (or CBD_THREADS)")
    p.add_argument("--output", default=None, help="output file (default: stdout)")


def _add_bandwidths(p: argparse.ArgumentParser):
    p.add_argument("--h1", type=float, default=None)
    p.add_argument("--h2", type=float, default=None)
    p.add_argument("--h0", type=float, default=None)
    p.add_argument("--h2-prime", dest="h2_prime", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cbdiv", description=__doc__)
    ap.add_argument("--version", action="version", version=f"cbdiv {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="point estimate of the conditional dependence measure")
    p_est.add_argument("--input", required=True, help="CSV with a header row")
    p_est.add_argument("--roles", required=True, help="column role map, e.g. x=1,y=2,z=3")
    p_est.add_argument("--estimator", choices=["vstat", "ustat", "linear", "normalized"], default="vstat")
    p_est.add_argument("--weight", choices=["one", "p2", "p4p4"], default="one")
    p_est.add_argument("--tuples", type=int, default=100_000, help="sampled tuples for the incomplete order-9 estimator")
    _add_bandwidths(p_est)
    _add_common(p_est)

    p_test = sub.add_parser("test", help="conditional independence test on a CSV dataset")
    p_test.add_argument("--input", required=True)
    p_test.add_argument("--roles", required=True)
    p_test.add_argument("--method", choices=["crt", "cpt", "lwb", "dlb"], required=True)
    p_test.add_argument("--M", type=int, default=200)
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--mh-steps", dest="mh_steps", type=int, default=None)
    p_test.add_argument("--weight", choices=["one", "p2", "p4p4"], default="one")
    p_test.add_argument(
        "--sampler",
        default=None,
        help="conditional model for crt/cpt, e.g. 'gaussian_affine:beta=1;mu=0;sigma=1' or 'uniform_abs'",
    )
    p_test.add_argument("--format", choices=["json", "csv"], default="json")
    _add_bandwidths(p_test)
    _add_common(p_test)

    p_pow = sub.add_parser("power", help="empirical power over a scenario grid")
    p_pow.add_argument("--scenario", required=True, help=f"one of {', '.join(SCENARIOS)}")
    p_pow.add_argument("--grid", required=True, help="e.g. r=-2:2:0.3 or n=10:100:10 or r=0,1,2")
    p_pow.add_argument("--n", type=int, default=50)
    p_pow.add_argument("--r", type=float, default=0.0)
    p_pow.add_argument("--method", choices=["crt", "cpt", "lwb", "dlb"], default="lwb")
    p_pow.add_argument("--M", type=int, default=200)
    p_pow.add_argument("--T", type=int, default=500, help="trials per grid value")
    p_pow.add_argument("--alpha", type=float, default=0.05)
    p_pow.add_argument("--weight", choices=["one", "p2", "p4p4"], default="one")
    p_pow.add_argument("--sampler", default=None, help="true | affine_shift | uniform_abs (crt/cpt)")
    p_pow.add_argument("--manifest", default=None, help="write a reproduction manifest JSON here")
    _add_common(p_pow)

    p_ks = sub.add_parser("ks-check", help="KS distribution-closeness study")
    p_ks.add_argument("--scenario", required=True)
    p_ks.add_argument(
        "--variant", choices=["observed_vs_resample", "resampler_pair"], default="resampler_pair"
    )
    p_ks.add_argument("--method", default="crt", help="first scheme (or the scheme for observed_vs_resample)")
    p_ks.add_argument("--method-b", dest="method_b", default="crt")
    p_ks.add_argument("--sampler", default=None)
    p_ks.add_argument("--sampler-b", dest="sampler_b", default=None)
    p_ks.add_argument("--r", type=float, default=0.0)
    p_ks.add_argument("--n-grid", dest="n_grid", required=True, help="e.g. 10:100:10")
    p_ks.add_argument("--trials", type=int, default=500, help="inner draws per KS decision")
    p_ks.add_argument("--replications", type=int, default=500)
    p_ks.add_argument("--M", type=int, default=200)
    _add_common(p_ks)

    p_marks = sub.add_parser("marks", help="subsampling power study on the marks benchmark CSV")
    p_marks.add_argument("--input", required=True, help="marks CSV (see README for the source)")
    p_marks.add_argument("--case", choices=["a", "b"], default="a")
    p_marks.add_argument("--sizes", default="20:80:10", help="subsample sizes")
    p_marks.add_argument("--subsamples", type=int, default=500)
    p_marks.add_argument("--method", choices=["lwb", "dlb"], default="lwb")
    p_marks.add_argument("--M", type=int, default=200)
    p_marks.add_argument("--alpha", type=float, default=0.05)
    _add_common(p_marks)

    return ap


def parse_grid(text: str):
    """Parse 'name=a:b:step' (inclusive, step-rounded) or 'name=v1,v2,...'."""
    if "=" not in text:
        raise InvalidInputError(f"grid {text!r} must look like r=-2:2:0.5 or n=10,50,100")
    name, body = text.split("=", 1)
    name = name.strip()
    if name not in ("r", "n"):
        raise InvalidInputError(f"grid variable must be r or n, got {name!r}")
    return name, parse_value_list(body)


def parse_value_list(body: str):
    body = body.strip()
    if ":" in body:
        parts = body.split(":")
        if len(parts) != 3:
            raise InvalidInputError(f"range {body!r} must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise InvalidInputError("grid step must be positive")
        count = int(round((stop - start) / step)) + 1
        values = [round(start + i * step, 10) for i in range(count) if start + i * step <= stop + 1e-9]
        return tuple(values)
    return tuple(float(v) for v in body.split(","))


def parse_sampler(text: str | None, d_z: int):
    """Parse a --sampler value for the `test` subcommand."""
    if text is None:
        return None
    if text == "uniform_abs":
        from .resampling import UniformAbsSampler

        return UniformAbsSampler()
    if text.startswith("gaussian_affine"):
        params = {"beta": "1", "mu": "0", "sigma": "1"}
        if ":" in text:
            for item in text.split(":", 1)[1].split(";"):
                if "=" not in item:
                    raise InvalidInputError(f"bad sampler parameter {item!r}")
                k, v = item.split("=", 1)
                params[k.strip()] = v
        beta = [float(v) for v in params["beta"].split(",")]
        if len(beta) == 1 and d_z > 1:
            beta = beta * d_z
        if len(beta) != d_z:
            raise InvalidInputError(f"beta needs {d_z} entries, got {len(beta)}")
        return GaussianAffineSampler(beta=[beta], mu=[float(params["mu"])], sigma=float(params["sigma"]))
    raise InvalidInputError(f"unknown sampler {text!r}")


def _ensure_seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _emit(text: str, output: str | None):
    if output is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _write_csv(rows: list[dict], output: str | None):
    import io

    buf = io.StringIO()
    writer = _csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    _emit(buf.getvalue(), output)


def _override_bandwidths(ds, args):
    bw = default_bandwidths(ds)
    overrides = {
        k: getattr(args, k) for k in ("h1", "h2", "h0", "h2_prime") if getattr(args, k) is not None
    }
    return bw.replace(**overrides) if overrides else bw


def cmd_estimate(args) -> int:
    seed = _ensure_seed(args)
    ds = load_csv(args.input, parse_roles(args.roles))
    bw = _override_bandwidths(ds, args)
    weight = WeightFunction.parse(args.weight)
    t0 = time.perf_counter()
    if args.estimator == "vstat":
        value = cbd_vstat(ds, bw, a=weight).value
    elif args.estimator == "normalized":
        value = normalized_cbd(ds, bw)
    elif args.estimator == "linear":
        value = cbd_linear(ds, bw).value
    else:
        mode = "exact" if ds.n <= 10 else "incomplete"
        value = cbd_ustat(ds, bw, mode=mode, tuples=args.tuples, rng=derive_rng(seed, "ustat")).value
    runtime_ms = 1000.0 * (time.perf_counter() - t0)
    _emit(
        json.dumps(
            {
                "value": value,
                "estimator": args.estimator,
                "bandwidths": {"h1": bw.h1, "h2": bw.h2, "h0": bw.h0, "h2_prime": bw.h2_prime},
                "weight": args.weight,
                "seed": seed,
                "runtime_ms": runtime_ms,
            }
        ),
        args.output,
    )
    return 0


def cmd_test(args) -> int:
    seed = _ensure_seed(args)
    ds = load_csv(args.input, parse_roles(args.roles))
    if args.method in ("crt", "cpt") and args.sampler is None:
        raise InvalidInputError(f"--sampler is required for method {args.method!r}")
    bw = _override_bandwidths(ds, args)
    plan = ResamplePlan(
        method=args.method,
        M=args.M,
        seed=derive_seed(seed, "test"),
        sampler=parse_sampler(args.sampler, ds.d_z),
        mh_steps=args.mh_steps,
        h2_prime=bw.h2_prime,
    )
    result = run_test(ds, plan, bw=bw, weight=WeightFunction.parse(args.weight), alpha=args.alpha)
    payload = result.to_dict()
    payload["seed"] = seed
    if args.format == "json":
        _emit(json.dumps(payload), args.output)
    else:
        row = {k: v for k, v in payload.items() if k not in ("resampled", "bandwidths")}
        _write_csv([row], args.output)
    return 0


def cmd_power(args) -> int:
    seed = _ensure_seed(args)
    grid_name, grid = parse_grid(args.grid)
    if args.scenario not in SCENARIOS:
        raise InvalidInputError(f"unknown scenario {args.scenario!r}")
    if args.method in ("crt", "cpt") and args.sampler is None:
        raise InvalidInputError(f"--sampler is required for method {args.method!r}")
    spec = ExperimentSpec(
        scenario=args.scenario,
        method=args.method,
        grid_name=grid_name,
        grid=grid,
        n=args.n,
        r=args.r,
        trials=args.T,
        M=args.M,
        alpha=args.alpha,
        weight=WeightFunction.parse(args.weight),
        sampler_id=args.sampler,
        master_seed=seed,
    )
    points = run_power(spec, workers=args.threads or 1)
    if args.manifest:
        with open(args.manifest, "w") as fh:
            json.dump(manifest(spec, seed), fh, indent=2)
    _write_csv(power_table_rows(points, spec), args.output)
    return 0


def cmd_ks_check(args) -> int:
    seed = _ensure_seed(args)
    if args.scenario not in SCENARIOS:
        raise InvalidInputError(f"unknown scenario {args.scenario!r}")
    study = KsStudySpec(
        scenario=args.scenario,
        variant=args.variant,
        method_a=args.method,
        method_b=args.method_b,
        sampler_a=args.sampler,
        sampler_b=args.sampler_b,
        r=args.r,
        trials=args.trials,
        replications=args.replications,
        M=args.M,
        master_seed=seed,
    )
    points = run_ks_study(study, parse_value_list(args.n_grid), workers=args.threads or 1)
    rows = [
        {"n": p.grid_value, "ks_power": p.power, "se": p.se, "replications": p.trials}
        for p in points
    ]
    _write_csv(rows, args.output)
    return 0


def cmd_marks(args) -> int:
    seed = _ensure_seed(args)
    table = load_marks(args.input)
    full = marks_dataset(table, args.case)
    sizes = [int(v) for v in parse_value_list(args.sizes)]
    rows = []
    for m in sizes:
        rejections = 0
        for t in range(args.subsamples):
            ds = subsample(full, m, derive_rng(seed, "marks", args.case, m, t))
            plan = ResamplePlan(
                method=args.method, M=args.M, seed=derive_seed(seed, "marks-res", args.case, m, t)
            )
            rejections += run_test(ds, plan, alpha=args.alpha).reject
        rows.append(
            {
                "m": m,
                "power": rejections / args.subsamples,
                "subsamples": args.subsamples,
                "case": args.case,
            }
        )
    _write_csv(rows, args.output)
    return 0


_HANDLERS = {
    "estimate": cmd_estimate,
    "test": cmd_test,
    "power": cmd_power,
    "ks-check": cmd_ks_check,
    "marks": cmd_marks,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", None) is not None:
        backend.set_threads(args.threads)
    try:
        return _HANDLERS[args.command](args)
    except (SchemaError, FileNotFoundError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 3
    except CbdError as exc:
        kind = type(exc).__name__
        code = 2 if isinstance(exc, InvalidInputError) else 4
        print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
        return code
    except FloatingPointError as exc:  # pragma: no cover
        print(json.dumps({"error": "FloatingPointError", "message": str(exc)}), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
