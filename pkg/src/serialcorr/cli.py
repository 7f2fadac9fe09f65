"""``serialcorr`` command line.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from importlib import metadata
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import io as sio
from .errors import SerialCorrError
from .estimation import DEFAULT_RIDGE, run_test
from .hypothesis_tests import METHOD_ALIASES, METHODS
from .limits import compute_limits
from .montecarlo import convergence_diagnostics, diagnostics_csv, run_experiment
from .process import ArArModel, NoiseLaw, simulate

logger = logging.getLogger("serialcorr")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> List[float]:
    if text.strip() == "":
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("SERIALCORR_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SERIALCORR_SEED: expected an integer, got {env!r}") from None
    seed = int(np.random.SeedSequence().entropy % (2**63))
    logger.info("no seed given; drew seed=%d", seed)
    return seed


def _model_from_args(args) -> ArArModel:
    if getattr(args, "model", None):
        return sio.load_model(args.model)
    if args.theta is None:
        raise UsageError("either --model or --theta is required")
    noise = NoiseLaw(args.noise, args.noise_param)
    return ArArModel(args.theta, args.rho or [], noise)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="model JSON file (overrides --theta/--rho/--noise)")
    p.add_argument("--theta", type=_floats, help="AR coefficients, e.g. 0.3,-0.2,0.4")
    p.add_argument("--rho", type=_floats, default=[], help="noise AR coefficients (empty for white noise)")
    p.add_argument("--noise", choices=("gaussian", "uniform"), default="gaussian")
    p.add_argument("--noise-param", type=float, default=1.0,
                   help="variance (gaussian) or half-width (uniform)")


def cmd_simulate(args) -> int:
    model = _model_from_args(args)
    seed = _resolve_seed(args.seed)
    logger.info("simulate: seed=%d n=%d model=%s", seed, args.n, json.dumps(model.to_dict()))
    path = simulate(model, args.n, seed)
    _emit(sio.path_to_csv(path, latent=args.latent), args.out)
    if args.model_out:
        sio.dump_model(model, args.model_out)
    return EXIT_OK


def cmd_limits(args) -> int:
    model = _model_from_args(args)
    lim = compute_limits(model, args.q)
    if args.covariances:
        ell = lim.covariances.ell
        payload = {"schema": "serialcorr.covariances/1", "ell": ell.tolist(), "sigma2": model.sigma2}
    else:
        payload = lim.to_dict()
    _emit(json.dumps(payload, indent=2), args.out)
    return EXIT_OK


def cmd_test(args) -> int:
    y = sio.read_series(args.input)
    model_df = args.p if args.lb_dof_adjust else 0
    report = run_test(args.method, y, args.p, args.q, args.alpha, args.ridge, model_df)
    logger.info("test: %s", json.dumps({k: report[k] for k in ("method", "n", "p", "q", "alpha")}))
    _emit(json.dumps(report, indent=2), args.out)
    return EXIT_OK


def cmd_power(args) -> int:
    spec = sio.load_experiment(args.spec)
    overrides = {}
    if args.seed is not None or "SERIALCORR_SEED" in os.environ:
        overrides["seed"] = _resolve_seed(args.seed)
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.samples:
        overrides["keep_samples"] = True
    spec = dataclasses.replace(spec, **overrides)
    logger.info("power: spec=%s threads=%d", json.dumps(spec.to_dict()), args.threads)
    report = run_experiment(spec, workers=args.threads)
    report.meta.update(version=_version())
    _emit(report.to_csv(), args.out)
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    if args.samples:
        Path(args.samples).write_text(report.samples_csv())
    return EXIT_OK


def cmd_diagnose(args) -> int:
    model = _model_from_args(args)
    seed = _resolve_seed(args.seed)
    logger.info("diagnose: seed=%d checkpoints=%s replications=%d", seed, args.checkpoints, args.replications)
    rows = convergence_diagnostics(model, args.checkpoints, args.replications, seed)
    _emit(diagnostics_csv(rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="serialcorr", description="Residual serial-correlation tests for AR(p) models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    parser.add_argument("-q", "--quiet", action="store_true", help="do not log the run configuration")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a path to CSV")
    _add_model_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--latent", action="store_true", help="also write z and v columns")
    p.add_argument("--model-out", help="write the model spec as JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("limits", help="closed-form asymptotic quantities as JSON")
    _add_model_args(p)
    p.add_argument("--q", type=int, help="tested order (default: noise order, or 1)")
    p.add_argument("--covariances", action="store_true", help="print l_0..l_{p+q} only")
    p.add_argument("--out")
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("test", help="test a series for residual serial correlation")
    p.add_argument("--input", required=True, help="CSV with a y column")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--method", choices=METHODS + tuple(METHOD_ALIASES), default="residual_ar")
    p.add_argument("--ridge", type=float, default=DEFAULT_RIDGE)
    p.add_argument("--lb-dof-adjust", action="store_true",
                   help="use q - p degrees of freedom for Ljung-Box/Box-Pierce")
    p.add_argument("--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("power", help="Monte Carlo size/power experiment")
    p.add_argument("--spec", required=True, help="experiment JSON")
    p.add_argument("--out", help="results CSV (default stdout)")
    p.add_argument("--json", help="also write the report as JSON")
    p.add_argument("--samples", help="dump per-replication statistics to this CSV")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("diagnose", help="convergence-rate diagnostics of the AR estimator")
    _add_model_args(p)
    p.add_argument("--checkpoints", type=_ints, default=[1000, 10000, 100000])
    p.add_argument("--replications", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)
    return parser


def _configure_logging(quiet: bool) -> None:
    # configure the package logger itself: basicConfig is a no-op when the
    # root logger already has handlers (embedding applications, test runners)
    for h in list(logger.handlers):
        logger.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.WARNING if quiet else logging.INFO)
    logger.propagate = False


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.quiet)
    logger.info("serialcorr %s, numpy %s: %s", _version(), np.__version__, " ".join(argv or sys.argv[1:]))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"serialcorr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SerialCorrError, OSError) as exc:
        print(f"serialcorr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
