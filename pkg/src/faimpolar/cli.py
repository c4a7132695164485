"""Command-line front end.

Model file schema (JSON, unknown fields rejected)::

    {
      "num_states": S,
      "input_arity": L,
      "output_alphabet_size": Y,
      "kernel": [[[[T[s][x][y][s'] for s' in S] for y in Y] for x in L] for s in S]
    }

``T[s][x][y][s']`` is ``P(X = x, Y = y, S' = s' | S = s)``; each ``T[s]``
must sum to one.  ``--model`` also accepts the shorthands ``bsc:P``,
``bec:E`` (uniform input) and ``ge:P_GB,P_BG,E_G,E_B`` (Gilbert-Elliott
with uniform input).

Exit codes: 0 ok, 1 verification failure, 2 configuration error, 3 model
error, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, verify
from .codec import run_trials
from .construct import CRITERIA, frozen_set, polarization_fractions
from .evolve import DEFAULT_BUDGET, index_stats
from .exceptions import BudgetExceeded, FaimError, ImpossibleInput, ModelError
from .model import bec, bsc, gilbert_elliott, load_model, memoryless_from_channel, validate
from .reports import TRIAL_COLUMNS, read_csv, render, stats_csv

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_MODEL, EXIT_BUDGET = 0, 1, 2, 3, 4


class ConfigError(Exception):
    pass


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _betas(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad beta list {text!r}") from None
    if not values or any(not 0 < b < 1 for b in values):
        raise argparse.ArgumentTypeError("beta values must lie in (0, 1)")
    return values


def _shorthand(spec):
    kind, _, args = spec.partition(":")
    try:
        vals = [float(v) for v in args.split(",")]
    except ValueError:
        raise ConfigError(f"bad model shorthand {spec!r}") from None
    if kind == "bsc" and len(vals) == 1:
        return memoryless_from_channel(bsc(vals[0]))
    if kind == "bec" and len(vals) == 1:
        return memoryless_from_channel(bec(vals[0]))
    if kind == "ge" and len(vals) == 4:
        return gilbert_elliott(*vals)
    raise ConfigError(f"bad model shorthand {spec!r}")


def resolve_model(spec):
    if spec is None:
        raise ConfigError("--model is required")
    if not os.path.exists(spec) and spec.split(":", 1)[0] in ("bsc", "bec", "ge"):
        model = _shorthand(spec)
    else:
        if not os.path.isfile(spec):
            raise ConfigError(f"model file not found: {spec}")
        try:
            model = load_model(spec)
        except json.JSONDecodeError as exc:
            raise ModelError(f"model file is not valid JSON: {exc}") from None
    validate(model)
    return model


def _block_steps(args):
    if args.N is not None:
        n = int(args.N).bit_length() - 1
        if 2**n != args.N:
            raise ConfigError(f"--N must be a power of two, got {args.N}")
        return n
    if args.n is None:
        raise ConfigError("one of --n or --N is required")
    return args.n


def _method(args):
    return "exact" if args.exact else "mc" if args.mc else "auto"


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _stats(args, model, n):
    return index_stats(model, n, _method(args), args.budget, args.samples, args.seed, args.threads)


def cmd_analyze(args):
    model = resolve_model(args.model)
    n = _block_steps(args)
    stats, mode = _stats(args, model, n)
    mask = frozen_set(stats, args.rate, args.criterion).frozen_mask if args.rate is not None else None
    meta = dict(model_sha256=model.sha256(), seed=args.seed, mode=mode, N=2**n)
    if mode == "mc":
        meta["samples"] = args.samples
    _emit(stats_csv(stats, mask, **meta), args.out)
    for beta in args.beta:
        f = polarization_fractions(stats, beta)
        print(f"beta={beta}: low={float(f.low):.4f} high={float(f.high):.4f} "
              f"middle={float(f.middle):.4f} threshold={f.threshold:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_construct(args):
    model = resolve_model(args.model)
    n = _block_steps(args)
    stats, mode = _stats(args, model, n)
    design = frozen_set(stats, args.rate, args.criterion)
    meta = dict(model_sha256=model.sha256(), seed=args.seed, mode=mode, N=2**n, rate=args.rate,
                criterion=args.criterion)
    _emit(stats_csv(stats, design.frozen_mask, **meta), args.out)
    print("frozen: " + ",".join(str(i) for i in design.frozen), file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args):
    model = resolve_model(args.model)
    n = _block_steps(args)
    stats, mode = _stats(args, model, n)
    design = frozen_set(stats, args.rate, args.criterion)
    try:
        result = run_trials(model, design, args.trials, seed=args.seed, threads=args.threads)
    except ImpossibleInput as exc:
        raise ModelError(str(exc)) from None
    meta = dict(model_sha256=model.sha256(), seed=args.seed, design=mode, N=2**n, rate=args.rate,
                criterion=args.criterion, trials=args.trials)
    _emit(render(result.rows(), TRIAL_COLUMNS, **meta), args.out)
    lo, hi = result.fer_interval()
    print(f"FER={result.fer:.6g} (95% CI {lo:.4g}..{hi:.4g}) BER={result.ber:.6g} "
          f"contradictions={result.contradictions}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    rng = np.random.default_rng(args.seed)
    results = []
    if args.stats:
        if not os.path.isfile(args.stats):
            raise ConfigError(f"stats file not found: {args.stats}")
        with open(args.stats) as fh:
            meta, rows = read_csv(fh.read())
        if not rows or "Z" not in rows[0]:
            raise ConfigError(f"{args.stats} is not a stats report")
        results += verify.check_stats_rows(rows, exact=meta.get("mode") == "exact")
    if args.theta_grid:
        results += verify.check_theta_grid(args.theta_grid)
    if args.model:
        results += verify.model_suite(resolve_model(args.model))
    if args.random_models:
        results += verify.parameter_suite(rng, args.joints) + verify.random_model_suite(rng, args.random_models)
    if not results:
        results = verify.parameter_suite(rng, args.joints)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="faimpolar", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"faimpolar {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model JSON file or shorthand")
    common.add_argument("--seed", type=_nonneg_int, default=0)
    common.add_argument("--out", help="output CSV path (default stdout)")
    common.add_argument("--threads", type=_positive_int, default=1)

    block = argparse.ArgumentParser(add_help=False)
    size = block.add_mutually_exclusive_group()
    size.add_argument("--n", type=_nonneg_int, help="number of polarization steps (N = 2^n)")
    size.add_argument("--N", type=_positive_int, help="block length, a power of two")
    block.add_argument("--samples", type=_positive_int, default=10_000, help="Monte Carlo samples")
    block.add_argument("--budget", type=_positive_int, default=DEFAULT_BUDGET,
                       help="largest observation alphabet kept by exact evolution")
    block.add_argument("--criterion", choices=CRITERIA, default="Z")
    mode = block.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact evolution only")
    mode.add_argument("--mc", action="store_true", help="Monte Carlo only")

    p = sub.add_parser("analyze", parents=[common, block], help="per-index statistics")
    p.add_argument("--beta", type=_betas, default=[0.3], help="comma-separated beta list")
    p.add_argument("--rate", type=float, help="also mark the frozen set for this rate")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("construct", parents=[common, block], help="frozen set for a rate")
    p.add_argument("--rate", type=float, default=0.5)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("simulate", parents=[common, block], help="SC decoding trials")
    p.add_argument("--rate", type=float, default=0.5)
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="run invariant checks")
    p.add_argument("--random-models", type=_nonneg_int, default=0)
    p.add_argument("--theta-grid", type=_nonneg_int, default=0)
    p.add_argument("--joints", type=_positive_int, default=10_000, help="random joints per parameter check")
    p.add_argument("--stats", help="stats CSV to check")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FaimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
