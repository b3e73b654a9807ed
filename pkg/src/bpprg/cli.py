"""Command line: sample, gen, seedlen, experiment."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .bits import from_hex, to_hex
from .errors import ParameterError, SeedExhausted
from .prg import generate_traced, make_params, rescaled_epsilon, seed_length_for
from .samplers import SeedStream, almost_kwise_mask, kwise_bits, small_bias


def _frac(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from e


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise ParameterError(f"--kind {args.kind} needs {', '.join(missing)}")


def cmd_sample(args) -> int:
    seed = SeedStream(from_hex(args.seed_hex))
    if args.kind == "smallbias":
        _need(args, "mu")
        bits = small_bias(args.n, args.mu, seed)
    elif args.kind == "kwise":
        _need(args, "d", "k")
        bits = kwise_bits(args.n, args.d, args.k, seed)
    else:
        _need(args, "d", "k", "delta")
        bits = almost_kwise_mask(args.n, args.d, args.k, args.delta, seed)
    print(to_hex(bits))
    print(f"consumed={seed.cursor} n={args.n}", file=sys.stderr)
    return 0


def _params(args):
    eps = args.eps
    if args.rescale:
        eps = Fraction(rescaled_epsilon(args.n, args.w, float(eps), args.variant))
    return make_params(args.n, args.w, eps, args.variant)


def cmd_gen(args) -> int:
    params = _params(args)
    seed = SeedStream(from_hex(args.seed_hex))
    out, trace = generate_traced(args.n, args.w, params.eps, args.variant, seed, params)
    print(to_hex(out))
    if args.trace:
        for rec in trace.levels:
            print(json.dumps(rec.as_dict()))
    print(f"consumed={trace.consumed} seed_length={seed_length_for(params, args.n)} "
          f"failed={trace.failed}", file=sys.stderr)
    return 0


def cmd_seedlen(args) -> int:
    params = _params(args)
    info = params.summary()
    info["seed_length"] = seed_length_for(params, args.n)
    print(json.dumps(info))
    return 0


def cmd_experiment(args) -> int:
    from .verify import ExperimentConfig, run_experiment

    if args.config:
        cfg = ExperimentConfig.load(args.config)
        cfg.id = args.id
    else:
        cfg = ExperimentConfig(args.id)
    res = run_experiment(cfg, args.out)
    print(json.dumps(res.summary()))
    return 0 if res.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bpprg")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("sample", help="run one sampler on a hex seed")
    s.add_argument("--kind", choices=["smallbias", "kwise", "almostkwise"], required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--mu", type=_frac)
    s.add_argument("--d", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--delta", type=_frac)
    s.add_argument("--seed-hex", required=True)
    s.set_defaults(fn=cmd_sample)

    def prg_args(p):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--w", type=int, required=True)
        p.add_argument("--eps", type=_frac, required=True)
        p.add_argument("--variant", choices=["perm", "general"], default="perm")
        p.add_argument("--rescale", action=argparse.BooleanOptionalAction, default=True,
                       help="shrink eps so the end-to-end error is eps (default on)")

    g = sub.add_parser("gen", help="generator output for a hex seed")
    prg_args(g)
    g.add_argument("--seed-hex", required=True)
    g.add_argument("--trace", action="store_true")
    g.set_defaults(fn=cmd_gen)

    sl = sub.add_parser("seedlen", help="parameters and seed length, no generation")
    prg_args(sl)
    sl.set_defaults(fn=cmd_seedlen)

    e = sub.add_parser("experiment", help="run one experiment, write CSV + summary")
    e.add_argument("--id", required=True,
                   choices=["levelk", "brry", "restriction", "mainlemma", "prg", "prg-general",
                            "chernoff", "mod3", "parseval", "seedlen", "step4"])
    e.add_argument("--config")
    e.add_argument("--out", default="results")
    e.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParameterError, SeedExhausted, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
