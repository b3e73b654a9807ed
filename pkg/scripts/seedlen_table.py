#!/usr/bin/env python3
"""Seed length against n for both generators, plus the log^2 n fit.

The fit is reported over the whole range and over the recursive regime
(n above the base cutoff) separately; below the cutoff the seed is the
output itself.
"""

import argparse

from bpprg.prg import make_params
from bpprg.verify import fit_log2_squared, seedlen_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--w", type=int, default=2)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--min-exp", type=int, default=6)
    ap.add_argument("--max-exp", type=int, default=20)
    args = ap.parse_args()
    lengths = [2 ** e for e in range(args.min_exp, args.max_exp + 1)]
    for variant in ("perm", "general"):
        rows = seedlen_table(lengths, args.w, args.eps, variant)
        cutoff = make_params(lengths[0], args.w, args.eps, variant).base_cutoff
        print(f"# {variant}: w={args.w} eps={args.eps} base cutoff {cutoff:.0f}")
        print(f"{'n':>9} {'d':>3} {'k':>4} {'depth':>6} {'seed':>11} {'seed/n':>9}")
        for r in rows:
            print(f"{r['n']:>9} {r['d']:>3} {r['k']:>4} {r['depth']:>6} {r['seed_length']:>11} "
                  f"{r['seed_length'] / r['n']:>9.3f}")
        if variant == "perm":
            a, b, resid = fit_log2_squared(rows)
            print(f"fit all n:        seed ~ {a:.4g} log2(n)^2 + {b:.4g}, relative residual {resid:.4f}")
            rec = [r for r in rows if r["depth"] > 0]
            if len(rec) >= 3:
                a, b, resid = fit_log2_squared(rec)
                print(f"fit n > cutoff:   seed ~ {a:.4g} log2(n)^2 + {b:.4g}, relative residual {resid:.4f}")
        print()


if __name__ == "__main__":
    main()
