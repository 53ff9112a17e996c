#!/usr/bin/env python3
"""Decode-error curve for reliable leakage with independent leakers.

Sweeps the crowd size at a fixed rate below capacity and prints one row
per n with the empirical failure rate and the exact posterior audit.
"""

import argparse
from dataclasses import dataclass
from fractions import Fraction

from cryptogenography.coding import indep_capacity, run_indep_experiment


@dataclass
class SweepConfig:
    b: Fraction = Fraction(1, 2)
    c: Fraction = Fraction(2, 3)
    rate: Fraction = Fraction(1, 10)
    sizes: tuple = (25, 50, 100, 200)
    trials: int = 200
    seed: int = 20240809


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--b", default="1/2")
    parser.add_argument("--c", default="2/3")
    parser.add_argument("--rate", default="1/10")
    parser.add_argument("--sizes", default="25,50,100,200")
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--seed", type=int, default=20240809)
    args = parser.parse_args()
    cfg = SweepConfig(
        b=Fraction(args.b),
        c=Fraction(args.c),
        rate=Fraction(args.rate),
        sizes=tuple(int(s) for s in args.sizes.split(",")),
        trials=args.trials,
        seed=args.seed,
    )
    cap = indep_capacity(cfg.b, cfg.c)
    print(
        "# b=%s c=%s rate=%s (%.0f%% of capacity %.6f) trials=%d seed=%d"
        % (cfg.b, cfg.c, cfg.rate, 100 * float(cfg.rate) / cap, cap, cfg.trials, cfg.seed)
    )
    print("n,failure_rate,decode_errors,tie_errors,posterior_violations,wall_s")
    for n in cfg.sizes:
        rep = run_indep_experiment(cfg.b, cfg.c, cfg.rate, n, cfg.trials, cfg.seed)
        print(
            "%d,%.4f,%d,%d,%d,%.1f"
            % (
                n,
                rep.failure_rate,
                rep.decode_errors,
                rep.tie_errors,
                rep.posterior_violations,
                rep.wall_time,
            )
        )


if __name__ == "__main__":
    main()
