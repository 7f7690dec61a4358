"""Calibrate observed check error against the depolarizing channel strength.

A depolarizing channel of strength p replaces the transmitted qudit half
with a uniformly random Pauli kick with probability p. Only a fraction of
those kicks flip the digit Bob reads, so the check error sits below p:
at d=2 the basis-averaged flip rate is p/2, at d=3 it is 2p/3. This
script sweeps p, prints observed vs predicted rates, and flags any cell
off by more than 3 binomial sigma.

Usage:
    python3 scripts/noise_calibration.py [--key-length 512] [--trials 10]
"""

import argparse
import math

from siftfree_qkd import ExperimentSpec, run_experiment

# basis-averaged digit-flip fraction per Pauli kick, keyed by dimension
FLIP_FRACTION = {2: 0.5, 3: 2 / 3}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--key-length", type=int, default=512)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    n = args.key_length
    print(f"{'d':>3} {'p':>6} {'observed':>9} {'predicted':>10} {'3 sigma':>8}")
    for d in (2, 3):
        for p in (0.05, 0.1, 0.2, 0.3):
            spec = ExperimentSpec(
                mode="two_party", d=d, m=2, key_length=n,
                trials=args.trials, master_seed=args.seed,
                channel_kind="depolarizing", noise_p=p,
                abort_threshold=1.0,
            )
            summary = run_experiment(spec)
            predicted = FLIP_FRACTION[d] * p
            sigma = math.sqrt(predicted * (1 - predicted) / (n * args.trials))
            flag = "" if abs(summary.mean_error_rate - predicted) < 3 * sigma else "  <-- off"
            print(f"{d:>3} {p:>6.2f} {summary.mean_error_rate:>9.4f} "
                  f"{predicted:>10.4f} {3 * sigma:>8.4f}{flag}")


if __name__ == "__main__":
    main()
