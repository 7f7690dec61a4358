"""Measure how relay depth affects key agreement over a noisy chain.

Each extra hop is one more teleportation and one more traversal of the
noisy channel, so check errors accumulate roughly linearly in hop count
until they saturate. The sweep keeps the per-hop depolarizing strength
fixed and grows the chain, printing error rate and abort fraction per
depth. With --noise-p 0 it doubles as a sanity check that relays alone
add no error.

Usage:
    python3 scripts/chain_scaling.py [--noise-p 0.05] [--max-hops 6]
"""

import argparse

from siftfree_qkd import ExperimentSpec, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise-p", type=float, default=0.05)
    ap.add_argument("--max-hops", type=int, default=6)
    ap.add_argument("--key-length", type=int, default=128)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=23)
    args = ap.parse_args()

    channel = "ideal" if args.noise_p == 0 else "depolarizing"
    print(f"chain sweep: d=2, N={args.key_length}, per-hop {channel} "
          f"p={args.noise_p}, {args.trials} trials per depth")
    print(f"{'hops':>5} {'mean err':>9} {'abort frac':>10} {'agreement':>10}")
    for hops in range(1, args.max_hops + 1):
        spec = ExperimentSpec(
            mode="chain", d=2, m=2, key_length=args.key_length,
            trials=args.trials, master_seed=args.seed,
            channel_kind=channel, noise_p=args.noise_p, hops=hops,
            abort_threshold=1.0,
        )
        summary = run_experiment(spec)
        print(f"{hops:>5} {summary.mean_error_rate:>9.4f} "
              f"{summary.abort_fraction:>10.2f} {summary.mean_agreement:>10.4f}")


if __name__ == "__main__":
    main()
