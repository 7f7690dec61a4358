"""Command line front end for the experiment harness.

Values come from built-in defaults, then an optional flat key=value config
file, then command line flags, highest precedence last. When no --out path
is given the summary document goes to stdout. Exit status is 0 on success,
2 for configuration problems, 3 for I/O problems.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .harness import CHANNEL_KINDS, MODES, ExperimentSpec, run_experiment, summary_document
from .sessions import ConfigError

__all__ = ["main", "load_config_file", "build_spec"]

_DEFAULTS = {
    "mode": "two_party",
    "d": 2,
    "m": 2,
    "n": 16,
    "trials": 1,
    "seed": 0,
    "channel": "ideal",
    "noise-p": 0.0,
    "hops": 1,
    "threshold": 0.05,
    "out": None,
    "csv": None,
    "transcript": None,
}

_INT_KEYS = {"d", "m", "n", "trials", "seed", "hops"}
_FLOAT_KEYS = {"noise-p", "threshold"}


def load_config_file(path: str) -> dict:
    """Parse `key = value` lines; blank lines and # comments are skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown field {key!r}")
        values[key] = _convert(key, value)
    return values


def _convert(key: str, value: str):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        kind = "integer" if key in _INT_KEYS else "number"
        raise ConfigError(f"field {key}: cannot parse {value!r} as {kind}") from None
    return value


def build_spec(values: dict) -> ExperimentSpec:
    return ExperimentSpec(
        mode=values["mode"],
        d=values["d"],
        m=values["m"],
        key_length=values["n"],
        trials=values["trials"],
        master_seed=values["seed"],
        channel_kind=values["channel"],
        noise_p=values["noise-p"],
        hops=values["hops"],
        abort_threshold=values["threshold"],
        output_path=values["out"],
        csv_path=values["csv"],
        transcript_path=values["transcript"],
    )


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siftfree-qkd",
        description="Run seeded key-distribution experiments and emit statistics.",
    )
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--mode", choices=MODES)
    parser.add_argument("--d", type=int, help="carrier dimension (prime)")
    parser.add_argument("--m", type=int, help="number of bases in play")
    parser.add_argument("--n", type=int, help="key length in dits (2n rounds)")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int, help="64-bit master seed")
    parser.add_argument("--channel", choices=CHANNEL_KINDS)
    parser.add_argument("--noise-p", type=float, help="depolarizing/loss probability")
    parser.add_argument("--hops", type=int, help="links in chain mode")
    parser.add_argument("--threshold", type=float, help="abort threshold")
    parser.add_argument("--out", help="summary file path (default: stdout)")
    parser.add_argument("--csv", help="per-trial CSV path")
    parser.add_argument("--transcript", help="trial-0 transcript path")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    values = dict(_DEFAULTS)
    try:
        if args.config:
            values.update(load_config_file(args.config))
        for key in _DEFAULTS:
            flag = getattr(args, key.replace("-", "_"))
            if flag is not None:
                values[key] = flag
        spec = build_spec(values)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run_experiment(spec)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if spec.output_path:
        print(
            f"mode={spec.mode} trials={spec.trials} "
            f"abort_fraction={summary.abort_fraction:g} "
            f"mean_error={summary.mean_error_rate:g} -> {spec.output_path}"
        )
    else:
        sys.stdout.write(summary_document(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
