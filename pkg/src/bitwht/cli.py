"""Command-line front end: transforms, noise sweeps, termination studies, training.

Every command reads an optional INI config (one section per command,
flag values win over file values, unknown keys rejected) and writes a
CSV artifact.  Outputs are byte-identical across runs for a fixed
config and seed.  Exit codes: 0 success, 2 usage or config error,
1 internal error.
"""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np

from .crossbar import CrossbarConfig, NoiseModel, failure_stats
from .earlyterm import cycle_histogram, random_termination_study
from .hadamard import bwht_forward, bwht_plan, fwht
from .network import (LossConfig, build_network, make_toy_dataset,
                      save_checkpoint, train)
from .surrogate import TauSchedule


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad numeric list {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bitwht",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="blockwise transform of a vector file")
    p.add_argument("--config", default=None)
    p.add_argument("--input", default=None, help="CSV file, one value per line")
    p.add_argument("--block", type=int, default=None, help="transform block size")
    p.add_argument("--order", choices=("natural", "sequency"), default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep-ant", help="noise/safety-margin failure-rate grid")
    p.add_argument("--config", default=None)
    p.add_argument("--sigma-ant", dest="sigma_ant", type=_float_list, default=None)
    p.add_argument("--sm", type=_float_list, default=None)
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--bits", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("earlyterm", help="Monte Carlo early-termination histogram")
    p.add_argument("--config", default=None)
    p.add_argument("--bits", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--tdist", choices=("uniform", "bimodal_near_tmax", "zero"),
                   default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("train", help="train thresholds and head on the toy task")
    p.add_argument("--config", default=None)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    p.add_argument("--tmax", type=float, default=None)
    p.add_argument("--bits", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--checkpoint", default=None)
    return parser


_DEFAULTS = {
    "transform": {"input": None, "block": 8, "order": "natural", "out": "transform.csv"},
    "sweep-ant": {"sigma_ant": [0.0, 0.25, 0.5], "sm": [0.0, 0.25, 0.5],
                  "rows": 16, "cols": 16, "bits": 8, "trials": 1000,
                  "seed": 0, "out": "sweep_ant.csv"},
    "earlyterm": {"bits": 8, "cols": 16, "trials": 10000, "tdist": "bimodal_near_tmax",
                  "seed": 0, "out": "earlyterm.csv"},
    "train": {"classes": 2, "dim": 16, "samples": 50, "epochs": 10,
              "lambda_": 0.0, "tmax": 1.0, "bits": 8, "lr": 0.1, "batch": 32,
              "seed": 0, "out": "train.csv", "checkpoint": None},
}

_PARSERS = {
    "sigma_ant": _float_list, "sm": _float_list,
    "block": int, "rows": int, "cols": int, "bits": int, "trials": int,
    "seed": int, "classes": int, "dim": int, "samples": int, "epochs": int,
    "batch": int, "lambda_": float, "tmax": float, "lr": float,
}


class UsageError(Exception):
    pass


def _resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config-file section and flags; flags win."""
    command = args.command
    merged = dict(_DEFAULTS[command])
    if args.config is not None:
        ini = configparser.ConfigParser()
        read = ini.read(args.config)
        if not read:
            raise UsageError(f"cannot read config file {args.config!r}")
        if ini.has_section(command):
            for key, raw in ini.items(command):
                key = key.replace("-", "_")
                if key == "lambda":
                    key = "lambda_"
                if key not in merged:
                    raise UsageError(f"unknown config key {key!r} in [{command}]")
                merged[key] = _PARSERS.get(key, str)(raw)
    for key in merged:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def cmd_transform(opts: dict) -> int:
    if opts["input"] is None:
        raise UsageError("transform needs --input")
    try:
        with open(opts["input"]) as fh:
            values = [float(line) for line in fh if line.strip() != ""]
    except OSError as exc:
        raise UsageError(f"cannot read input: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"malformed input file: {exc}") from exc
    if not values:
        raise UsageError("input file holds no values")
    x = np.array(values, dtype=np.float64)
    plan = bwht_plan(len(x), opts["block"])
    fwd = bwht_forward(plan, x, opts["order"])
    blocks = fwd.reshape(plan.num_blocks, plan.block_size)
    back = (fwht(blocks, opts["order"]) / plan.block_size).reshape(-1)
    with open(opts["out"], "w") as fh:
        fh.write("index,forward,roundtrip\n")
        for i in range(plan.padded_dim):
            fh.write(f"{i},{float(fwd[i])!r},{float(back[i])!r}\n")
    return 0


def cmd_sweep_ant(opts: dict) -> int:
    if not opts["sigma_ant"] or not opts["sm"]:
        raise UsageError("sweep-ant needs non-empty sigma_ant and sm grids")
    matrix = np.ones((opts["rows"], opts["cols"]), dtype=np.int8)
    cfg = CrossbarConfig(matrix=matrix)
    rows = []
    for sigma in sorted(opts["sigma_ant"]):
        for sm in sorted(opts["sm"]):
            noise = NoiseModel(sigma_ant=sigma, safety_margin=sm, seed=opts["seed"])
            rate = failure_stats(cfg, noise, opts["trials"], num_bits=opts["bits"])
            rows.append((sigma, sm, rate))
    with open(opts["out"], "w") as fh:
        fh.write("sigma_ant,sm,failure_rate\n")
        for sigma, sm, rate in rows:
            fh.write(f"{sigma!r},{sm!r},{rate!r}\n")
    return 0


def _sample_thresholds(tdist: str, num_bits: int, trials: int,
                       rng: np.random.Generator) -> np.ndarray:
    t_max = (1 << num_bits) - 1
    if tdist == "zero":
        # degenerate baseline: termination can never fire, every trial
        # runs all bitplanes
        return np.zeros(trials, dtype=np.int64)
    if tdist == "uniform":
        return rng.integers(0, t_max + 1, size=trials, dtype=np.int64)
    if tdist == "bimodal_near_tmax":
        # clamp-saturated thresholds with a thin inward tail, the shape the
        # regularized training runs produce (most mass exactly at T_max)
        at_peak = rng.random(trials) < 0.85
        tail = np.clip(1.0 - np.abs(rng.normal(0.0, 0.1, size=trials)), 0.0, 1.0)
        frac = np.where(at_peak, 1.0, tail)
        return np.floor(frac * t_max + 0.5).astype(np.int64)
    raise UsageError(f"unknown threshold distribution {tdist!r}")


def cmd_earlyterm(opts: dict) -> int:
    rng = np.random.default_rng(opts["seed"])
    thresholds = _sample_thresholds(opts["tdist"], opts["bits"], opts["trials"], rng)
    trace = random_termination_study(opts["bits"], opts["cols"], opts["trials"],
                                     thresholds, seed=opts["seed"] + 1)
    hist = cycle_histogram(trace)
    with open(opts["out"], "w") as fh:
        fh.write("cycles,count\n")
        for c in range(1, hist.num_bits + 1):
            fh.write(f"{c},{int(hist.counts[c - 1])}\n")
        fh.write(f"mean,{hist.mean!r}\n")
    return 0


def cmd_train(opts: dict) -> int:
    dataset = make_toy_dataset(opts["classes"], opts["dim"], opts["samples"],
                               seed=opts["seed"])
    model = build_network(opts["dim"], [(opts["dim"], "expand")], opts["classes"],
                          num_bits=opts["bits"], t_max=opts["tmax"],
                          seed=opts["seed"])
    cfg = LossConfig(lambda_=opts["lambda_"], t_max=opts["tmax"])
    report = train(model, dataset, opts["epochs"], TauSchedule(), cfg,
                   seed=opts["seed"], lr=opts["lr"], batch_size=opts["batch"])
    report.to_csv(opts["out"])
    if opts["checkpoint"] is not None:
        save_checkpoint(model, opts["checkpoint"])
    return 0


_COMMANDS = {
    "transform": cmd_transform,
    "sweep-ant": cmd_sweep_ant,
    "earlyterm": cmd_earlyterm,
    "train": cmd_train,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = _resolve(args)
        return _COMMANDS[args.command](opts)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface anything else as internal
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
