"""Command-line entry point: ``rominvert [--config cfg.json] <command> ...``.

Exit codes: 0 success, 2 configuration, 3 I/O, 4 parse, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, DataIOError, RomInvertError
from .mcmc import McmcConfig
from .pipeline import (
    EXACT,
    ROM_APPROACHES,
    ExactSurrogate,
    PipelineConfig,
    cmd_generate,
    cmd_invert_all,
    cmd_run,
    cmd_train,
    invert,
    write_cell,
)
from .rom import RomModel, RomSurrogate
from .series import read_series_csv, write_series_csv
from .vtk import SnapshotSet, build_series

log = logging.getLogger("rominvert")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rominvert",
        description="Surrogate-based Bayesian estimation of injection rate from surface displacement.",
    )
    parser.add_argument("--config", type=Path, help="pipeline config JSON; flags override its values")
    parser.add_argument("--out-dir", type=Path, help="pipeline output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write synthetic (or VTK-derived) clean and noisy series")
    p.add_argument("--rates", type=_floats, help="e.g. 100,200,300,400")
    p.add_argument("--noise-rel", type=float, help="noise std as a fraction of each series' range")
    p.add_argument("--noise-sigma", type=float, help="absolute noise std in meters")
    p.add_argument("--noise-seed", type=int)

    p = sub.add_parser("extract", help="build a displacement series from a directory of VTK snapshots")
    p.add_argument("--dir", type=Path, required=True)
    p.add_argument("--vector", default="displacement")
    p.add_argument("--dt", type=float, required=True, help="days between snapshots")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("train", help="train the LSTM surrogate for one windowing approach")
    p.add_argument("--approach", choices=ROM_APPROACHES, required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float)

    p = sub.add_parser("invert", help="adaptive Metropolis inversion (one file pair or every configured cell)")
    p.add_argument("--data", type=Path, help="noisy series CSV; omit to run every configured cell")
    p.add_argument("--model", type=Path, help="surrogate model JSON")
    p.add_argument("--exact", action="store_true", help="use the synthetic generator as the surrogate")
    p.add_argument("--q-true", type=float, help="ground-truth rate, for the relative error")
    p.add_argument("--out", type=Path, help="output stem for <stem>.csv and <stem>.json")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--q0", type=float)
    p.add_argument("--bounds", type=_floats)
    p.add_argument("--adapt", type=int, help="covariance adaptation interval m0")
    p.add_argument("--burn", type=float, help="burn-in fraction")
    p.add_argument("--sweep", type=_ints, help="sample counts for the configured cells")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("compare", help="tabulate and plot all inversion cells")

    p = sub.add_parser("run", help="generate, train, invert and compare in one go")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    updates = {}
    if args.out_dir is not None:
        updates["out_dir"] = args.out_dir
    if args.command == "generate":
        for flag, key in (("rates", "rates"), ("noise_rel", "noise_rel"),
                          ("noise_sigma", "noise_sigma"), ("noise_seed", "noise_seed")):
            if getattr(args, flag) is not None:
                updates[key] = getattr(args, flag)
    if args.command == "train":
        tc = cfg.train[args.approach]
        tweaks = {k: getattr(args, k) for k in ("epochs", "seed", "lr") if getattr(args, k) is not None}
        if tweaks:
            updates["train"] = {**cfg.train, args.approach: replace(tc, **tweaks)}
    if args.command == "invert":
        updates["mcmc"] = _mcmc_overrides(cfg.mcmc, args)
        if args.sweep is not None:
            updates["sweep"] = args.sweep
    if updates:
        cfg = PipelineConfig.from_dict({**cfg.to_dict(), **_plain(updates)})
    return cfg


def _plain(updates: dict) -> dict:
    out = dict(updates)
    if "out_dir" in out:
        out["out_dir"] = str(out["out_dir"])
    if "train" in out:
        out["train"] = {a: c.to_dict() for a, c in out["train"].items()}
    if "mcmc" in out:
        out["mcmc"] = out["mcmc"].to_dict()
    return out


def _mcmc_overrides(base: McmcConfig, args) -> McmcConfig:
    d = base.to_dict()
    for flag, key in (("n", "n"), ("seed", "seed"), ("q0", "q0"), ("bounds", "bounds"),
                      ("adapt", "m0"), ("burn", "burn_in_fraction")):
        value = getattr(args, flag)
        if value is not None:
            d[key] = value
    if args.bounds is not None and len(args.bounds) != 2:
        raise ConfigError("--bounds takes exactly two numbers: q_l,q_u")
    return McmcConfig.from_dict(d)


def _invert_single(cfg: PipelineConfig, args) -> None:
    data = read_series_csv(args.data)
    if args.exact:
        params = cfg.forward_params
        surrogate = ExactSurrogate(params, data.times)
        approach = EXACT
    elif args.model is not None:
        model = RomModel.load(args.model)
        surrogate = RomSurrogate(model, data.times, warn=False)
        approach = model.approach
    else:
        raise ConfigError("invert --data needs either --model or --exact")
    chain, post, extra = invert(surrogate, data, cfg.mcmc, args.q_true)
    extra["approach"] = approach
    out = args.out or args.data.with_name(f"{args.data.stem}_{approach}_n{cfg.mcmc.n}")
    csv_path, json_path = write_cell(out, chain, post, extra)
    print(json.dumps({**post.to_dict(), **extra, "chain": str(csv_path), "posterior": str(json_path)},
                     indent=2, sort_keys=True))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "extract":
            snaps = SnapshotSet.from_directory(args.dir, args.vector, args.dt, args.t0)
            series = build_series(snaps)
            write_series_csv(series, args.out)
            print(f"wrote {len(series)} samples to {args.out}")
            return 0
        cfg = _config(args)
        if args.command == "generate":
            for path in cmd_generate(cfg):
                print(path)
        elif args.command == "train":
            print(cmd_train(cfg, args.approach))
        elif args.command == "invert":
            if args.data is not None:
                _invert_single(cfg, args)
            else:
                for csv_path, json_path in cmd_invert_all(cfg, args.jobs):
                    print(json_path)
        elif args.command == "compare":
            from .report import cmd_compare

            report = cmd_compare(cfg)
            _print_summary(cfg, report)
        elif args.command == "run":
            report = cmd_run(cfg, args.jobs)
            _print_summary(cfg, report)
    except RomInvertError as exc:
        print(f"rominvert: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"rominvert: error: {exc}", file=sys.stderr)
        return DataIOError.exit_code
    return 0


def _print_summary(cfg: PipelineConfig, report) -> None:
    print("approach,n,mean_rel_error")
    for a in cfg.approaches:
        for n in cfg.sweep:
            print(f"{a},{n},{report.mean_rel_error(a, n):.6g}")
    print(f"report written to {cfg.report_dir}")


if __name__ == "__main__":
    sys.exit(main())
