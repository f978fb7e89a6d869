"""Compare inversion quality across surrogates and render the report files."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import MissingCell
from .mcmc import Chain
from .pipeline import PipelineConfig, make_surrogate
from .plotting import error_summary_figure, inversion_figure, reconstruction_figure
from .series import boundary_jump, read_series_csv


@dataclass
class ComparisonReport:
    cells: list  # dicts: rate, approach, n, mean, std, rel_error, acceptance_rate
    approaches: dict  # approach -> reconstruction metrics and mean errors

    def to_dict(self) -> dict:
        return {"cells": self.cells, "approaches": self.approaches}

    def mean_rel_error(self, approach: str, n: int) -> float:
        errs = [c["rel_error"] for c in self.cells if c["approach"] == approach and c["n"] == n]
        return float(np.mean(errs))


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _csv(rows: list, columns: list) -> str:
    out = [",".join(columns)]
    out += [",".join(_fmt(r[c]) for c in columns) for r in rows]
    return "\n".join(out) + "\n"


def build_report(cfg: PipelineConfig) -> tuple:
    """Gather every cell's posterior and each surrogate's reconstruction metrics.

    Returns the report plus the raw series needed for figures.
    """
    cells = []
    chains = {}
    for q, a, n in cfg.cells():
        stem = cfg.cell_stem(q, a, n)
        try:
            post = json.loads(stem.with_suffix(".json").read_text())
            chain = Chain.from_csv(stem.with_suffix(".csv").read_text())
        except FileNotFoundError:
            raise MissingCell(f"missing inversion cell {stem.name} (rate {q:g}, {a}, n={n})") from None
        chains[(q, a, n)] = chain.samples
        cells.append({
            "rate": q,
            "approach": a,
            "n": n,
            "mean": post["mean"],
            "std": post["std"],
            "rel_error": abs(post["mean"] - q) / q,
            "acceptance_rate": post["acceptance_rate"],
        })

    truth = {q: read_series_csv(cfg.clean_path(q)) for q in cfg.rates}
    noisy = {q: read_series_csv(cfg.noisy_path(q)) for q in cfg.rates}
    times = truth[cfg.rates[0]].times
    boundary = cfg.train["nonoverlapping"].window.length if "nonoverlapping" in cfg.train else 23

    approaches = {}
    recon = {}
    for a in cfg.approaches:
        surrogate = make_surrogate(cfg, a, times)
        recon[a] = {q: surrogate(q) for q in cfg.rates}
        mse = {q: float(np.mean((recon[a][q] - truth[q].values) ** 2)) for q in cfg.rates}
        jump = {q: boundary_jump(recon[a][q], boundary) for q in cfg.rates}
        approaches[a] = {
            "reconstruction_mse": float(np.mean(list(mse.values()))),
            "reconstruction_mse_by_rate": {f"{q:g}": v for q, v in mse.items()},
            "boundary_jump": float(np.mean(list(jump.values()))),
            "boundary_jump_by_rate": {f"{q:g}": v for q, v in jump.items()},
            "boundary_window": boundary,
            "mean_rel_error_by_n": {},
        }
    report = ComparisonReport(cells, approaches)
    for a in cfg.approaches:
        approaches[a]["mean_rel_error_by_n"] = {str(n): report.mean_rel_error(a, n) for n in cfg.sweep}
    return report, {"truth": truth, "noisy": noisy, "recon": recon, "chains": chains, "times": times}


def cmd_compare(cfg: PipelineConfig) -> ComparisonReport:
    report, raw = build_report(cfg)
    out = cfg.report_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    (out / "cells.csv").write_text(
        _csv(report.cells, ["rate", "approach", "n", "mean", "std", "rel_error", "acceptance_rate"])
    )
    rows = [
        {"approach": a, "reconstruction_mse": m["reconstruction_mse"], "boundary_jump": m["boundary_jump"],
         **{f"mean_rel_error_n{n}": m["mean_rel_error_by_n"][str(n)] for n in cfg.sweep}}
        for a, m in report.approaches.items()
    ]
    (out / "approaches.csv").write_text(
        _csv(rows, ["approach", "reconstruction_mse", "boundary_jump"]
             + [f"mean_rel_error_n{n}" for n in cfg.sweep])
    )

    truth = {q: s.values for q, s in raw["truth"].items()}
    noisy = {q: s.values for q, s in raw["noisy"].items()}
    errors = {}
    for a in cfg.approaches:
        reconstruction_figure(raw["times"], truth, noisy, raw["recon"][a], a, out / f"reconstruction_{a}.svg")
        for q in cfg.rates:
            per_n = {n: raw["chains"][(q, a, n)] for n in cfg.sweep}
            inversion_figure(per_n, q, a, cfg.mcmc.burn_in_fraction, out / f"inversion_{a}_q{q:g}.svg")
        errors[a] = {q: {c["n"]: c["rel_error"] for c in report.cells if c["approach"] == a and c["rate"] == q}
                     for q in cfg.rates}
    error_summary_figure(errors, out / "relative_error.svg")
    return report
