"""CSV logs and PNG figures for training runs and evaluations.

Masses are reported in metric tonnes.  Column order is fixed and documented
by the ``*_COLUMNS`` helpers so downstream tooling can rely on it.  Floats are
written with a fixed format, which keeps the files byte-identical across
reruns with the same seeds.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .campaign import EpisodeLog, EvalReport

T = 1000.0  # kg per tonne


def _f(x: float | None, nd: int = 6) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return f"{x:.{nd}f}"


def episode_columns(missions: int) -> list[str]:
    cols = ["episode", "q_production", "q_decay", "design_payload_t", "design_propellant_t",
            "design_dry_t"]
    cols += [f"deploy_{k}_t" for k in range(1, missions + 1)]
    cols += [f"cost_{k}_t" for k in range(1, missions + 1)]
    cols += ["total_cost_t", "reward", "terminated_at"]
    return cols


def _episode_row(idx: int, log: EpisodeLog, missions: int) -> list[str]:
    d = log.design
    row = [str(idx), _f(log.q.production), _f(log.q.decay)]
    row += [_f(d.payload_kg / T), _f(d.propellant_kg / T), _f(d.dry_kg / T)] if d else ["", "", ""]
    acts = [m.action_kg for m in log.missions]
    costs = [m.cost_kg for m in log.missions]
    row += [_f(acts[k] / T) if k < len(acts) else "" for k in range(missions)]
    row += [_f(costs[k] / T) if k < len(costs) else "" for k in range(missions)]
    row += [_f(log.total_cost_kg / T), _f(log.final_reward, 9),
            str(log.terminated_at) if log.terminated_at else ""]
    return row


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_episodes(path: str | Path, logs: Sequence[EpisodeLog], missions: int) -> Path:
    return write_csv(path, episode_columns(missions),
                     (_episode_row(i, lg, missions) for i, lg in enumerate(logs, 1)))


def write_evaluation(directory: str | Path, report: EvalReport, missions: int,
                     baseline_kg: float) -> list[Path]:
    """``eval_cases.csv`` (one row per case) and ``eval_summary.csv``."""
    directory = Path(directory)
    cases = write_csv(directory / "eval_cases.csv", ["case"] + episode_columns(missions)[1:] +
                      ["infeasible"],
                      ([str(i)] + _episode_row(i, lg, missions)[1:] + [str(int(flag))]
                       for i, (lg, flag) in enumerate(zip(report.logs, report.infeasible), 1)))
    d = report.first.design
    summary = write_csv(directory / "eval_summary.csv", ["metric", "value"], [
        ["cases", str(report.n_cases)],
        ["mean_cost_t", _f(report.mean / T)],
        ["sd_cost_t", _f(report.sd / T)],
        ["min_cost_t", _f(report.min / T)],
        ["max_cost_t", _f(report.max / T)],
        ["infeasible_cases", str(int(report.infeasible.sum()))],
        ["baseline_cost_t", _f(baseline_kg / T)],
        ["repeated_baseline_t", _f(missions * baseline_kg / T)],
        ["first_deploy_t", _f(report.first.action_kg / T)],
        ["design_payload_t", _f(d.payload_kg / T) if d else ""],
        ["design_propellant_t", _f(d.propellant_kg / T) if d else ""],
        ["design_dry_t", _f(d.dry_kg / T) if d else ""],
    ])
    return [cases, summary]


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_training(path: str | Path, logs: Sequence[EpisodeLog], baseline_kg: float,
                  missions: int, window: int = 20) -> Path:
    plt = _pyplot()
    total = np.array([lg.total_cost_kg for lg in logs]) / T
    ep = np.arange(1, len(total) + 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(ep, total, ".", ms=3, alpha=0.5, label="episode")
    if len(total) >= window:
        ma = np.convolve(total, np.ones(window) / window, mode="valid")
        ax.plot(ep[window - 1:], ma, lw=2, label=f"{window}-episode mean")
    ax.axhline(missions * baseline_kg / T, color="k", ls="--", lw=1, label="repeated baseline")
    ax.set_xlabel("episode")
    ax.set_ylabel("campaign cost [t]")
    ax.legend(loc="best")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="png")
    plt.close(fig)
    return path


def plot_evaluation(path: str | Path, report: EvalReport, baseline_kg: float,
                    missions: int) -> Path:
    plt = _pyplot()
    costs = report.costs_kg / T
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.boxplot(costs, whis=1.5)
    ax1.axhline(missions * baseline_kg / T, color="k", ls="--", lw=1)
    ax1.set_ylabel("campaign cost [t]")
    ax1.set_xticks([1], ["evaluation"])
    q = np.array([[c.production, c.decay] for c in report.qs])
    sc = ax2.scatter(q[:, 0], q[:, 1] * 100, c=costs, s=12)
    fig.colorbar(sc, ax=ax2, label="campaign cost [t]")
    ax2.set_xlabel("ISRU production [kg/yr/kg]")
    ax2.set_ylabel("ISRU decay [%/yr]")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="png")
    plt.close(fig)
    return path
