"""``hrlcampaign`` command-line entry point.

Every command writes ``manifest.json`` into its output directory; ``replay``
re-runs a manifest and reproduces the same CSV files byte for byte.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__

OUT_ENV = "HRLCAMPAIGN_OUTPUT_DIR"
DEFAULT_OUT = "hrlcampaign-out"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one line, no usage dump
        raise UsageError(message)


def _out_dir(args) -> Path:
    p = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _limits(args):
    from .milp import Limits
    return Limits(time_limit=args.time_limit, gap_tol=args.gap)


def _scenario(args):
    from .netmodel import load_scenario
    sc = load_scenario(args.scenario)
    if getattr(args, "grid", None):
        sc = sc.replace(grid_points=tuple(args.grid))
    return sc


def _write_manifest(out: Path, args, extra: dict | None = None) -> Path:
    recorded = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    for key in ("scenario", "checkpoint", "model"):
        if isinstance(recorded.get(key), str) and Path(recorded[key]).is_file():
            recorded[key] = str(Path(recorded[key]).resolve())
    doc = {"tool": "hrlcampaign", "version": __version__, "command": args.command,
           "args": recorded, **(extra or {})}
    path = out / "manifest.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
def cmd_validate(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args)
    _write_manifest(out, args, {"scenario_digest": sc.digest()})
    print(f"ok: scenario {sc.name!r} ({sc.missions} missions, digest {sc.digest()})")
    return 0


def cmd_baseline(args) -> int:
    from .campaign import compute_baseline
    from .report import write_csv
    from .scheduler import DesignGrid
    sc = _scenario(args)
    out = _out_dir(args)
    base = compute_baseline(sc, DesignGrid.for_scenario(sc), _limits(args))
    d = base.design
    write_csv(out / "baseline.csv", ["metric", "value"], [
        ["baseline_cost_t", f"{base.cost_kg / 1000:.6f}"],
        ["design_payload_t", f"{d.payload_kg / 1000:.6f}"],
        ["design_propellant_t", f"{d.propellant_kg / 1000:.6f}"],
        ["design_dry_t", f"{d.dry_kg / 1000:.6f}"],
    ])
    _write_manifest(out, args, {"scenario_digest": sc.digest()})
    print(f"baseline {base.cost_kg / 1000:.3f} t with payload {d.payload_kg:g} kg, "
          f"propellant {d.propellant_kg:g} kg")
    return 0


def _train_config(args):
    from .campaign import TrainConfig
    from .rl import Td3Config
    base = Td3Config.desk() if args.preset == "desk" else Td3Config()
    over = {}
    if args.hidden:
        over["hidden"] = tuple(int(h) for h in args.hidden.split(","))
    for key in ("lr", "batch_size", "buffer_size", "gamma"):
        v = getattr(args, key)
        if v is not None:
            over[key] = v
    agent = Td3Config(**{**base.__dict__, **over})
    defaults = TrainConfig.desk() if args.preset == "desk" else TrainConfig()
    return TrainConfig(
        episodes=args.episodes if args.episodes is not None else defaults.episodes,
        n1=args.n1 if args.n1 is not None else defaults.n1,
        n2=args.n2 if args.n2 is not None else defaults.n2,
        seed=args.seed, agent=agent,
        updates_per_step=(args.updates_per_step if args.updates_per_step is not None
                          else defaults.updates_per_step))


def cmd_train(args) -> int:
    from . import checkpoint, report
    from .campaign import CampaignEnv, train
    sc = _scenario(args)
    out = _out_dir(args)
    cfg = _train_config(args)
    env = CampaignEnv(sc, limits=_limits(args))

    def progress(m, log):
        if args.verbose and (m % 10 == 0 or m == cfg.episodes):
            print(f"episode {m}/{cfg.episodes}: cost {log.total_cost_kg / 1000:.1f} t",
                  file=sys.stderr)

    res = train(env, cfg, progress)
    report.write_episodes(out / "episodes.csv", res.logs, sc.missions)
    report.plot_training(out / "training.png", res.logs, env.j_base, sc.missions)
    checkpoint.save(out / "checkpoint.json", scenario=sc, agent=res.agent, vfa=res.vfa,
                    config=cfg, buffer=res.buffer, rng_state=res.rng_state,
                    baseline_kg=env.j_base)
    _write_manifest(out, args, {"scenario_digest": sc.digest()})
    last = res.logs[-min(20, len(res.logs)):]
    mean = sum(lg.total_cost_kg for lg in last) / len(last)
    print(f"trained {cfg.episodes} episodes; last-{len(last)} mean cost {mean / 1000:.3f} t "
          f"(repeated baseline {sc.missions * env.j_base / 1000:.3f} t)")
    return 0


def cmd_evaluate(args) -> int:
    from . import checkpoint, report
    from .campaign import CampaignEnv, evaluate
    from .scheduler import ConfigurationError
    sc = _scenario(args)
    out = _out_dir(args)
    ck = checkpoint.load(args.checkpoint)
    if ck.scenario_digest != sc.digest():
        raise ConfigurationError(f"checkpoint was trained on scenario {ck.scenario_name!r} "
                                 f"(digest {ck.scenario_digest}), not {sc.digest()}")
    env = CampaignEnv(sc, limits=_limits(args))
    rep = evaluate(env, ck.agent, ck.vfa, args.cases, args.seed)
    report.write_evaluation(out, rep, sc.missions, env.j_base)
    report.plot_evaluation(out / "evaluation.png", rep, env.j_base, sc.missions)
    _write_manifest(out, args, {"scenario_digest": sc.digest()})
    print(f"mean {rep.mean / 1000:.3f} t, sd {rep.sd / 1000:.3f} t over {rep.n_cases} cases "
          f"({int(rep.infeasible.sum())} infeasible)")
    return 0


def cmd_solve(args) -> int:
    from .milp import read_lp, solve_milp
    from .report import write_csv
    path = Path(args.model)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    lp = read_lp(path.read_text(), path.stem)
    sol = solve_milp(lp.model, _limits(args))
    out = _out_dir(args)
    sign = -1.0 if lp.maximize else 1.0
    obj = sign * sol.objective if sol.has_primal else float("nan")
    rows = [[n, repr(float(v))] for n, v in zip(lp.model.names, sol.x)] if sol.has_primal else []
    write_csv(out / "solution.csv", ["variable", "value"], rows)
    _write_manifest(out, args)
    print(f"status {sol.status}, objective {obj!r}, gap {sol.gap:.3g}, "
          f"nodes {sol.nodes}")
    return 0 if sol.has_primal else 1


def cmd_export(args) -> int:
    from .milp import export_model
    from .scheduler import (CampaignState, DesignGrid, VehicleDesign, SizingModel,
                            assemble_first_mission, assemble_mission)
    from .campaign import compute_baseline
    sc = _scenario(args)
    out = _out_dir(args)
    if not 1 <= args.mission <= sc.missions:
        raise UsageError(f"--mission must lie in [1, {sc.missions}]")
    grid = DesignGrid.for_scenario(sc)
    state = CampaignState(tau=args.mission - 1)
    if args.mission == 1:
        prob = assemble_first_mission(state, args.action, sc, grid)
    else:
        if args.payload is not None and args.propellant is not None:
            design = VehicleDesign.sized(args.payload, args.propellant,
                                         SizingModel.from_scenario(sc))
        else:
            design = compute_baseline(sc, grid, _limits(args)).design
        prob = assemble_mission(state, args.action, sc, design)
    path = out / f"mission_{args.mission}.lp"
    path.write_text(export_model(prob.model))
    _write_manifest(out, args, {"scenario_digest": sc.digest()})
    print(f"wrote {path} ({len(prob.model.names)} variables, {len(prob.model.senses)} rows)")
    return 0


def cmd_replay(args) -> int:
    path = Path(args.manifest)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    doc = json.loads(path.read_text())
    if doc.get("tool") != "hrlcampaign" or "command" not in doc:
        raise UsageError(f"{path} is not an hrlcampaign manifest")
    if doc["command"] == "replay":
        raise UsageError("refusing to replay a replay manifest")
    ns = argparse.Namespace(**doc["args"])
    ns.command = doc["command"]
    ns.out = args.out
    return COMMANDS[doc["command"]](ns)


COMMANDS = {"validate": cmd_validate, "baseline": cmd_baseline, "train": cmd_train,
            "evaluate": cmd_evaluate, "solve": cmd_solve, "export": cmd_export,
            "replay": cmd_replay}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--time-limit", type=float, default=1800.0, help="seconds per MILP")
    common.add_argument("--gap", type=float, default=1e-6, help="relative optimality gap")
    p = _Parser(prog="hrlcampaign", description="Campaign design with learned ISRU deployment.")
    p.add_argument("--version", action="version", version=f"hrlcampaign {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", parents=[common], help="check a scenario file")
    s.add_argument("scenario")
    s = sub.add_parser("baseline", parents=[common], help="single-mission cost without ISRU")
    s.add_argument("scenario")
    s.add_argument("--grid", type=int, nargs=2, metavar=("NP", "NF"))
    s = sub.add_parser("train", parents=[common], help="train the deployment and design agents")
    s.add_argument("scenario")
    s.add_argument("--episodes", type=int)
    s.add_argument("--n1", type=int)
    s.add_argument("--n2", type=int)
    s.add_argument("--updates-per-step", type=int)
    s.add_argument("--preset", choices=("default", "desk"), default="default")
    s.add_argument("--hidden", help="comma-separated hidden layer sizes")
    s.add_argument("--lr", type=float)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--buffer-size", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--grid", type=int, nargs=2, metavar=("NP", "NF"))
    s.add_argument("--verbose", action="store_true")
    s = sub.add_parser("evaluate", parents=[common], help="evaluate a trained checkpoint")
    s.add_argument("scenario")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--cases", type=int, default=128)
    s.add_argument("--grid", type=int, nargs=2, metavar=("NP", "NF"))
    s = sub.add_parser("solve", parents=[common], help="solve an LP-format model")
    s.add_argument("model")
    s = sub.add_parser("export", parents=[common], help="write one mission's model in LP format")
    s.add_argument("scenario")
    s.add_argument("--mission", type=int, required=True)
    s.add_argument("--action", type=float, default=0.0, help="ISRU deployment [kg]")
    s.add_argument("--payload", type=float, help="fixed design payload capacity [kg]")
    s.add_argument("--propellant", type=float, help="fixed design propellant capacity [kg]")
    s.add_argument("--grid", type=int, nargs=2, metavar=("NP", "NF"))
    s = sub.add_parser("replay", help="re-run a manifest")
    s.add_argument("manifest")
    s.add_argument("--out")
    return p


def _error_code(exc: BaseException) -> int:
    from .checkpoint import CheckpointError
    from .milp import LpFormatError
    from .netmodel import ScenarioError
    from .scheduler import ConfigurationError
    usage = (UsageError, ScenarioError, ConfigurationError, CheckpointError, LpFormatError,
             FileNotFoundError)
    return 2 if isinstance(exc, usage) else 1


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        print("error: Interrupted", file=sys.stderr)
        return 130
    except Exception as exc:  # single-line report, class name first
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return _error_code(exc)


if __name__ == "__main__":
    sys.exit(main())
