"""
Command-line entry point for ROFU bandit experiments.
Run: python -m app.main {run,verify,plot-data} ...
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, Union

import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.config import settings
from app.envs import EnvSpec
from app.errors import ConfigError, RofuError
from app.evaluation import SUITES, failing_cases, run_suite
from app.harness import (
    AgentSpec,
    aggregate,
    fit_offline_model,
    persist,
    regret_decomposition,
    run_seeds,
)
from app.harness.persist import FLOAT_FORMAT
from app.harness.regret import OFFLINE_STEPS

logger = logging.getLogger(__name__)


# ============================================================
# Experiment config
# ============================================================

class SeedRange(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    base: int = 0
    count: int = Field(default=1, ge=1)


class ExperimentConfig(BaseModel):
    """One experiment file: an environment, the agents to compare, horizon and seeds."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    env: EnvSpec
    agents: list[AgentSpec] = Field(min_length=1)
    horizon: int = Field(ge=1)
    seeds: Union[list[int], SeedRange] = SeedRange()
    output: Optional[Path] = None
    decompose: bool = False
    offline_steps: int = Field(default=OFFLINE_STEPS, ge=0)

    @field_validator("agents")
    @classmethod
    def _unique_names(cls, agents: list[AgentSpec]) -> list[AgentSpec]:
        names = [a.name for a in agents]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"agent names must be unique, repeated: {duplicates}")
        return agents

    @field_validator("seeds")
    @classmethod
    def _nonempty_seeds(cls, seeds):
        if isinstance(seeds, list) and not seeds:
            raise ValueError("seed list is empty")
        return seeds

    def seed_list(self) -> list[int]:
        if isinstance(self.seeds, SeedRange):
            return list(range(self.seeds.base, self.seeds.base + self.seeds.count))
        return list(self.seeds)


def list_presets() -> list[str]:
    return sorted(p.stem for p in Path(settings.presets_dir).glob("*.yaml"))


def resolve_config_path(source: str) -> Path:
    """A config file path, or the name of a bundled preset."""
    path = Path(source)
    if path.is_file():
        return path
    preset = Path(settings.presets_dir) / f"{source}.yaml"
    if preset.is_file():
        return preset
    raise ConfigError(f"no config file or preset named '{source}' (presets: {', '.join(list_presets())})")


def _validation_message(error: ValidationError) -> str:
    parts = []
    for err in error.errors():
        key = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{key}: {err['msg']}")
    return "; ".join(parts)


def load_config(source: str) -> ExperimentConfig:
    path = resolve_config_path(source)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}:{where} {getattr(e, 'problem', None) or e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")

    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{path}: {_validation_message(e)}") from e

    dataset = cfg.env.dataset
    if dataset is not None and not dataset.path.is_absolute():
        # dataset paths are relative to the config file
        env = cfg.env.model_copy(update={"dataset": dataset.model_copy(update={"path": path.parent / dataset.path})})
        cfg = cfg.model_copy(update={"env": env})
    return cfg


def apply_overrides(
    cfg: ExperimentConfig,
    seeds: Optional[int] = None,
    horizon: Optional[int] = None,
    out: Optional[str] = None,
) -> ExperimentConfig:
    """Command-line flags beat config values."""
    update = {}
    if seeds is not None:
        if seeds < 1:
            raise ConfigError(f"--seeds must be at least 1, got {seeds}")
        base = cfg.seeds.base if isinstance(cfg.seeds, SeedRange) else min(cfg.seeds)
        update["seeds"] = SeedRange(base=base, count=seeds)
    if horizon is not None:
        if horizon < 1:
            raise ConfigError(f"--horizon must be at least 1, got {horizon}")
        update["horizon"] = horizon
    if out is not None:
        update["output"] = Path(out)
    return cfg.model_copy(update=update) if update else cfg


# ============================================================
# Commands
# ============================================================

def cmd_run(source: str, seeds: Optional[int] = None, horizon: Optional[int] = None, out: Optional[str] = None) -> int:
    try:
        cfg = apply_overrides(load_config(source), seeds, horizon, out)
    except ConfigError as e:
        print(f"✗ Config error: {e}")
        return 2

    out_dir = cfg.output or Path(settings.output_dir) / Path(source).stem
    seed_list = cfg.seed_list()
    echo = cfg.model_dump(mode="json")
    print(f"Running {len(cfg.agents)} agent(s) × {len(seed_list)} seed(s), T={cfg.horizon} → {out_dir}")

    try:
        for agent in cfg.agents:
            runs = run_seeds(
                cfg.env, agent, cfg.horizon, seed_list,
                max_workers=settings.max_workers,
                show_progress=settings.show_progress,
            )
            result = aggregate(runs)
            if cfg.decompose:
                result.decomposition = []
                for run in runs:
                    model, theta_prime = fit_offline_model(cfg.env, agent, cfg.horizon, run.seed, cfg.offline_steps)
                    result.decomposition.append(regret_decomposition(run, theta_prime, model))
            persist(result, out_dir / agent.name, config=echo)
            print(f"✓ {result}")
    except ConfigError as e:
        print(f"✗ Config error: {e}")
        return 2
    except (RofuError, OSError) as e:
        print(f"✗ Run failed: {e}")
        return 1
    return 0


def cmd_verify(suite: str, seed: int = 0) -> int:
    try:
        report = run_suite(suite, seed=seed)
    except KeyError as e:
        print(f"✗ {e.args[0]}")
        return 2
    print(report)
    if not report.passed:
        print("Failing cases:")
        print(json.dumps(failing_cases(report), indent=2, sort_keys=True))
        return 1
    return 0


def cmd_plotdata(result_dir: str) -> int:
    root = Path(result_dir)
    curve_files = sorted(root.glob("*/curves.csv"))
    if not curve_files:
        print(f"✗ No curves.csv found under {root}")
        return 1

    columns = {}
    lengths = {}
    for path in curve_files:
        name = path.parent.name
        try:
            frame = pd.read_csv(path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            print(f"✗ Could not read {path}: {e}")
            return 1
        missing = {"round", "mean_regret", "std_regret"} - set(frame.columns)
        if missing:
            print(f"✗ {path} is missing columns {sorted(missing)}")
            return 1
        lengths[name] = len(frame)
        columns[name] = frame

    names = list(columns)
    first = names[0]
    for name in names[1:]:
        if lengths[name] != lengths[first]:
            print(f"✗ Horizon mismatch: {first} has {lengths[first]} rounds, {name} has {lengths[name]}")
            return 1

    merged = pd.DataFrame({"round": columns[first]["round"].to_numpy()})
    for name in names:
        merged[f"{name}_mean"] = columns[name]["mean_regret"].to_numpy()
        merged[f"{name}_std"] = columns[name]["std_regret"].to_numpy()

    out_path = root / "comparison.csv"
    try:
        merged.to_csv(out_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        print(f"✗ Could not write {out_path}: {e}")
        return 1
    print(f"✓ Wrote {out_path} ({len(names)} agents, {len(merged)} rounds)")
    return 0


# ============================================================
# Argument parsing
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rofu", description="ROFU contextual-bandit experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config or bundled preset")
    run.add_argument("config", help="YAML config path or preset name")
    run.add_argument("--seeds", type=int, help="number of seeds (overrides the config)")
    run.add_argument("--horizon", type=int, help="rounds per run (overrides the config)")
    run.add_argument("--out", help="output directory (overrides the config)")

    verify = sub.add_parser("verify", help="run an oracle-equivalence suite")
    verify.add_argument("suite", choices=sorted(SUITES))
    verify.add_argument("--seed", type=int, default=0)

    plot = sub.add_parser("plot-data", help="merge persisted curves into comparison.csv")
    plot.add_argument("result_dir")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=getattr(logging, str(settings.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)

    if args.command == "run":
        return cmd_run(args.config, args.seeds, args.horizon, args.out)
    if args.command == "verify":
        return cmd_verify(args.suite, args.seed)
    return cmd_plotdata(args.result_dir)


if __name__ == "__main__":
    sys.exit(main())
