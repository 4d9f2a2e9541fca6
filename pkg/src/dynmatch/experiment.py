"""Experiment runner: YAML configs in, tab-separated reports out.

A config looks like::

    seed: 7                      # master seed; DYNMATCH_SEED overrides it
    reps: 10                     # replications per setting
    instance:
      family: trips              # any generator family, or
      params: {n: 2000}          #   file: path/to/instance.txt
    settings:                    # optional; merged into the family params
      - {name: det-50, params: {d: 50}}
      - {name: exp-50, params: {d: 50, stochastic: true}}
    algorithms: [greedy, patient, batching:10, reopt]
    opt: auto                    # auto | never
    out: reports                 # directory for summary.tsv and runs.tsv

Every replication draws its seed from the master seed, regenerates the
instance with it (if the family takes a seed) and runs every algorithm
with the same seed.
"""
from __future__ import annotations

import inspect
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .algorithms import get_algorithm
from .exceptions import BadParameters, ConfigError
from .generators import FAMILIES, adv_departures, generate
from .io import read_instance
from .market import resolve_deadlines
from .oracle import competitive_ratio, offline_opt

SEED_ENV = "DYNMATCH_SEED"

SUMMARY_COLUMNS = ("algorithm", "setting", "runs", "mean_value", "ratio", "ratio_low", "ratio_high",
                   "matched_fraction", "runtime_s")
DETAIL_COLUMNS = ("algorithm", "setting", "rep", "seed", "value", "opt", "opt_method",
                  "matched_fraction", "runtime_s", "audits_passed")

_KEYS = {"seed", "reps", "instance", "settings", "algorithms", "opt", "out"}


@dataclass
class Setting:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    algorithms: list
    instance: dict
    settings: list = field(default_factory=lambda: [Setting("default")])
    seed: int = 0
    reps: int = 1
    opt: str = "auto"
    out: Optional[str] = None

    def rep_seeds(self) -> list[int]:
        rng = np.random.default_rng(int(self.seed))
        return [int(x) for x in rng.integers(0, 2**63 - 1, size=self.reps)]


def _line(node) -> int:
    return node.start_mark.line + 1


def _key_lines(node) -> dict:
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: (_line(k), v) for k, v in node.value}


def parse_config(text: str, env: Optional[dict] = None) -> ExperimentConfig:
    """Parse and validate a YAML config; errors carry the offending line."""
    env = os.environ if env is None else env
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(str(getattr(exc, "problem", exc)), mark.line + 1 if mark else None) from None
    if data is None:
        raise ConfigError("empty config", 1)
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping", _line(root))
    lines = _key_lines(root)

    def where(key):
        return lines[key][0] if key in lines else None

    for key in data:
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", where(key))
    if "instance" not in data:
        raise ConfigError("missing 'instance' section", _line(root))
    inst = data["instance"]
    if not isinstance(inst, dict) or ("family" in inst) == ("file" in inst):
        raise ConfigError("instance needs exactly one of 'family' or 'file'", where("instance"))
    if "family" in inst and inst["family"] not in FAMILIES:
        raise ConfigError(f"unknown family {inst['family']!r}", where("instance"))

    algos = data.get("algorithms") or []
    if not isinstance(algos, list):
        raise ConfigError("algorithms must be a list", where("algorithms"))
    algo_nodes = lines["algorithms"][1].value if "algorithms" in lines and algos else []
    for i, name in enumerate(algos):
        try:
            get_algorithm(str(name))
        except BadParameters as exc:
            line = _line(algo_nodes[i]) if i < len(algo_nodes) else where("algorithms")
            raise ConfigError(str(exc), line) from None

    settings = []
    for i, item in enumerate(data.get("settings") or [{"name": "default"}]):
        if not isinstance(item, dict) or "name" not in item:
            raise ConfigError("each setting needs a name", where("settings"))
        settings.append(Setting(str(item["name"]), dict(item.get("params") or {})))

    seed = data.get("seed", 0)
    if env.get(SEED_ENV):
        seed = env[SEED_ENV]
    try:
        seed = int(seed)
        reps = int(data.get("reps", 1))
    except (TypeError, ValueError):
        raise ConfigError("seed and reps must be integers", where("seed") or where("reps")) from None
    if reps < 1:
        raise ConfigError("reps must be positive", where("reps"))
    opt = data.get("opt", "auto")
    if opt not in ("auto", "never"):
        raise ConfigError("opt must be 'auto' or 'never'", where("opt"))
    return ExperimentConfig([str(a) for a in algos], inst, settings, seed, reps, opt, data.get("out"))


def load_config(path, env: Optional[dict] = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), env)


def _build_instance(cfg: ExperimentConfig, setting: Setting, seed: int, base_dir: Path):
    spec = cfg.instance
    if "file" in spec:
        return read_instance(base_dir / spec["file"])
    family = spec["family"]
    params = {**(spec.get("params") or {}), **setting.params}
    if "seed" in inspect.signature(FAMILIES[family]).parameters:
        params.setdefault("seed", seed)
    return generate(family, **params)


@dataclass
class Report:
    summary: list[dict]
    runs: list[dict]

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = out / "summary.tsv", out / "runs.tsv"
        write_tsv(self.summary, SUMMARY_COLUMNS, paths[0])
        write_tsv(self.runs, DETAIL_COLUMNS, paths[1])
        return paths


def _fmt(x) -> str:
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_tsv(rows, columns, path) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(row[c]) for c in columns) + "\n")


def read_tsv(path) -> list[dict]:
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        return [dict(zip(header, line.rstrip("\n").split("\t"))) for line in fh if line.strip()]


def run_experiment(config, base_dir=".", write: bool = True) -> Report:
    """Run every (setting, replication, algorithm) cell of ``config``.

    ``config`` is an :class:`ExperimentConfig`, a path to a YAML file, or a
    YAML string containing a newline.
    """
    if isinstance(config, (str, Path)) and "\n" not in str(config):
        base_dir = Path(config).parent
        config = load_config(config)
    elif isinstance(config, str):
        config = parse_config(config)
    base_dir = Path(base_dir)
    runs: list[dict] = []
    summary: list[dict] = []
    seeds = config.rep_seeds()
    for setting in config.settings:
        cells: dict[str, list] = {a: [] for a in config.algorithms}
        opts: list[float] = []
        exact_opt = True
        for rep, seed in enumerate(seeds):
            if not config.algorithms:
                break
            instance = _build_instance(config, setting, seed, base_dir)
            deadlines = resolve_deadlines(instance, seed)
            opt, method = math.nan, ""
            if config.opt == "auto":
                res = offline_opt(instance, deadlines)
                opt, method = res.value, res.method
                exact_opt &= res.exact
            opts.append(opt)
            for name in config.algorithms:
                fn = get_algorithm(name)
                start = time.perf_counter()
                result = fn(instance, seed=seed, deadlines=deadlines, record_trace=False)
                elapsed = time.perf_counter() - start
                row = {"algorithm": name, "setting": setting.name, "rep": rep, "seed": seed,
                       "value": result.total_value, "opt": opt, "opt_method": method,
                       "matched_fraction": result.matched_fraction, "runtime_s": elapsed,
                       "audits_passed": result.passed}
                runs.append(row)
                cells[name].append(row)
        for name, rows in cells.items():
            if not rows:
                continue
            values = [r["value"] for r in rows]
            if config.opt == "auto" and exact_opt:
                est = competitive_ratio(values, opts)
                ratio = (est.ratio, est.low, est.high)
            else:
                ratio = (math.nan,) * 3
            summary.append({
                "algorithm": name, "setting": setting.name, "runs": len(rows),
                "mean_value": math.fsum(values) / len(values),
                "ratio": ratio[0], "ratio_low": ratio[1], "ratio_high": ratio[2],
                "matched_fraction": math.fsum(r["matched_fraction"] for r in rows) / len(rows),
                "runtime_s": math.fsum(r["runtime_s"] for r in rows),
            })
    report = Report(summary, runs)
    if write and config.out:
        report.write(base_dir / config.out)
    return report


def adversarial_ratio(algorithm: str, n: int, M: Optional[float] = None, seed: int = 0) -> tuple[int, float]:
    """Worst ratio over the choice of ``K`` on the adversarial-departure star.

    An online algorithm cannot see ``K`` before it acts, so running it on
    every ``K`` in ``[2, n]`` and keeping the worst one is exactly the
    adversary's choice.  Returns ``(K, ratio)``.
    """
    fn = get_algorithm(algorithm)
    worst = None
    for K in range(2, n + 1):
        inst = adv_departures(n, K, M)
        value = fn(inst, seed=seed, record_trace=False).total_value
        opt = offline_opt(inst).value
        ratio = value / opt
        if worst is None or ratio < worst[1]:
            worst = (K, ratio)
    return worst


def check_report_totals(report: Report, tol: float = 1e-9) -> bool:
    """True if every summary mean equals the mean of its per-run rows."""
    for row in report.summary:
        vals = [r["value"] for r in report.runs
                if r["algorithm"] == row["algorithm"] and r["setting"] == row["setting"]]
        if abs(math.fsum(vals) / len(vals) - row["mean_value"]) > tol * max(1.0, abs(row["mean_value"])):
            return False
    return True


__all__ = ["ExperimentConfig", "Report", "Setting", "adversarial_ratio", "check_report_totals",
           "load_config", "parse_config", "read_tsv", "run_experiment", "write_tsv"]
