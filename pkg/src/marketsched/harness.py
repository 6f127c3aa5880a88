"""Scenario definitions, multi-seed execution, windowed metrics, CSV export.

A run record samples, every ``record_every`` steps, the trailing-window mean
normalized turnaround per job type, the trailing-window mean realized price
per job type (accepted offers only, auctioneer grants included), the count
of agent-to-agent trades, and the auctioneer's settlement income. Windows
with no completions of a type mark the point absent rather than zero.
"""

from __future__ import annotations

import json
import multiprocessing
import os
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .agents import ARCH_DIST, ARCH_DIST_PRICE, ARCH_DIST_PS, AgentBundle, Trainer
from .baseline import scripted_actions
from .config import ConfigError, EnvConfig, JobType, PricingMode
from .env import AUCTIONEER, JointActions, SchedulingEnv, StepResult
from .neural import PPOHyper


@dataclass(frozen=True)
class Scenario:
    """One experiment: environment, agent architectures, training horizon."""

    name: str
    env: EnvConfig
    arch: tuple[str, ...]
    hyper: PPOHyper
    total_steps: int = 50_000
    window: int = 500
    record_every: int = 100
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)

    def __post_init__(self) -> None:
        arch = self.arch
        if isinstance(arch, str):
            arch = (arch,) * self.env.num_agents
        object.__setattr__(self, "arch", tuple(arch))
        object.__setattr__(self, "seeds", tuple(self.seeds))

    def validate(self) -> None:
        self.env.validate()
        self.hyper.validate()
        if len(self.arch) != self.env.num_agents:
            raise ConfigError(
                f"scenario {self.name}: {len(self.arch)} architectures for "
                f"{self.env.num_agents} agents")
        if not self.total_steps >= self.window >= 1:
            raise ConfigError(
                f"scenario {self.name}: need total_steps >= window >= 1")
        if self.record_every < 1:
            raise ConfigError(f"scenario {self.name}: record_every must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "env": self.env.to_dict(),
            "arch": list(self.arch),
            "hyper": self.hyper.to_dict(),
            "total_steps": self.total_steps,
            "window": self.window,
            "record_every": self.record_every,
            "seeds": list(self.seeds),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        arch = data["arch"]
        scenario = cls(
            name=str(data["name"]),
            env=EnvConfig.from_dict(data["env"]),
            arch=tuple(arch) if isinstance(arch, list) else str(arch),
            hyper=PPOHyper.from_dict(data.get("hyper", {})),
            total_steps=int(data.get("total_steps", 50_000)),
            window=int(data.get("window", 500)),
            record_every=int(data.get("record_every", 100)),
            seeds=tuple(int(s) for s in data.get("seeds", (1, 2, 3, 4, 5))),
        )
        scenario.validate()
        return scenario


class OverrideError(ValueError):
    """An override key does not address a declared scenario field."""


def apply_overrides(data: dict[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    """Apply ``dotted.key=value`` overrides to a scenario dictionary.

    Keys must address existing fields; list elements are addressed by index.
    Values are parsed as JSON when possible, else taken as strings.
    """
    for item in overrides:
        if "=" not in item:
            raise OverrideError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node: Any = data
        parts = dotted.split(".")
        for i, part in enumerate(parts):
            last = i == len(parts) - 1
            if isinstance(node, list):
                try:
                    index = int(part)
                    node[index]
                except (ValueError, IndexError):
                    raise OverrideError(f"override {dotted!r}: bad list index {part!r}")
                if last:
                    node[index] = value
                else:
                    node = node[index]
            elif isinstance(node, dict):
                if part not in node:
                    raise OverrideError(f"override {dotted!r}: unknown field {part!r}")
                if last:
                    node[part] = value
                else:
                    node = node[part]
            else:
                raise OverrideError(f"override {dotted!r}: {part!r} is not addressable")
    return data


# ----------------------------------------------------------------------
# run records
# ----------------------------------------------------------------------


@dataclass
class RunRecord:
    scenario: str
    seed: int
    steps: list[int]
    series: dict[str, list[float | None]]


@dataclass
class AggregateRecord:
    scenario: str
    seed_count: int
    steps: list[int]
    mean: dict[str, list[float | None]]
    std: dict[str, list[float | None]]
    count: dict[str, list[int]]


def series_names(config: EnvConfig) -> list[str]:
    names = [f"ntat_type_{t.id}" for t in config.job_types]
    names += [f"price_type_{t.id}" for t in config.job_types]
    names += ["trade_count", "auctioneer_income"]
    return names


class _MetricWindow:
    """Trailing-window accumulators over step-stamped events."""

    def __init__(self, config: EnvConfig, window: int):
        self.window = window
        self.type_ids = [t.id for t in config.job_types]
        self.ntat: dict[int, deque] = {tid: deque() for tid in self.type_ids}
        self.price: dict[int, deque] = {tid: deque() for tid in self.type_ids}
        self.trades: deque = deque()
        self.income: deque = deque()

    def observe(self, result: StepResult) -> None:
        t = result.time
        for c in result.completions:
            self.ntat[c.type_id].append((t, c.normalized_turnaround))
        for trade in result.trades:
            self.price[trade.job_type_id].append((t, trade.price))
            if trade.seller != AUCTIONEER:
                self.trades.append(t)
        if result.auctioneer_income:
            self.income.append((t, result.auctioneer_income))

    def _trim(self, step: int) -> None:
        cutoff = step - self.window
        for dq in list(self.ntat.values()) + list(self.price.values()):
            while dq and dq[0][0] < cutoff:
                dq.popleft()
        while self.trades and self.trades[0] < cutoff:
            self.trades.popleft()
        while self.income and self.income[0][0] < cutoff:
            self.income.popleft()

    def snapshot(self, step: int) -> dict[str, float | None]:
        """Window covers env times [step - window, step - 1]."""
        self._trim(step)
        out: dict[str, float | None] = {}
        for tid in self.type_ids:
            values = [v for _, v in self.ntat[tid]]
            out[f"ntat_type_{tid}"] = float(np.mean(values)) if values else None
        for tid in self.type_ids:
            values = [v for _, v in self.price[tid]]
            out[f"price_type_{tid}"] = float(np.mean(values)) if values else None
        out["trade_count"] = float(len(self.trades))
        out["auctioneer_income"] = float(sum(v for _, v in self.income))
        return out


def _trace_line(result: StepResult) -> str:
    payload = {
        "time": result.time,
        "trades": [[t.core, t.buyer, t.seller, t.price, t.job_uid] for t in result.trades],
        "terminations": [[c.job_uid, c.type_id, c.turnaround] for c in result.completions],
        "payouts": sorted(
            (participant, amount)
            for s in result.settlements
            for participant, amount in s.payouts.items()
        ),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def run_scenario(scenario: Scenario, seed: int, policy: str = "learned",
                 trace_path: str | os.PathLike | None = None) -> RunRecord:
    """Train (or script) one seed for the scenario's horizon.

    Deterministic in (scenario, seed): repeated calls produce identical
    records and trace files.
    """
    scenario.validate()
    env = SchedulingEnv(scenario.env, seed)
    trainer = None
    if policy == "learned":
        bundles = [
            AgentBundle(scenario.arch[agent], agent, scenario.env, scenario.hyper, seed)
            for agent in range(scenario.env.num_agents)
        ]
        trainer = Trainer(env, bundles)
    elif policy != "scripted":
        raise ValueError(f"unknown policy {policy!r}")

    metrics = _MetricWindow(scenario.env, scenario.window)
    steps: list[int] = []
    series: dict[str, list[float | None]] = {name: [] for name in series_names(scenario.env)}
    trace_file = open(trace_path, "w", encoding="utf-8") if trace_path else None
    try:
        for i in range(scenario.total_steps):
            if trainer is not None:
                result = trainer.step()
            else:
                result = env.step(scripted_actions(env))
            metrics.observe(result)
            if trace_file is not None:
                trace_file.write(_trace_line(result) + "\n")
            step = i + 1
            if step % scenario.record_every == 0 or step == scenario.total_steps:
                snap = metrics.snapshot(step)
                steps.append(step)
                for name, value in snap.items():
                    series[name].append(value)
    finally:
        if trace_file is not None:
            trace_file.close()
    return RunRecord(scenario=scenario.name, seed=seed, steps=steps, series=series)


def aggregate(records: list[RunRecord]) -> AggregateRecord:
    """Pointwise mean and population standard deviation across seeds.

    Absent points are excluded pairwise: each point aggregates over the
    seeds that have it.
    """
    if len(records) < 2:
        raise ValueError("aggregation needs at least 2 records")
    first = records[0]
    for r in records[1:]:
        if r.steps != first.steps or set(r.series) != set(first.series):
            raise ValueError("records have mismatching steps or series")
    mean: dict[str, list[float | None]] = {}
    std: dict[str, list[float | None]] = {}
    count: dict[str, list[int]] = {}
    for name in first.series:
        mean[name], std[name], count[name] = [], [], []
        for i in range(len(first.steps)):
            values = [r.series[name][i] for r in records if r.series[name][i] is not None]
            count[name].append(len(values))
            if values:
                arr = np.asarray(values)
                mean[name].append(float(arr.mean()))
                std[name].append(float(arr.std()))
            else:
                mean[name].append(None)
                std[name].append(None)
    return AggregateRecord(
        scenario=first.scenario,
        seed_count=len(records),
        steps=list(first.steps),
        mean=mean,
        std=std,
        count=count,
    )


def _sweep_worker(payload: tuple[dict, int, str]) -> RunRecord:
    scenario_dict, seed, policy = payload
    return run_scenario(Scenario.from_dict(scenario_dict), seed, policy=policy)


def run_sweep(scenario: Scenario, seeds: Iterable[int] | None = None,
              workers: int | None = None, policy: str = "learned") -> list[RunRecord]:
    """Run every seed; seeds are independent, so they may run in parallel."""
    seed_list = list(seeds) if seeds is not None else list(scenario.seeds)
    if workers is None:
        workers = int(os.environ.get("MARKETSCHED_WORKERS", "1"))
    workers = max(1, min(workers, len(seed_list)))
    if workers == 1:
        return [run_scenario(scenario, seed, policy=policy) for seed in seed_list]
    payloads = [(scenario.to_dict(), seed, policy) for seed in seed_list]
    with multiprocessing.get_context("fork").Pool(workers) as pool:
        return pool.map(_sweep_worker, payloads)


# ----------------------------------------------------------------------
# CSV export / import
# ----------------------------------------------------------------------

CSV_HEADER = "step,series,value,seed_count,std"


def export_run_csv(record: RunRecord, path: str | os.PathLike) -> None:
    lines = [CSV_HEADER]
    for i, step in enumerate(record.steps):
        for name, values in record.series.items():
            value = values[i]
            if value is None:
                continue
            lines.append(f"{step},{name},{value!r},1,0.0")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_aggregate_csv(agg: AggregateRecord, path: str | os.PathLike) -> None:
    lines = [CSV_HEADER]
    for i, step in enumerate(agg.steps):
        for name in agg.mean:
            if agg.count[name][i] == 0:
                continue
            lines.append(
                f"{step},{name},{agg.mean[name][i]!r},{agg.count[name][i]},"
                f"{agg.std[name][i]!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class CsvSeries:
    name: str
    steps: list[int]
    values: list[float]
    stds: list[float]


def read_series_csv(path: str | os.PathLike) -> dict[str, CsvSeries]:
    """Read a file in the export schema back into per-series columns."""
    out: dict[str, CsvSeries] = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"{path}: line 1: expected header {CSV_HEADER!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"{path}: line {lineno}: expected 5 columns")
            try:
                step = int(parts[0])
                value = float(parts[2])
                std = float(parts[4])
            except ValueError as err:
                raise ValueError(f"{path}: line {lineno}: {err}") from None
            series = out.setdefault(parts[1], CsvSeries(parts[1], [], [], []))
            series.steps.append(step)
            series.values.append(value)
            series.stds.append(std)
    return out


# ----------------------------------------------------------------------
# builtin scenarios
# ----------------------------------------------------------------------


def builtin_scenarios() -> dict[str, Scenario]:
    """The named experiments plus three learner-free baseline setups."""
    hyper = PPOHyper()
    # calibrated so that cores stay busy >= 90% of steps without trading
    # while the rarer short jobs pile up behind the long blockers
    low = JobType(id=0, priority=1, burst=15, spawn_prob=0.85)
    high = JobType(id=1, priority=5, burst=2, spawn_prob=0.15)
    duo = dict(num_agents=2, num_cores=2, num_slots=3)

    scenarios = {}

    def add(s: Scenario) -> None:
        scenarios[s.name] = s

    add(Scenario("EXP1_TRADING", EnvConfig(job_types=(low, high), **duo),
                 ARCH_DIST_PS, hyper))
    add(Scenario("EXP1_NO_TRADING",
                 EnvConfig(job_types=(low, high), trading_enabled=False, **duo),
                 ARCH_DIST_PS, hyper))
    add(Scenario("EXP2_ARCH_2X2", EnvConfig(job_types=(low, high), **duo),
                 ARCH_DIST, hyper))
    add(Scenario("EXP2_ARCH_4X4",
                 EnvConfig(num_agents=4, num_cores=4, num_slots=3,
                           job_types=(low, high)),
                 ARCH_DIST, hyper))

    scarce = JobType(id=0, priority=5, burst=5, spawn_prob=1.0)
    for cores in (2, 4):
        for mode in (PricingMode.FREE_COMMERCIAL, PricingMode.FREE_NONCOMMERCIAL):
            tag = "COMM" if mode is PricingMode.FREE_COMMERCIAL else "NONCOMM"
            add(Scenario(
                f"EXP3_SCARCITY_{cores}C_{tag}",
                EnvConfig(num_agents=2, num_cores=cores, num_slots=3,
                          job_types=(scarce,), pricing_mode=mode),
                ARCH_DIST_PRICE, hyper))

    graded = (
        JobType(id=0, priority=2, burst=5, spawn_prob=0.33),
        JobType(id=1, priority=4, burst=5, spawn_prob=0.33),
        JobType(id=2, priority=8, burst=5, spawn_prob=0.33),
    )
    for mode in (PricingMode.FREE_COMMERCIAL, PricingMode.FREE_NONCOMMERCIAL):
        tag = "COMM" if mode is PricingMode.FREE_COMMERCIAL else "NONCOMM"
        add(Scenario(
            f"EXP4_PRICING_{tag}",
            EnvConfig(num_agents=2, num_cores=2, num_slots=3,
                      job_types=graded, pricing_mode=mode),
            ARCH_DIST_PRICE, hyper))

    add(Scenario("BASE_SINGLE",
                 EnvConfig(num_agents=1, num_cores=1, num_slots=1,
                           job_types=(JobType(id=0, priority=3, burst=4, spawn_prob=0.7),),
                           trading_enabled=False),
                 ARCH_DIST, hyper, total_steps=2_000, window=200))
    add(Scenario("BASE_DUO",
                 EnvConfig(job_types=(low, high), trading_enabled=False, **duo),
                 ARCH_DIST, hyper, total_steps=2_000, window=200))
    add(Scenario("BASE_TRIO",
                 EnvConfig(num_agents=3, num_cores=2, num_slots=2,
                           job_types=(
                               JobType(id=0, priority=1, burst=6, spawn_prob=0.5),
                               JobType(id=1, priority=4, burst=3, spawn_prob=0.2),
                               JobType(id=2, priority=2, burst=2, spawn_prob=0.1),
                           ),
                           trading_enabled=False),
                 ARCH_DIST, hyper, total_steps=2_000, window=200))
    return scenarios
