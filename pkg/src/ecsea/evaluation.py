"""Synthetic-log experiment driver: synthesize, sample, grid-search, score."""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

from .log import EventLog
from .model import Phi
from .synthetic import SynthesisConfig, sample_traces, synthesize
from .trainer import (DEFAULT_PHI_GRID, DEFAULT_TAU_GRID, DEFAULT_THETA_GRID,
                      evaluate_accuracy, grid_search, pair_logs)

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    n_ll_per_hl: int
    seed: int
    test_acc: float
    train_acc: float
    train_seconds: float
    tau_ms: int
    theta: float
    phi: str
    n_train_traces: int
    n_test_traces: int
    n_ll_events: int
    n_ll_activities: int


@dataclass
class ConfigSummary:
    config: dict
    runs: list[RunResult] = field(default_factory=list)

    @property
    def accuracies(self) -> list[float]:
        return [r.test_acc for r in self.runs]

    def row(self) -> dict:
        accs = self.accuracies
        secs = [r.train_seconds for r in self.runs]
        return {
            "n_ll_per_hl": self.config["n_ll_per_hl"],
            "runs": len(self.runs),
            "test_acc_mean": statistics.fmean(accs),
            "test_acc_std": statistics.pstdev(accs),
            "test_acc_min": min(accs),
            "train_seconds_mean": statistics.fmean(secs),
            "ll_events_mean": statistics.fmean(r.n_ll_events for r in self.runs),
            "ll_activities_mean": statistics.fmean(r.n_ll_activities for r in self.runs),
        }


def run_once(hl_log: EventLog, synth: SynthesisConfig, train_fraction: float,
             gamma: Sequence[str], tau_grid=DEFAULT_TAU_GRID, theta_grid=DEFAULT_THETA_GRID,
             phi_grid=DEFAULT_PHI_GRID) -> RunResult:
    ll_log, _ = synthesize(hl_log, synth)
    pairs = pair_logs(ll_log, hl_log).pairs
    train_ids = set(sample_traces(ll_log, train_fraction, synth.seed).case_ids())
    train = [p for p in pairs if p.case_id in train_ids]
    test = [p for p in pairs if p.case_id not in train_ids] or train

    start = time.perf_counter()
    result = grid_search(train, None, tau_grid, theta_grid, phi_grid, gamma)
    seconds = time.perf_counter() - start
    test_acc = evaluate_accuracy(result.model, test, result.params)
    return RunResult(
        n_ll_per_hl=synth.n_ll_per_hl, seed=synth.seed, test_acc=test_acc,
        train_acc=result.train_acc, train_seconds=seconds, tau_ms=result.params.tau_ms,
        theta=result.params.theta, phi=Phi(result.params.phi).value,
        n_train_traces=len(train), n_test_traces=len(test),
        n_ll_events=ll_log.n_events(), n_ll_activities=len(ll_log.activities()),
    )


def run_evaluation(hl_log: EventLog, configs: Sequence[SynthesisConfig], logs_per_config: int = 10,
                   train_fraction: float = 0.1, gamma: Sequence[str] = (),
                   tau_grid=DEFAULT_TAU_GRID, theta_grid=DEFAULT_THETA_GRID,
                   phi_grid=DEFAULT_PHI_GRID) -> list[ConfigSummary]:
    """For each config, synthesize `logs_per_config` LL logs (seeds seed, seed+1, ...)."""
    out = []
    for cfg in configs:
        summary = ConfigSummary(asdict(cfg))
        for k in range(logs_per_config):
            run = run_once(hl_log, replace(cfg, seed=cfg.seed + k), train_fraction, gamma,
                           tau_grid, theta_grid, phi_grid)
            log.info("n=%d seed=%d test_acc=%.4f train=%.2fs", run.n_ll_per_hl, run.seed,
                     run.test_acc, run.train_seconds)
            summary.runs.append(run)
        out.append(summary)
    return out


def report(summaries: Sequence[ConfigSummary]) -> dict:
    return {
        "rows": [s.row() for s in summaries],
        "runs": [asdict(r) for s in summaries for r in s.runs],
        "configs": [s.config for s in summaries],
    }
