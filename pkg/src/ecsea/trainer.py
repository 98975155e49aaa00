"""Model fitting from paired LL/HL logs, accuracy evaluation and grid search."""

from __future__ import annotations

import bisect
import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .applier import Matcher, apply_multi_phi, gamma_key
from .distance import normalized_similarity
from .log import Event, EventLog, Trace
from .model import AbstractionParams, EcseaModel, Phi

log = logging.getLogger(__name__)

DEFAULT_TAU_GRID = (1_000, 2_000, 5_000, 10_000, 30_000)
DEFAULT_THETA_GRID = (0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_PHI_GRID = tuple(Phi)


class PairingError(ValueError):
    pass


@dataclass(frozen=True)
class TracePair:
    ll: Trace
    hl: Trace

    def __post_init__(self):
        if self.ll.case_id != self.hl.case_id:
            raise PairingError(f"case ids differ: {self.ll.case_id!r} vs {self.hl.case_id!r}")

    @property
    def case_id(self) -> str:
        return self.ll.case_id


@dataclass
class Pairing:
    pairs: list[TracePair]
    ll_only: list[str]
    hl_only: list[str]


def pair_logs(ll_log: EventLog, hl_log: EventLog) -> Pairing:
    """Pair traces by case id. LL and HL activity labels must be disjoint."""
    overlap = ll_log.activities() & hl_log.activities()
    if overlap:
        raise PairingError(f"labels appear in both the LL and HL log: {sorted(overlap)}")
    pairs = [TracePair(ll_log[c], hl_log[c]) for c in ll_log.case_ids() if c in hl_log]
    ll_only = [c for c in ll_log.case_ids() if c not in hl_log]
    hl_only = [c for c in hl_log.case_ids() if c not in ll_log]
    if not pairs and (len(ll_log) or len(hl_log)):
        raise PairingError("LL and HL logs share no case id")
    if ll_only or hl_only:
        log.warning("unpaired cases: %d only in LL log, %d only in HL log", len(ll_only), len(hl_only))
    return Pairing(pairs, ll_only, hl_only)


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split_pairs(pairs: Sequence[TracePair], config: SplitConfig) -> tuple[list[TracePair], list[TracePair]]:
    if len(pairs) < 2:
        raise ValueError(f"need at least 2 pairs to split, got {len(pairs)}")
    ordered = sorted(pairs, key=lambda p: p.case_id)
    random.Random(config.seed).shuffle(ordered)
    n_train = min(max(round(config.train_fraction * len(ordered)), 1), len(ordered) - 1)
    return ordered[:n_train], ordered[n_train:]


def build_gamma_sequences(trace: Trace, gamma: Sequence[str]) -> dict[tuple[str, ...], list[Event]]:
    """Partition a trace's events by their grouping-attribute values, keeping time order."""
    seqs: dict[tuple[str, ...], list[Event]] = {}
    for e in trace.events:
        seqs.setdefault(gamma_key(e, gamma), []).append(e)
    return seqs


@dataclass
class Assignment:
    """LL events assigned to each HL event (aligned with the HL trace)."""

    mapping: list[list[Event]]
    ghosts: list[Event] = field(default_factory=list)
    unmatched_hl: list[int] = field(default_factory=list)


def assign_events(hl_trace: Trace, sequences: dict[tuple[str, ...], list[Event]],
                  tau: int, gamma: Sequence[str]) -> Assignment:
    """Give every LL event to the nearest same-group HL event within tau.

    Equidistant HL events: the earlier one wins.
    """
    mapping: list[list[Event]] = [[] for _ in hl_trace.events]
    by_group: dict[tuple[str, ...], list[int]] = {}
    for i, e in enumerate(hl_trace.events):
        by_group.setdefault(gamma_key(e, gamma), []).append(i)

    unmatched = sorted(i for key, idx in by_group.items() if key not in sequences for i in idx)
    ghosts: list[Event] = []
    for key, ll_events in sequences.items():
        hl_idx = by_group.get(key)
        if not hl_idx:
            ghosts.extend(ll_events)
            continue
        hl_ts = [hl_trace.events[i].timestamp for i in hl_idx]
        for e in ll_events:
            k = bisect.bisect_left(hl_ts, e.timestamp)
            best = None
            # nearest HL events sit at k-1 and k; ties go to the earlier (k-1)
            for c in (k - 1, k):
                if 0 <= c < len(hl_ts):
                    d = abs(hl_ts[c] - e.timestamp)
                    if d <= tau and (best is None or d < best[0]):
                        best = (d, c)
            if best is None:
                ghosts.append(e)
            else:
                mapping[hl_idx[best[1]]].append(e)
    for evs in mapping:
        evs.sort(key=lambda e: (e.timestamp, e.ingest_index))
    return Assignment(mapping, ghosts, unmatched)


def to_activity_mapping(hl_trace: Trace, mapping: Sequence[Sequence[Event]]) -> list[tuple[str, tuple[str, ...]]]:
    """(HL activity, LL activity sequence) per HL event, empty sequences dropped."""
    return [(h.activity, tuple(e.activity for e in evs))
            for h, evs in zip(hl_trace.events, mapping) if evs]


@dataclass
class FitStats:
    ghost_ll_events: int = 0
    unlearnable_hl_events: int = 0
    unmatched_hl_events: int = 0

    def add(self, other: "FitStats") -> None:
        self.ghost_ll_events += other.ghost_ll_events
        self.unlearnable_hl_events += other.unlearnable_hl_events
        self.unmatched_hl_events += other.unmatched_hl_events


def fit(model: EcseaModel, pair: TracePair, tau: int, gamma: Sequence[str],
        stats: FitStats | None = None) -> EcseaModel:
    """Add one trace pair's observed mappings to the model (in place)."""
    for e in pair.hl.events:
        gamma_key(e, gamma)
    sequences = build_gamma_sequences(pair.ll, gamma)
    assignment = assign_events(pair.hl, sequences, tau, gamma)
    for hl_activity, seq in to_activity_mapping(pair.hl, assignment.mapping):
        model.add(hl_activity, seq)
    if stats is not None:
        stats.ghost_ll_events += len(assignment.ghosts)
        stats.unlearnable_hl_events += sum(1 for evs in assignment.mapping if not evs)
        stats.unmatched_hl_events += len(assignment.unmatched_hl)
    return model


def train(pairs: Iterable[TracePair], tau: int, gamma: Sequence[str],
          stats: FitStats | None = None) -> EcseaModel:
    model = EcseaModel()
    for pair in pairs:
        fit(model, pair, tau, gamma, stats)
    return model


def evaluate_accuracy(model: EcseaModel, pairs: Sequence[TracePair], params: AbstractionParams,
                      matcher: Matcher | None = None) -> float:
    """Mean normalized DLD similarity between predicted and observed HL activity sequences."""
    return _accuracies(model, pairs, params.tau_ms, params.theta, [params.phi],
                       params.gamma, matcher)[params.phi]


def _accuracies(model, pairs, tau, theta, phis, gamma, matcher=None) -> dict[Phi, float]:
    if not pairs:
        raise ValueError("cannot evaluate accuracy on an empty pair set")
    matcher = matcher or Matcher(model)
    totals = {phi: 0.0 for phi in phis}
    for pair in pairs:
        observed = pair.hl.activities()
        predicted = apply_multi_phi(model, pair.ll, tau, theta, phis, gamma, matcher)
        for phi, trace in predicted.items():
            totals[phi] += normalized_similarity(trace.activities(), observed)
    return {phi: totals[phi] / len(pairs) for phi in phis}


@dataclass(frozen=True)
class GridCell:
    tau_ms: int
    theta: float
    phi: Phi
    train_acc: float

    def rank_key(self):
        # best accuracy, then smallest tau, smallest theta, phi order
        return (-self.train_acc, self.tau_ms, self.theta, Phi(self.phi).rank)


@dataclass
class GridResult:
    model: EcseaModel
    params: AbstractionParams
    train_acc: float
    test_acc: float | None
    cells: list[GridCell]
    fit_stats: FitStats

    def report(self) -> dict:
        out = {
            "cells": [{"tau_ms": c.tau_ms, "theta": c.theta, "phi": Phi(c.phi).value,
                       "train_acc": c.train_acc} for c in self.cells],
            "winner": self.params.to_dict(),
            "train_acc": self.train_acc,
            "ghost_ll_events": self.fit_stats.ghost_ll_events,
            "unlearnable_hl_events": self.fit_stats.unlearnable_hl_events,
        }
        if self.test_acc is not None:
            out["test_acc"] = self.test_acc
        return out


def grid_search(train_pairs: Sequence[TracePair], test_pairs: Sequence[TracePair] | None,
                tau_grid: Sequence[int] = DEFAULT_TAU_GRID,
                theta_grid: Sequence[float] = DEFAULT_THETA_GRID,
                phi_grid: Sequence[Phi] = DEFAULT_PHI_GRID,
                gamma: Sequence[str] = ()) -> GridResult:
    """Train one model per tau, score every (tau, theta, phi) cell on the training pairs.

    The winner is re-scored on `test_pairs` when given.
    """
    if not (tau_grid and theta_grid and phi_grid):
        raise ValueError("grids must be non-empty")
    if not train_pairs:
        raise ValueError("no training pairs")
    gamma = tuple(gamma)
    phis = [Phi(p) for p in phi_grid]
    cells: list[GridCell] = []
    models: dict[int, tuple[EcseaModel, FitStats]] = {}
    for tau in sorted(set(tau_grid)):
        stats = FitStats()
        model = train(train_pairs, tau, gamma, stats)
        models[tau] = (model, stats)
        matcher = Matcher(model)
        for theta in sorted(set(theta_grid)):
            accs = _accuracies(model, train_pairs, tau, theta, phis, gamma, matcher)
            cells.extend(GridCell(tau, theta, phi, acc) for phi, acc in accs.items())
            log.debug("tau=%d theta=%g %s", tau, theta,
                      " ".join(f"{p.value}={a:.4f}" for p, a in accs.items()))
    winner = min(cells, key=GridCell.rank_key)
    model, stats = models[winner.tau_ms]
    params = AbstractionParams(winner.tau_ms, winner.theta, winner.phi, gamma)
    test_acc = evaluate_accuracy(model, test_pairs, params) if test_pairs else None
    return GridResult(model, params, winner.train_acc, test_acc, cells, stats)
