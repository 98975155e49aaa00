"""Synthetic LL logs from an HL log, with tunable ECS-log pathologies.

Every HL event expands into several LL events whose labels come from a fixed
per-activity scheme (multiple LL events per activity), spread over a short
jitter interval (overlap with neighbouring activities of other users), with
occasional adjacent swaps (ordering noise), labels shared across activities,
and injected ghost events that belong to no HL activity.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field

from .log import Event, EventLog, Trace

ID_KEY = "identity:id"
GHOST = "ghost"


@dataclass(frozen=True)
class SynthesisConfig:
    n_ll_per_hl: int = 2
    max_jitter_ms: int = 2_000
    reorder_prob: float = 0.0
    shared_ll_fraction: float = 0.0
    ghost_rate: float = 0.0
    seed: int = 0
    shared_pool_size: int = 8
    n_ghost_labels: int = 3
    ghost_spread_ms: int = 30_000

    def __post_init__(self):
        if self.n_ll_per_hl < 1:
            raise ValueError(f"n_ll_per_hl must be >= 1, got {self.n_ll_per_hl}")
        if self.max_jitter_ms < 0 or self.ghost_spread_ms < 0:
            raise ValueError("jitter and ghost spread must be >= 0")
        for name in ("reorder_prob", "shared_ll_fraction", "ghost_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.shared_pool_size < 1 or self.n_ghost_labels < 1:
            raise ValueError("label pools must be non-empty")


def _stable_unit(*parts) -> float:
    digest = hashlib.blake2b("|".join(map(str, parts)).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64


def ll_scheme(activity: str, config: SynthesisConfig) -> tuple[str, ...]:
    """The LL labels one HL activity expands into.

    Depends only on the activity name and the label-scheme knobs, never on the
    seed, so logs synthesized from different HL logs share one scheme. The first
    label is always activity-specific.
    """
    labels = [f"{activity}.ll1"]
    for k in range(2, config.n_ll_per_hl + 1):
        label = f"{activity}.ll{k}"
        if _stable_unit(activity, k, "share") < config.shared_ll_fraction:
            j = int(_stable_unit(activity, k, "pool") * config.shared_pool_size) + 1
            shared = f"shared.ll{j}"
            if shared not in labels:
                label = shared
        labels.append(label)
    return tuple(labels)


@dataclass
class GroundTruth:
    sequences: dict[str, list[list[str]]] = field(default_factory=dict)
    origins: dict[str, str] = field(default_factory=dict)

    def n_ghosts(self) -> int:
        return sum(1 for o in self.origins.values() if o == GHOST)

    def to_json(self) -> bytes:
        doc = {"sequences": self.sequences, "origins": self.origins}
        return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode("utf-8")


def synthesize(hl_log: EventLog, config: SynthesisConfig) -> tuple[EventLog, GroundTruth]:
    schemes: dict[str, tuple[str, ...]] = {}
    seen: dict[str, set[tuple[str, ...]]] = {}
    truth = GroundTruth()
    traces = {}
    for trace in hl_log:
        # one RNG stream per case and pathology: results do not depend on trace
        # order, and turning one knob up leaves the draws of the others untouched
        jitter_rng, swap_rng, ghost_rng = (
            random.Random(f"{config.seed}|{trace.case_id}|{part}")
            for part in ("jitter", "swap", "ghost"))
        events: list[Event] = []

        def emit(label, ts, attrs, origin):
            eid = f"{trace.case_id}/{len(events)}"
            events.append(Event(label, ts, trace.case_id, {**attrs, ID_KEY: eid}, len(events)))
            truth.origins[eid] = origin

        for i, hl in enumerate(trace.events):
            scheme = schemes.get(hl.activity)
            if scheme is None:
                scheme = schemes[hl.activity] = ll_scheme(hl.activity, config)
            labels = list(scheme)
            k = 0
            while k < len(labels) - 1:
                if swap_rng.random() < config.reorder_prob:
                    labels[k], labels[k + 1] = labels[k + 1], labels[k]
                    k += 2
                else:
                    k += 1
            offsets = sorted(jitter_rng.randint(0, config.max_jitter_ms) for _ in labels)
            attrs = {k: v for k, v in hl.attributes.items() if k != ID_KEY}
            origin = f"{trace.case_id}#{i}"
            for label, off in zip(labels, offsets):
                emit(label, hl.timestamp + off, attrs, origin)
            seen.setdefault(hl.activity, set()).add(tuple(labels))
            # ghost draws are made unconditionally so the stream stays aligned across rates
            u, g_idx = ghost_rng.random(), ghost_rng.randint(1, config.n_ghost_labels)
            off = ghost_rng.randint(-config.ghost_spread_ms, config.ghost_spread_ms)
            if u < config.ghost_rate:
                g = f"ghost.ll{g_idx}"
                emit(g, hl.timestamp + off, attrs, GHOST)
        traces[trace.case_id] = Trace.from_events(trace.case_id, events)

    clash = hl_log.activities() & {e.activity for t in traces.values() for e in t}
    if clash:
        raise ValueError(f"synthesized LL labels collide with HL labels: {sorted(clash)}")
    truth.sequences = {hl: sorted(list(s) for s in seqs) for hl, seqs in sorted(seen.items())}
    return EventLog(traces), truth


def sample_traces(log: EventLog, fraction: float, seed: int) -> EventLog:
    """Random subset of floor(fraction * |log|) traces (at least one)."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    ids = log.case_ids()
    if fraction == 1 or not ids:
        return log
    k = max(1, math.floor(fraction * len(ids)))
    chosen = set(random.Random(seed).sample(sorted(ids), k))
    return log.subset(chosen)


@dataclass(frozen=True)
class HLLogConfig:
    """Shape of a generated HL log."""

    n_activities: int = 45
    n_traces: int = 1_000
    mean_trace_len: int = 20
    n_resources: int = 40
    n_roles: int = 5
    resources_per_trace: int = 3
    overlap_prob: float = 0.2
    min_same_resource_gap_ms: int = 120_000
    max_gap_ms: int = 1_800_000
    case_prefix: str = "case"
    seed: int = 0


def generate_hl_log(config: HLLogConfig = HLLogConfig()) -> EventLog:
    """A random HL log from a sparse Markov chain over activities.

    Events of one resource are at least ``min_same_resource_gap_ms`` apart;
    with probability ``overlap_prob`` the next event follows within seconds,
    executed by a different resource.
    """
    rng = random.Random(config.seed)
    acts = [f"hl.act{i:02d}" for i in range(config.n_activities)]
    # successors derive from a fixed stream so logs with different seeds share a process
    proc = random.Random(f"process|{config.n_activities}")
    succ = {a: proc.sample(acts, min(3, len(acts))) for a in acts}
    roles = {f"res{r:03d}": f"role{r % config.n_roles}" for r in range(config.n_resources)}
    resources = sorted(roles)
    attrs_of = {r: {"org:resource": r, "org:role": roles[r]} for r in resources}

    traces = {}
    width = len(str(config.n_traces))
    for c in range(config.n_traces):
        case_id = f"{config.case_prefix}{c:0{width}d}"
        pool = rng.sample(resources, min(config.resources_per_trace, len(resources)))
        length = rng.randint(max(1, config.mean_trace_len // 2), config.mean_trace_len * 3 // 2)
        t = 1_600_000_000_000 + rng.randint(0, 365 * 86_400_000)
        last: dict[str, int] = {}
        act = rng.choice(acts)
        prev_res = None
        events = []
        for i in range(length):
            res = None
            if i and rng.random() < config.overlap_prob:
                cand_t = t + rng.randint(200, 3_000)
                ok = [r for r in pool if r != prev_res
                      and cand_t - last.get(r, -10**15) >= config.min_same_resource_gap_ms]
                if ok:
                    t, res = cand_t, rng.choice(ok)
            if res is None:
                t += rng.randint(config.min_same_resource_gap_ms, config.max_gap_ms) if i else 0
                res = rng.choice(pool)
            last[res] = t
            prev_res = res
            events.append(Event(act, t, case_id, dict(attrs_of[res]), i))
            act = rng.choice(succ[act])
        traces[case_id] = Trace.from_events(case_id, events)
    return EventLog(traces)

