"""Greedy sliding-window conversion of an LL trace into an HL trace."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .distance import dld
from .log import Event, EventLog, Trace
from .model import AbstractionParams, EcseaModel, Phi


class MissingAttributeError(ValueError):
    """An event lacks one of the grouping attributes."""


def gamma_key(event: Event, gamma: Sequence[str]) -> tuple[str, ...]:
    key = []
    for name in gamma:
        v = event.attributes.get(name)
        if v is None:
            raise MissingAttributeError(
                f"event {event.activity!r} at {event.timestamp} (case {event.case_id!r}) "
                f"has no grouping attribute {name!r}")
        key.append(v)
    return tuple(key)


def merge_timestamp(timestamps: Sequence[int], phi: Phi) -> int:
    """Combine timestamps per `phi`; MEAN and MEDIAN round half up to the ms."""
    if not timestamps:
        raise ValueError("no timestamps to merge")
    phi = Phi(phi)
    if phi is Phi.MIN:
        return min(timestamps)
    if phi is Phi.MAX:
        return max(timestamps)
    if phi is Phi.MEAN:
        n = len(timestamps)
        return (2 * sum(timestamps) + n) // (2 * n)
    ts = sorted(timestamps)
    mid = len(ts) // 2
    if len(ts) % 2:
        return ts[mid]
    return (ts[mid - 1] + ts[mid] + 1) // 2


@dataclass(frozen=True)
class Window:
    events: tuple[Event, ...]
    positions: tuple[int, ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)


@dataclass(frozen=True)
class BestMapping:
    psi: tuple[str, ...]
    hl_activity: str
    error: float


class Matcher:
    """Best-mapping search over one model, memoized by window label sequence.

    The unthresholded best candidate depends only on the window labels, so the
    cache is valid for every theta.
    """

    def __init__(self, model: EcseaModel):
        self.model = model
        self._cache: dict[tuple[str, ...], BestMapping | None] = {}
        self._label_sets = {
            hl: [(seq, n, frozenset(seq)) for seq, n in sorted(seqs.items())]
            for hl, seqs in model.hlc.items()
        }

    def best(self, labels: tuple[str, ...], theta: float) -> BestMapping | None:
        try:
            found = self._cache[labels]
        except KeyError:
            found = self._cache[labels] = self._search(labels)
        if found is not None and found.error < theta:
            return found
        return None

    def _search(self, labels: tuple[str, ...]) -> BestMapping | None:
        present = set(labels)
        candidates = set()
        for label in present:
            candidates.update(self.model.llc.get(label, ()))
        best = None
        best_key = None
        for hla in candidates:
            for seq, counter, seq_set in self._label_sets.get(hla, ()):
                if not seq_set <= present:
                    continue
                error = dld(labels, seq) / (max(len(labels), len(seq)) * math.sqrt(counter))
                # exact ties: longer mapping, then HL label, then sequence
                key = (error, -len(seq), hla, seq)
                if best_key is None or key < best_key:
                    best_key = key
                    best = BestMapping(seq, hla, error)
        return best


def get_best_mapping(model: EcseaModel, window: Window | Sequence[str], theta: float,
                     matcher: Matcher | None = None) -> BestMapping | None:
    labels = window.labels if isinstance(window, Window) else tuple(window)
    return (matcher or Matcher(model)).best(labels, theta)


class _Residual:
    """The shrinking LL trace. Consumed events are flagged, not spliced out."""

    def __init__(self, events: Sequence[Event], gamma: Sequence[str]):
        self.events = list(events)
        self.ts = [e.timestamp for e in self.events]
        self.labels = [e.activity for e in self.events]
        self.keys = [gamma_key(e, gamma) for e in self.events]
        self.alive = [True] * len(self.events)
        self.size = len(self.events)
        self.head = 0

    def _advance(self):
        n = len(self.alive)
        while self.head < n and not self.alive[self.head]:
            self.head += 1

    def drop_head(self):
        self.alive[self.head] = False
        self.size -= 1
        self._advance()

    def first_window(self, tau: int) -> list[int]:
        h = self.head
        key, limit = self.keys[h], self.ts[h] + tau
        out = [h]
        alive, keys, ts = self.alive, self.keys, self.ts
        for j in range(h + 1, len(ts)):
            if ts[j] > limit:
                break
            if alive[j] and keys[j] == key:
                out.append(j)
        return out

    def match(self, window: Sequence[int], psi: Sequence[str]) -> list[int]:
        """Window positions consumed by psi, earliest occurrence first per label."""
        used = set()
        matched = []
        for label in psi:
            for j in window:
                if j not in used and self.labels[j] == label:
                    used.add(j)
                    matched.append(j)
                    break
        if not matched:
            raise ValueError(f"mapping {list(psi)} matches no event of the window")
        return sorted(matched)

    def remove(self, positions: Iterable[int]):
        for j in positions:
            if self.alive[j]:
                self.alive[j] = False
                self.size -= 1
        self._advance()


def get_first_window(trace: Trace | Sequence[Event], tau: int, gamma: Sequence[str]) -> Window:
    events = trace.events if isinstance(trace, Trace) else tuple(trace)
    if not events:
        raise ValueError("cannot take a window of an empty trace")
    res = _Residual(events, gamma)
    pos = res.first_window(tau)
    return Window(tuple(events[j] for j in pos), tuple(pos))


def create_event(window: Window, psi: Sequence[str], hl_activity: str, phi: Phi,
                 gamma: Sequence[str] = (), ingest_index: int = 0) -> Event:
    res = _Residual(window.events, ())
    matched = res.match(range(len(window.events)), psi)
    head = window.events[0]
    ts = merge_timestamp([window.events[j].timestamp for j in matched], phi)
    attrs = {g: head.attributes[g] for g in gamma}
    return Event(hl_activity, ts, head.case_id, attrs, ingest_index)


def remove_events(trace: Trace | Sequence[Event], window: Window, psi: Sequence[str]) -> list[Event]:
    """Residual events after removing the window events consumed by psi."""
    events = list(trace.events if isinstance(trace, Trace) else trace)
    res = _Residual(events, ())
    matched = set(res.match(window.positions, psi))
    return [e for j, e in enumerate(events) if j not in matched]


def merge_events(beta: Sequence[Event], gamma: Sequence[str], phi: Phi, tau: int) -> list[Event]:
    """Fuse same-activity, same-group events whose consecutive gaps are below tau."""
    groups: dict[tuple, list[Event]] = {}
    for e in beta:
        groups.setdefault((e.activity, gamma_key(e, gamma)), []).append(e)
    out = []
    for members in groups.values():
        members.sort(key=lambda e: (e.timestamp, e.ingest_index))
        run = [members[0]]
        for e in members[1:]:
            if e.timestamp - run[-1].timestamp < tau:
                run.append(e)
            else:
                out.append(_fuse(run, phi))
                run = [e]
        out.append(_fuse(run, phi))
    return out


def _fuse(run: list[Event], phi: Phi) -> Event:
    if len(run) == 1:
        return run[0]
    first = run[0]
    return Event(first.activity, merge_timestamp([e.timestamp for e in run], phi),
                 first.case_id, first.attributes, min(e.ingest_index for e in run))


@dataclass
class ApplyStats:
    iterations: int = 0
    ghosts: int = 0
    unknown: int = 0
    created: int = 0


@dataclass
class _Pending:
    """An HL event before its timestamp is fixed by phi."""

    activity: str
    timestamps: list[int]
    attrs: dict[str, str]
    order: int


def _run_loop(model: EcseaModel, trace: Trace, tau: int, theta: float, gamma: Sequence[str],
              matcher: Matcher, stats: ApplyStats) -> list[_Pending]:
    # labels outside llc can never be consumed by a mapping; leaving them in would only
    # perturb window extents and dld scores
    known = [e for e in trace.events if e.activity in model.llc]
    for e in trace.events:
        gamma_key(e, gamma)
    stats.unknown += len(trace.events) - len(known)

    res = _Residual(known, gamma)
    pending: list[_Pending] = []
    last_len = res.size + 1
    while res.size > 0:
        stats.iterations += 1
        if res.size == last_len:
            res.drop_head()
            stats.ghosts += 1
            continue
        last_len = res.size
        window = res.first_window(tau)
        best = matcher.best(tuple(res.labels[j] for j in window), theta)
        if best is None:
            continue
        matched = res.match(window, best.psi)
        head = res.events[window[0]]
        pending.append(_Pending(
            best.hl_activity,
            [res.ts[j] for j in matched],
            {g: head.attributes[g] for g in gamma},
            len(pending),
        ))
        res.remove(matched)
    stats.created += len(pending)
    return pending


def _finalize(pending: Sequence[_Pending], case_id: str, phi: Phi, tau: int,
              gamma: Sequence[str]) -> Trace:
    beta = [Event(p.activity, merge_timestamp(p.timestamps, phi), case_id, p.attrs, p.order)
            for p in pending]
    merged = merge_events(beta, gamma, phi, tau)
    merged.sort(key=lambda e: (e.timestamp, e.ingest_index))
    return Trace(case_id, tuple(merged))


def apply(model: EcseaModel, trace: Trace, params: AbstractionParams, *,
          matcher: Matcher | None = None, stats: ApplyStats | None = None) -> Trace:
    """Abstract one LL trace into an HL trace with the model."""
    matcher = matcher or Matcher(model)
    stats = stats if stats is not None else ApplyStats()
    pending = _run_loop(model, trace, params.tau_ms, params.theta, params.gamma, matcher, stats)
    return _finalize(pending, trace.case_id, params.phi, params.tau_ms, params.gamma)


def apply_multi_phi(model: EcseaModel, trace: Trace, tau: int, theta: float,
                    phis: Sequence[Phi], gamma: Sequence[str],
                    matcher: Matcher) -> dict[Phi, Trace]:
    """Same as `apply` for several phi values; the matching loop does not depend on phi."""
    pending = _run_loop(model, trace, tau, theta, gamma, matcher, ApplyStats())
    return {phi: _finalize(pending, trace.case_id, phi, tau, gamma) for phi in phis}


def apply_log(model: EcseaModel, log: EventLog, params: AbstractionParams,
              stats: ApplyStats | None = None) -> EventLog:
    matcher = Matcher(model)
    stats = stats if stats is not None else ApplyStats()
    return EventLog({t.case_id: apply(model, t, params, matcher=matcher, stats=stats)
                     for t in log})
