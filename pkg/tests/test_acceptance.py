"""Acceptance criteria; each test records one PASS/FAIL line in the terminal summary."""

import random
import statistics
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecsea.applier import ApplyStats, apply
from ecsea.distance import dld
from ecsea.evaluation import run_evaluation
from ecsea.log import Event, Trace
from ecsea.model import AbstractionParams, EcseaModel, Phi
from ecsea.synthetic import HLLogConfig, SynthesisConfig, generate_hl_log, synthesize
from ecsea.trainer import evaluate_accuracy, fit, grid_search, pair_logs, train

from conftest import EXPECTED_HLC, EXPECTED_LLC, TABLE2_ACTIVITIES, TAU, USER
from test_distance import all_sequences, script_oracle

GAMMA = ("org:resource", "org:role")
MODERATE = dict(max_jitter_ms=2_000, reorder_prob=0.1, shared_ll_fraction=0.2, ghost_rate=0.1)


def test_running_example_golden(running_pair, criterion):
    start = time.perf_counter()
    model = train([running_pair], TAU, USER)
    stats = ApplyStats()
    out = apply(model, running_pair.ll, AbstractionParams(TAU, 1.0, Phi.MIN, USER), stats=stats)
    seconds = time.perf_counter() - start
    # event 109 is the only one whose label the model does not know
    excluded = stats.unknown == 1 and "community.visit" not in model.llc
    checks = {
        "hlc": model.hlc == EXPECTED_HLC,
        "llc": model.llc == EXPECTED_LLC,
        "sequence": out.activities() == TABLE2_ACTIVITIES,
        "109 excluded": running_pair.ll.events[5].activity == "community.visit" and excluded,
        "< 1 s": seconds < 1.0,
    }
    ok = all(checks.values())
    criterion("1 running-example golden", ok,
              ", ".join(f"{k}={'ok' if v else 'MISMATCH'}" for k, v in checks.items())
              + f" ({seconds * 1000:.1f} ms)")
    assert ok


# llc exactly as printed for the running example: it double-maps wiki.page.tag.added,
# which is not the reverse of the printed hlc (that label only occurs under tag.created)
PRINTED_LLC = {**EXPECTED_LLC,
               "wiki.page.tag.added": {"gws.wiki.wikiarticle.updated", "gws.wiki.wikiarticle.tag.created"},
               "wiki.page.updated": {"gws.wiki.wikiarticle.tag.created"}}


@pytest.mark.xfail(strict=True, reason="the printed llc contradicts the printed hlc and llc/hlc consistency")
def test_running_example_llc_as_printed(running_pair, criterion):
    model = train([running_pair], TAU, USER)
    ok = model.llc == PRINTED_LLC
    criterion("1b llc literally as printed (double mapping on wiki.page.tag.added)", ok,
              "trained llc double-maps wiki.page.updated, the reverse of hlc" if not ok else "")
    assert ok


@pytest.mark.slow
def test_desk_scale_reproduction(criterion):
    start = time.perf_counter()
    hl = generate_hl_log(HLLogConfig(n_activities=45, n_traces=1_050, mean_trace_len=20, seed=0))
    shape = (len(hl.activities()), len(hl), hl.n_events())
    configs = [SynthesisConfig(n_ll_per_hl=n, seed=100, **MODERATE) for n in (2, 4, 6, 8)]
    summaries = run_evaluation(hl, configs, logs_per_config=10, train_fraction=0.1, gamma=GAMMA)
    seconds = time.perf_counter() - start
    means = [statistics.fmean(s.accuracies) for s in summaries]
    floor_ok = all(m >= 0.95 for m in means)
    trend_ok = all(b <= a + 0.02 for a, b in zip(means, means[1:]))
    shape_ok = shape[0] >= 40 and shape[1] >= 1_000 and shape[2] >= 20_000
    ok = floor_ok and trend_ok and shape_ok and seconds <= 600
    rows = " ".join(f"n={s.config['n_ll_per_hl']}:{m:.4f}" for s, m in zip(summaries, means))
    criterion("2 desk-scale synthetic accuracy", ok,
              f"HL {shape[0]} acts/{shape[1]} traces/{shape[2]} events; {rows}; "
              f"trend ok={trend_ok}; {seconds:.0f} s")
    assert ok


def test_pathology_free_identity(criterion):
    hl = generate_hl_log(HLLogConfig(n_activities=20, n_traces=200, mean_trace_len=12, seed=11))
    ll, _ = synthesize(hl, SynthesisConfig(n_ll_per_hl=1, max_jitter_ms=0, seed=1))
    pairs = pair_logs(ll, hl).pairs
    result = grid_search(pairs[:20], pairs[20:], gamma=GAMMA)
    ok = result.test_acc == 1.0
    criterion("3 pathology-free identity", ok, f"test accuracy {result.test_acc!r}")
    assert ok


def test_dld_oracle_exhaustive(criterion):
    start = time.perf_counter()
    seqs = list(all_sequences("abc", 5))
    mismatches = [(a, b) for a in seqs for b in seqs if dld(a, b) != script_oracle(a, b)]
    seconds = time.perf_counter() - start
    ok = not mismatches
    criterion("4 DLD oracle equivalence", ok,
              f"{len(seqs) ** 2} pairs, {len(mismatches)} mismatches, {seconds:.1f} s")
    assert ok


_termination = {"n": 0, "bad": 0}

ll_labels = st.sampled_from(["a", "b", "c", "d"])
models = st.lists(st.tuples(st.sampled_from(["A", "B", "C"]), st.lists(ll_labels, min_size=1, max_size=4),
                            st.integers(1, 5)), max_size=8)
events = st.lists(st.tuples(st.sampled_from(["a", "b", "c", "d", "z"]), st.integers(0, 20_000),
                            st.sampled_from(["u", "v", "w"])), min_size=1, max_size=40)
params = st.builds(AbstractionParams, st.integers(0, 8_000), st.floats(0.05, 1.5),
                   st.sampled_from(list(Phi)), st.sampled_from([(), USER]))


def _model(adds):
    m = EcseaModel()
    for hl, seq, n in adds:
        m.add(hl, seq, n)
    return m


def _trace(rows):
    return Trace.from_events("c", [Event(a, t, "c", {"USER_UUID": u}, i) for i, (a, t, u) in enumerate(rows)])


@settings(max_examples=1_000)
@given(models, events, params)
def _termination_property(adds, rows, p):
    m, t = _model(adds), _trace(rows)
    stats = ApplyStats()
    first = apply(m, t, p, stats=stats)
    second = apply(m, t, p)
    _termination["n"] += 1
    if stats.iterations > 2 * len(t) or first != second:
        _termination["bad"] += 1
    assert stats.iterations <= 2 * len(t)
    assert first == second


def test_termination_and_determinism(criterion):
    _termination.update(n=0, bad=0)
    try:
        _termination_property()
    finally:
        ok = _termination["bad"] == 0 and _termination["n"] >= 1_000
        criterion("5 termination & determinism", ok,
                  f"{_termination['n']} instances, {_termination['bad']} violations")
    assert ok


def _shuffled(seq, seed):
    seq = list(seq)
    random.Random(seed).shuffle(seq)
    return seq


def test_invariant_suite(criterion):
    hl = generate_hl_log(HLLogConfig(n_activities=15, n_traces=30, mean_trace_len=10, seed=4))
    ll, _ = synthesize(hl, SynthesisConfig(n_ll_per_hl=3, seed=2, **MODERATE))
    pairs = pair_logs(ll, hl).pairs
    results = {}

    model = EcseaModel()
    consistent = True
    for p in pairs:
        fit(model, p, 5_000, GAMMA)
        try:
            model.check()
        except ValueError:
            consistent = False
    results["consistency"] = consistent

    reference = train(pairs, 5_000, GAMMA)
    results["permutation"] = all(train(_shuffled(pairs, s), 5_000, GAMMA) == reference for s in range(5))

    p = AbstractionParams(5_000, 0.6, Phi.MEAN, GAMMA)
    outs = [apply(reference, pr.ll, p) for pr in pairs]
    results["sortedness"] = all(
        [e.timestamp for e in o] == sorted(e.timestamp for e in o) for o in outs)

    rng = random.Random(0)
    ghost_ok = True
    for pr, out in zip(pairs, outs):
        extra = [Event(f"unknown.label{k}", rng.randint(pr.ll.events[0].timestamp - 10_000,
                                                       pr.ll.events[-1].timestamp + 10_000),
                       pr.case_id, dict(rng.choice(pr.ll.events).attributes), len(pr.ll) + k)
                 for k in range(5)]
        noisy = Trace.from_events(pr.case_id, [*pr.ll.events, *extra])
        ghost_ok &= apply(reference, noisy, p) == out
    results["ghost exclusion"] = ghost_ok

    ok = all(results.values()) and len(pairs) >= 20
    criterion("6 invariant suite", ok,
              f"{len(pairs)} pairs; " + ", ".join(f"{k}={'ok' if v else 'VIOLATED'}" for k, v in results.items()))
    assert ok


def test_transfer_to_disjoint_log(criterion):
    hl_a = generate_hl_log(HLLogConfig(n_activities=30, n_traces=300, mean_trace_len=15,
                                       case_prefix="a", seed=21))
    hl_b = generate_hl_log(HLLogConfig(n_activities=30, n_traces=300, mean_trace_len=15,
                                       case_prefix="b", seed=22))
    accs = []
    for seed in range(5):
        cfg = SynthesisConfig(n_ll_per_hl=4, seed=seed, **MODERATE)
        ll_a, _ = synthesize(hl_a, cfg)
        ll_b, _ = synthesize(hl_b, SynthesisConfig(n_ll_per_hl=4, seed=1_000 + seed, **MODERATE))
        train_pairs = pair_logs(ll_a, hl_a).pairs[:60]
        result = grid_search(train_pairs, None, gamma=GAMMA)
        accs.append(evaluate_accuracy(result.model, pair_logs(ll_b, hl_b).pairs, result.params))
    disjoint = not set(hl_a.case_ids()) & set(hl_b.case_ids())
    ok = disjoint and all(a >= 0.90 for a in accs)
    criterion("7 transfer to a disjoint HL log", ok,
              "accuracies " + ", ".join(f"{a:.4f}" for a in accs))
    assert ok
