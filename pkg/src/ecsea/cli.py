"""Command-line interface: train, apply, synthesize, evaluate, inspect-model."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from . import __version__
from .applier import ApplyStats, MissingAttributeError, apply
from .evaluation import report as evaluation_report
from .evaluation import run_evaluation
from .log import ColumnMap, EventLog, LogFormatError, read_log, write_csv, write_xes
from .model import ModelFormatError, Phi, load_model, save_model
from .synthetic import HLLogConfig, SynthesisConfig, generate_hl_log, synthesize
from .trainer import (DEFAULT_PHI_GRID, DEFAULT_TAU_GRID, DEFAULT_THETA_GRID, PairingError,
                      SplitConfig, grid_search, pair_logs, split_pairs)

log = logging.getLogger("ecsea")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_MODEL = 0, 1, 2, 3


class InputError(Exception):
    """Bad paths or flag values; maps to exit code 2."""


# --- argument helpers -------------------------------------------------------

def _csv_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in _csv_list(text)]


def _floats(text: str) -> list[float]:
    return [float(v) for v in _csv_list(text)]


def _phis(text: str) -> list[Phi]:
    return [Phi(v.upper()) for v in _csv_list(text)]


def _columns(text: str | None) -> ColumnMap:
    if text is None:
        return ColumnMap(case="case:concept:name", activity="concept:name", time="time:timestamp")
    return ColumnMap.parse(text)


def _read(path: str, fmt: str | None, columns: str | None) -> EventLog:
    if not os.path.isfile(path):
        raise InputError(f"no such file: {path}")
    return read_log(path, fmt, _columns(columns))


def _write_bytes(path: str, data: bytes) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise InputError(f"output directory does not exist: {parent}")
    with open(path, "wb") as fh:
        fh.write(data)


def _out_format(path: str, fmt: str | None) -> str:
    return fmt or ("csv" if path.lower().endswith(".csv") else "xes")


def _serialize(log_: EventLog, fmt: str) -> bytes:
    return write_csv(log_) if fmt == "csv" else write_xes(log_)


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


# --- subcommands ------------------------------------------------------------

def cmd_train(args) -> int:
    ll_log = _read(args.ll, args.format, args.ll_columns)
    hl_log = _read(args.hl, args.format, args.hl_columns)
    pairing = pair_logs(ll_log, hl_log)
    pairs = pairing.pairs
    if args.no_split:
        train_pairs, test_pairs = pairs, None
    else:
        train_pairs, test_pairs = split_pairs(pairs, SplitConfig(args.train_fraction, args.seed))
    gamma = _csv_list(args.gamma)
    start = time.perf_counter()
    result = grid_search(train_pairs, test_pairs, args.tau_grid, args.theta_grid,
                         args.phi_grid, gamma)
    seconds = time.perf_counter() - start
    _write_bytes(args.out_model, save_model(result.model, result.params))
    log.info("winner %s train_acc=%.4f", result.params.to_dict(), result.train_acc)
    if args.report:
        doc = result.report()
        doc.update({
            "n_pairs": len(pairs), "n_train": len(train_pairs),
            "n_test": len(test_pairs) if test_pairs else 0,
            "unpaired_ll_cases": pairing.ll_only, "unpaired_hl_cases": pairing.hl_only,
            "seed": args.seed, "seconds": seconds,
        })
        _write_bytes(args.report, _json_bytes(doc))
    return EXIT_OK


def _apply_chunk(model, traces, params):
    stats = ApplyStats()
    return [apply(model, t, params, stats=stats) for t in traces], stats


def cmd_apply(args) -> int:
    if not os.path.isfile(args.model):
        raise InputError(f"no such file: {args.model}")
    with open(args.model, "rb") as fh:
        model, params = load_model(fh.read())
    overrides = {k: getattr(args, k) for k in ("tau_ms", "theta", "phi") if getattr(args, k) is not None}
    if args.gamma is not None:
        overrides["gamma"] = tuple(_csv_list(args.gamma))
    if overrides:
        log.warning("overriding parameters stored in the model: %s", overrides)
        params = replace(params, **overrides)
    ll_log = _read(args.ll, args.format, args.ll_columns)

    traces = list(ll_log)
    workers = max(1, args.threads)
    if workers > 1 and len(traces) > 1:
        chunks = [traces[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_apply_chunk, [model] * workers, chunks, [params] * workers))
        by_case = {t.case_id: t for out, _ in results for t in out}
        hl_traces = [by_case[t.case_id] for t in traces]
        stats = ApplyStats()
        for _, s in results:
            for k in vars(stats):
                setattr(stats, k, getattr(stats, k) + getattr(s, k))
    else:
        hl_traces, stats = _apply_chunk(model, traces, params)
    out_log = EventLog({t.case_id: t for t in hl_traces})
    _write_bytes(args.out, _serialize(out_log, _out_format(args.out, args.format)))
    log.info("abstracted %d traces: %d HL events, %d ghost drops, %d unknown LL events",
             len(hl_traces), stats.created, stats.ghosts, stats.unknown)
    return EXIT_OK


def _synth_config(args, n: int | None = None) -> SynthesisConfig:
    try:
        return SynthesisConfig(
            n_ll_per_hl=n if n is not None else args.n_ll_per_hl,
            max_jitter_ms=args.jitter_ms, reorder_prob=args.reorder_prob,
            shared_ll_fraction=args.shared_fraction, ghost_rate=args.ghost_rate,
            ghost_spread_ms=args.ghost_spread_ms, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_synthesize(args) -> int:
    config = _synth_config(args)
    hl_log = _read(args.hl, args.format, args.hl_columns)
    ll_log, truth = synthesize(hl_log, config)
    _write_bytes(args.out_ll, _serialize(ll_log, _out_format(args.out_ll, args.format)))
    _write_bytes(args.out_truth, truth.to_json())
    log.info("synthesized %d LL events over %d labels (%d ghosts)",
             ll_log.n_events(), len(ll_log.activities()), truth.n_ghosts())
    return EXIT_OK


def cmd_generate_hl(args) -> int:
    hl_log = generate_hl_log(HLLogConfig(
        n_activities=args.activities, n_traces=args.traces, mean_trace_len=args.trace_len,
        case_prefix=args.case_prefix, seed=args.seed))
    _write_bytes(args.out, _serialize(hl_log, _out_format(args.out, args.format)))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if args.hl:
        hl_log = _read(args.hl, args.format, args.hl_columns)
    else:
        hl_log = generate_hl_log(HLLogConfig(
            n_activities=args.activities, n_traces=args.traces,
            mean_trace_len=args.trace_len, seed=args.seed))
    configs = [_synth_config(args, n) for n in args.n_values]
    summaries = run_evaluation(hl_log, configs, args.logs_per_config, args.train_fraction,
                               _csv_list(args.gamma), args.tau_grid, args.theta_grid,
                               args.phi_grid)
    doc = evaluation_report(summaries)
    doc["hl_log"] = {"traces": len(hl_log), "events": hl_log.n_events(),
                     "activities": len(hl_log.activities())}
    _write_bytes(args.report, _json_bytes(doc))
    if args.report_csv:
        buf = io.StringIO(newline="")
        w = csv.DictWriter(buf, fieldnames=list(doc["rows"][0]), lineterminator="\n")
        w.writeheader()
        w.writerows(doc["rows"])
        _write_bytes(args.report_csv, buf.getvalue().encode("utf-8"))
    for row in doc["rows"]:
        print(f"n={row['n_ll_per_hl']}: test_acc={row['test_acc_mean']:.4f} "
              f"(+/- {row['test_acc_std']:.4f}) train={row['train_seconds_mean']:.2f}s")
    return EXIT_OK


def cmd_inspect_model(args) -> int:
    if not os.path.isfile(args.model):
        raise InputError(f"no such file: {args.model}")
    with open(args.model, "rb") as fh:
        model, params = load_model(fh.read())
    out = sys.stdout
    out.write(f"params: {json.dumps(params.to_dict())}\n")
    out.write(f"llc ({len(model.llc)} LL activities)\n")
    for ll in sorted(model.llc):
        out.write(f"  {ll} -> {', '.join(sorted(model.llc[ll]))}\n")
    out.write(f"hlc ({len(model.hlc)} HL activities, {model.n_sequences()} sequences)\n")
    for hl in sorted(model.hlc):
        out.write(f"  {hl}\n")
        for seq, n in sorted(model.hlc[hl].items(), key=lambda kv: (-kv[1], kv[0])):
            out.write(f"    {n:>6}  <{', '.join(seq)}>\n")
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="random seed")
    p.add_argument("--format", choices=("xes", "csv"), default=d(None),
                   help="log format (default: by file suffix)")
    p.add_argument("--threads", type=int, default=d(1), help="worker processes for apply")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _add_grids(p):
    p.add_argument("--tau-grid", type=_ints, default=list(DEFAULT_TAU_GRID), help="ms, comma separated")
    p.add_argument("--theta-grid", type=_floats, default=list(DEFAULT_THETA_GRID))
    p.add_argument("--phi-grid", type=_phis, default=list(DEFAULT_PHI_GRID))


def _add_synth(p, with_n: bool):
    if with_n:
        p.add_argument("--n-ll-per-hl", type=int, default=2)
    p.add_argument("--jitter-ms", type=int, default=2_000)
    p.add_argument("--reorder-prob", type=float, default=0.0)
    p.add_argument("--shared-fraction", type=float, default=0.0)
    p.add_argument("--ghost-rate", type=float, default=0.0)
    p.add_argument("--ghost-spread-ms", type=int, default=30_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecsea", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _add_globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)
    colhelp = 'CSV column map, e.g. "case=C_ID,activity=EVENT_NAME,time=EVENT_TS,attrs=USER_UUID|ITEM_UUID"'

    p = sub.add_parser("train", parents=[common], help="train a model by grid search")
    p.add_argument("--ll", required=True)
    p.add_argument("--hl", required=True)
    p.add_argument("--ll-columns", help=colhelp)
    p.add_argument("--hl-columns", help=colhelp)
    p.add_argument("--gamma", default="", help="grouping attribute names, comma separated")
    _add_grids(p)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--no-split", action="store_true", help="train and select on all pairs")
    p.add_argument("--out-model", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("apply", parents=[common], help="abstract an LL log with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--ll", required=True)
    p.add_argument("--ll-columns", help=colhelp)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", dest="tau_ms", type=int, help="override (not recommended)")
    p.add_argument("--theta", type=float, help="override (not recommended)")
    p.add_argument("--phi", type=lambda s: Phi(s.upper()), help="override (not recommended)")
    p.add_argument("--gamma", help="override (not recommended)")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("synthesize", parents=[common], help="synthesize an LL log from an HL log")
    p.add_argument("--hl", required=True)
    p.add_argument("--hl-columns", help=colhelp)
    _add_synth(p, with_n=True)
    p.add_argument("--out-ll", required=True)
    p.add_argument("--out-truth", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("generate-hl", parents=[common], help="generate a random HL log")
    p.add_argument("--activities", type=int, default=45)
    p.add_argument("--traces", type=int, default=1000)
    p.add_argument("--trace-len", type=int, default=20)
    p.add_argument("--case-prefix", default="case")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_hl)

    p = sub.add_parser("evaluate", parents=[common], help="synthetic accuracy/runtime experiment")
    p.add_argument("--hl", help="HL log (default: generate one)")
    p.add_argument("--hl-columns", help=colhelp)
    p.add_argument("--activities", type=int, default=45)
    p.add_argument("--traces", type=int, default=1000)
    p.add_argument("--trace-len", type=int, default=20)
    p.add_argument("--n-values", type=_ints, default=[2, 4, 6, 8])
    p.add_argument("--logs-per-config", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.1)
    p.add_argument("--gamma", default="org:resource,org:role")
    _add_synth(p, with_n=False)
    _add_grids(p)
    p.add_argument("--report", required=True)
    p.add_argument("--report-csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect-model", parents=[common], help="print a model's llc and hlc")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_inspect_model)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ModelFormatError as exc:
        print(f"ecsea: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (InputError, LogFormatError, PairingError, MissingAttributeError, ValueError,
            OSError) as exc:
        print(f"ecsea: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"ecsea: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
