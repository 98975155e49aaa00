"""Supervised event abstraction for enterprise collaboration system logs.

A model is learned from paired low-level (system) and high-level (observed
user activity) event logs, then used to turn further low-level logs into
high-level logs suitable for process mining.
"""

__version__ = "0.1.0"

from .applier import apply, apply_log, get_best_mapping, get_first_window, merge_events
from .distance import dld, normalized_similarity
from .log import ColumnMap, Event, EventLog, Trace, parse_csv, parse_xes, write_csv, write_xes
from .model import AbstractionParams, EcseaModel, Phi, load_model, save_model
from .trainer import (TracePair, evaluate_accuracy, fit, grid_search, pair_logs, split_pairs,
                      train)

__all__ = [
    "AbstractionParams", "ColumnMap", "EcseaModel", "Event", "EventLog", "Phi", "Trace",
    "TracePair", "apply", "apply_log", "dld", "evaluate_accuracy", "fit", "get_best_mapping",
    "get_first_window", "grid_search", "load_model", "merge_events", "normalized_similarity",
    "pair_logs", "parse_csv", "parse_xes", "save_model", "split_pairs", "train", "write_csv",
    "write_xes",
]
