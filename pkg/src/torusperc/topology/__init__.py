"""Excursion-set topology: events, thresholds, duality and Morse counts."""
from .duality import DualityCase, DualityViolation, duality_classify
from .events import EventSpec, GeometryError, evaluate_event, loop_classes, site_graph
from .morse import MorseReport, morse_report
from .threshold import NotIncreasing, ThresholdResult, saddle_derivative_check, threshold_sweep
from .unionfind import PeriodicUnionFind, UnionOutcome, uf_union

__all__ = [
    "DualityCase", "DualityViolation", "duality_classify",
    "EventSpec", "GeometryError", "evaluate_event", "loop_classes", "site_graph",
    "MorseReport", "morse_report",
    "NotIncreasing", "ThresholdResult", "saddle_derivative_check", "threshold_sweep",
    "PeriodicUnionFind", "UnionOutcome", "uf_union",
]
