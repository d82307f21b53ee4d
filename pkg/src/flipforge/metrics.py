"""Spatiotemporal detection scoring: one-by-one matching and F1.

A ground-truth event and a detection are eligible to match when their
Euclidean image distance is <= spatial_tol AND their frame distance is
<= temporal_tol (both inclusive, checked independently). Eligible pairs are
associated greedily closest-first; leftovers become false positives /
negatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .heatmap import Detection
from .imagecore import MitosisEvent

DEFAULT_SPATIAL_TOL = 15.0
DEFAULT_TEMPORAL_TOL = 6.0


@dataclass
class MatchConfig:
    spatial_tol: float = DEFAULT_SPATIAL_TOL
    temporal_tol: float = DEFAULT_TEMPORAL_TOL

    def __post_init__(self) -> None:
        if self.spatial_tol <= 0 or self.temporal_tol <= 0:
            raise ValueError("tolerances must be > 0")


@dataclass
class MatchResult:
    """Accepted (gt, det) pairs plus the unmatched leftovers on each side."""

    matches: list[tuple[int, int, float, int]]  # (gt_index, det_index, spatial, |dt|)
    fp: list[int]  # unmatched detection indices
    fn: list[int]  # unmatched ground-truth indices

    @property
    def tp(self) -> int:
        return len(self.matches)


@dataclass
class MetricsReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "MetricsReport":
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        return cls(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)

    def as_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def match(
    gt: list[MitosisEvent], det: list[Detection], cfg: MatchConfig | None = None
) -> MatchResult:
    """Greedy one-by-one association of detections to ground truth.

    Eligible pairs are sorted ascending by (spatial distance, |dt|,
    gt_index, det_index) and accepted greedily while both endpoints are
    still free, so each index appears at most once in the result.
    """
    cfg = cfg or MatchConfig()
    eligible: list[tuple[float, int, int, int]] = []
    for gi, g in enumerate(gt):
        for di, d in enumerate(det):
            dt = abs(d.t - g.t)
            if dt > cfg.temporal_tol:
                continue
            dist = math.hypot(d.x - g.x, d.y - g.y)
            if dist > cfg.spatial_tol:
                continue
            eligible.append((dist, dt, gi, di))
    eligible.sort()

    used_gt: set[int] = set()
    used_det: set[int] = set()
    matches: list[tuple[int, int, float, int]] = []
    for dist, dt, gi, di in eligible:
        if gi in used_gt or di in used_det:
            continue
        used_gt.add(gi)
        used_det.add(di)
        matches.append((gi, di, dist, dt))
    fp = [di for di in range(len(det)) if di not in used_det]
    fn = [gi for gi in range(len(gt)) if gi not in used_gt]
    return MatchResult(matches=matches, fp=fp, fn=fn)


def score(result: MatchResult) -> MetricsReport:
    """TP/FP/FN counts and precision/recall/F1 (0 on empty denominators)."""
    return MetricsReport.from_counts(result.tp, len(result.fp), len(result.fn))


def sweep(
    gt: list[MitosisEvent],
    det: list[Detection],
    cfg: MatchConfig | None = None,
    thresholds: list[float] = (),
) -> list[tuple[float, MetricsReport]]:
    """Score the detections at each score threshold (keep score >= threshold)."""
    out = []
    for th in thresholds:
        kept = [d for d in det if d.score >= th]
        out.append((th, score(match(gt, kept, cfg))))
    return out
