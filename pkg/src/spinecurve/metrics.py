"""Evaluation metrics over paired prediction / ground-truth cases, and cohort correlation."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .diagnosis import SEVERITY_ORDER, Curve, CurveReport
from .errors import (
    ConstantSeries,
    EmptySet,
    IncompleteSpine,
    LengthMismatch,
    MissingColumns,
    NoGtCurves,
    NoPredCurves,
    SchemaError,
    TooFewPoints,
)
from .landmarks import Spine

# MPE / MAE average over all 36 landmarks of all cases
AVERAGING_NOTE = "MPE and MAE average over 36 endplates per case and over cases (divisor 36*N)"


@dataclass(frozen=True)
class CasePair:
    case_id: str
    gt: CurveReport
    pred: CurveReport
    gt_spine: Spine | None = None
    pred_spine: Spine | None = None


@dataclass(frozen=True)
class EvalReport:
    mmae_deg: float
    da_pct: float
    cdr_pct: float | None
    fdr_pct: float | None
    mpe_px: float | None
    mae_deg: float | None
    confusion: np.ndarray
    n_cases: int
    n_gt_curves: int
    n_pred_curves: int
    case_errors: dict = field(default_factory=dict)


def _nonempty(pairs: Sequence[CasePair]) -> Sequence[CasePair]:
    pairs = list(pairs)
    if not pairs:
        raise EmptySet("no case pairs to evaluate")
    return pairs


def max_cobb_errors(pairs: Sequence[CasePair]) -> dict[str, float]:
    return {p.case_id: abs(p.pred.max_cobb_deg - p.gt.max_cobb_deg) for p in _nonempty(pairs)}


def mmae(pairs: Sequence[CasePair]) -> float:
    errs = list(max_cobb_errors(pairs).values())
    return float(sum(errs) / len(errs))


def diagnostic_accuracy(pairs: Sequence[CasePair]) -> float:
    pairs = _nonempty(pairs)
    hits = sum(p.pred.severity is p.gt.severity for p in pairs)
    return 100.0 * hits / len(pairs)


def confusion_matrix(pairs: Sequence[CasePair]) -> np.ndarray:
    """3x3 counts; rows are ground-truth severity, columns predicted (Normal/Mild, Moderate, Severe)."""
    out = np.zeros((3, 3), dtype=int)
    for p in _nonempty(pairs):
        out[SEVERITY_ORDER.index(p.gt.severity), SEVERITY_ORDER.index(p.pred.severity)] += 1
    return out


def curves_match(gt: Curve, pred: Curve, tol: int = 1) -> bool:
    return abs(pred.upper_ev - gt.upper_ev) <= tol and abs(pred.lower_ev - gt.lower_ev) <= tol


def _sorted(curves: Iterable[Curve]) -> list[Curve]:
    return sorted(curves, key=lambda c: (c.upper_ev, c.lower_ev))


def match_curves(gt: Sequence[Curve], pred: Sequence[Curve]) -> list[tuple[int, int]]:
    """One-to-one greedy matching, cranial-first on both sides.

    Indices refer to the cranial-to-caudal ordering of each list.
    """
    gt, pred = _sorted(gt), _sorted(pred)
    used: set[int] = set()
    pairs = []
    for i, g in enumerate(gt):
        for j, p in enumerate(pred):
            if j not in used and curves_match(g, p):
                used.add(j)
                pairs.append((i, j))
                break
    return pairs


def curve_detection_rate(pairs: Sequence[CasePair]) -> float:
    total = detected = 0
    for p in _nonempty(pairs):
        total += len(p.gt.curves)
        detected += len(match_curves(p.gt.curves, p.pred.curves))
    if total == 0:
        raise NoGtCurves("no ground-truth curves in the case set")
    return 100.0 * detected / total


def false_detection_rate(pairs: Sequence[CasePair]) -> float:
    total = false = 0
    for p in _nonempty(pairs):
        for c in p.pred.curves:
            total += 1
            false += not any(curves_match(g, c) for g in p.gt.curves)
    if total == 0:
        raise NoPredCurves("no predicted curves in the case set")
    return 100.0 * false / total


def _spines(pairs: Sequence[CasePair]) -> list[tuple[Spine, Spine]]:
    out = []
    for p in _nonempty(pairs):
        if p.gt_spine is None or p.pred_spine is None:
            raise IncompleteSpine(f"case {p.case_id!r} lacks landmark data")
        out.append((p.gt_spine, p.pred_spine))
    return out


def mean_position_error(pairs: Sequence[CasePair]) -> float:
    """Mean Euclidean midpoint error (px) over all 36 endplates of all cases."""
    per_case = [
        float(np.linalg.norm(pred.midpoints() - gt.midpoints(), axis=1).mean())
        for gt, pred in _spines(pairs)
    ]
    return float(np.mean(per_case))


def mean_angle_error(pairs: Sequence[CasePair]) -> float:
    """Mean absolute endplate angle error (deg) over all 36 endplates of all cases."""
    per_case = [
        float(np.abs(pred.endplate_angles() - gt.endplate_angles()).mean())
        for gt, pred in _spines(pairs)
    ]
    return float(np.mean(per_case))


def evaluate(pairs: Sequence[CasePair]) -> EvalReport:
    """All metrics; rates undefined for the set (no curves, no landmarks) come back as None."""
    pairs = _nonempty(pairs)

    def maybe(fn):
        try:
            return fn(pairs)
        except (EmptySet, IncompleteSpine):
            return None

    return EvalReport(
        mmae_deg=mmae(pairs),
        da_pct=diagnostic_accuracy(pairs),
        cdr_pct=maybe(curve_detection_rate),
        fdr_pct=maybe(false_detection_rate),
        mpe_px=maybe(mean_position_error),
        mae_deg=maybe(mean_angle_error),
        confusion=confusion_matrix(pairs),
        n_cases=len(pairs),
        n_gt_curves=sum(len(p.gt.curves) for p in pairs),
        n_pred_curves=sum(len(p.pred.curves) for p in pairs),
        case_errors=max_cobb_errors(pairs),
    )


# ---------------------------------------------------------------------------
# correlation


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson r with a two-sided Student-t p-value (n - 2 degrees of freedom)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"series lengths differ: {x.shape} vs {y.shape}")
    n = len(x)
    if n < 3:
        raise TooFewPoints(f"need at least 3 points, got {n}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ConstantSeries("a series is constant")
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * stats.t.sf(abs(t), n - 2))
    return r, p


COHORT_COLUMNS = ("case_id", "date", "vwi", "risser", "cobb")
COHORT_METRICS = (
    ("Initial VWI", "vwi"),
    ("Initial Risser Score", "risser"),
    ("Initial Cobb Angle", "cobb"),
)


@dataclass(frozen=True)
class CohortRow:
    metric: str
    r: float
    p: float
    n: int
    significant: bool


def parse_cohort_csv(text: str, where: str = "<cohort>") -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise MissingColumns(f"{where}: empty file")
    missing = [c for c in COHORT_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise MissingColumns(f"{where}: missing columns {', '.join(missing)}")
    rows = []
    for row in reader:
        loc = f"{where}: line {reader.line_num}"
        try:
            rows.append(
                {
                    "case_id": row["case_id"],
                    "date": dt.date.fromisoformat(row["date"].strip()),
                    "vwi": float(row["vwi"]),
                    "risser": float(row["risser"]),
                    "cobb": float(row["cobb"]),
                }
            )
        except (ValueError, AttributeError) as exc:
            raise SchemaError(f"{loc}: {exc}") from None
    return rows


def cohort_baselines(rows: Iterable[dict]) -> dict[str, dict]:
    """Per patient: baseline values and progression (last minus first Cobb).

    Patients with fewer than two visits are left out.
    """
    visits: dict[str, list[dict]] = defaultdict(list)
    for row in rows:
        d = row["date"]
        if isinstance(d, str):
            d = dt.date.fromisoformat(d)
        visits[str(row["case_id"])].append({**row, "date": d})
    out = {}
    for pid in sorted(visits):
        seq = sorted(visits[pid], key=lambda r: r["date"])
        if len(seq) < 2:
            continue
        first, last = seq[0], seq[-1]
        out[pid] = {
            "vwi": float(first["vwi"]),
            "risser": float(first["risser"]),
            "cobb": float(first["cobb"]),
            "progression": float(last["cobb"]) - float(first["cobb"]),
        }
    return out


def cohort_correlations(rows: Iterable[dict], alpha: float = 0.05) -> list[CohortRow]:
    base = cohort_baselines(rows)
    if len(base) < 3:
        raise TooFewPoints(f"need at least 3 patients with follow-up, got {len(base)}")
    prog = [b["progression"] for b in base.values()]
    out = []
    for name, key in COHORT_METRICS:
        try:
            r, p = pearson([b[key] for b in base.values()], prog)
        except ConstantSeries:
            raise ConstantSeries(f"{name}: column {key!r} is constant across patients") from None
        out.append(CohortRow(name, r, p, len(base), p < alpha))
    return out
