"""Curve detection on the PC1 score profile, Cobb angles, severity and VWI."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .angle_matrix import AngleMatrix, Pc1Scores, build_angle_matrix, pc1_scores
from .config import Config
from .landmarks import N_VERTEBRAE, Spine, VertebraId, directional_angle, mean_tilt, vertebra_center

log = logging.getLogger(__name__)

DEFAULT_CONFIG = Config()

# vertebrae scored with the narrower lumbar window
RELAXED = frozenset((VertebraId.L2, VertebraId.L3, VertebraId.L4))
EXCLUDED = frozenset((VertebraId.L5,))


class Kind(Enum):
    Max = "max"
    Min = "min"


class Direction(Enum):
    Right = "right"
    Left = "left"

    @property
    def flipped(self) -> "Direction":
        return Direction.Left if self is Direction.Right else Direction.Right


class Severity(Enum):
    NormalMild = "NormalMild"
    Moderate = "Moderate"
    Severe = "Severe"

    @property
    def code(self) -> str:
        return {"NormalMild": "N", "Moderate": "M", "Severe": "S"}[self.value]


SEVERITY_ORDER = (Severity.NormalMild, Severity.Moderate, Severity.Severe)


@dataclass(frozen=True)
class Extremum:
    vertebra: VertebraId
    kind: Kind
    score: float


@dataclass(frozen=True)
class Curve:
    upper_ev: VertebraId
    lower_ev: VertebraId
    direction: Direction
    cobb_deg: float
    vwi_deg: float = 0.0

    @property
    def span(self) -> tuple[VertebraId, VertebraId]:
        return (self.upper_ev, self.lower_ev)


@dataclass(frozen=True)
class CurveReport:
    case_id: str
    curves: tuple[Curve, ...]
    max_cobb_deg: float
    severity: Severity
    extrema: tuple[Extremum, ...] = ()
    pc1: Pc1Scores | None = None
    constraint_score: float = 0.0


def classify_severity(max_cobb_deg: float, config: Config = DEFAULT_CONFIG) -> Severity:
    lo, hi = config.severity_bounds
    tol = config.compare_atol
    if max_cobb_deg >= hi - tol:
        return Severity.Severe
    if max_cobb_deg >= lo - tol:
        return Severity.Moderate
    return Severity.NormalMild


def report_from_curves(case_id: str, curves: Sequence[Curve], config: Config = DEFAULT_CONFIG, **extra) -> CurveReport:
    """Assemble a report (max Cobb, severity) from an already known curve list."""
    curves = tuple(sorted(curves, key=lambda c: (c.upper_ev, c.lower_ev)))
    max_cobb = max((c.cobb_deg for c in curves), default=0.0)
    return CurveReport(case_id, curves, max_cobb, classify_severity(max_cobb, config), **extra)


def _window(vid: VertebraId, config: Config) -> int:
    return config.lumbar_relaxed_window if vid in RELAXED else config.extremum_window


def detect_extrema(pc1: Pc1Scores, config: Config = DEFAULT_CONFIG) -> list[Extremum]:
    """Local maxima and minima of the PC1 profile.

    A vertebra qualifies when its score is >= (or <=) every in-range neighbour
    inside its window; L5 is outside the range altogether. One whose whole window is level is neither. Runs of
    consecutive same-kind qualifiers collapse to the member with the largest
    absolute score, the cranial one on ties.
    """
    s = np.asarray(pc1.scores, dtype=float)
    # excluded vertebrae are neither candidates nor neighbours
    n = min(v.pos for v in EXCLUDED) if EXCLUDED else len(s)
    hits: list[Extremum] = []
    for pos in range(n):
        vid = VertebraId.at(pos)
        w = _window(vid, config)
        nb = [s[k] for k in range(max(0, pos - w), min(n, pos + w + 1)) if k != pos]
        is_max = all(s[pos] >= x for x in nb)
        is_min = all(s[pos] <= x for x in nb)
        if is_max == is_min:
            continue
        hits.append(Extremum(vid, Kind.Max if is_max else Kind.Min, float(s[pos])))

    out: list[Extremum] = []
    prev_pos = -2
    for e in hits:
        prev = out[-1] if out else None
        if prev is not None and prev.kind is e.kind and e.vertebra.pos - prev_pos == 1:
            if abs(e.score) > abs(prev.score):
                out[-1] = e
            prev_pos = e.vertebra.pos
            continue
        out.append(e)
        prev_pos = e.vertebra.pos
    return out


def _make_curve(am: AngleMatrix, upper: VertebraId, lower: VertebraId) -> Curve:
    g = am[upper.pos, lower.pos]
    wedges = np.abs(np.diag(am.gamma)[upper.pos : lower.pos + 1])
    return Curve(
        upper,
        lower,
        Direction.Right if g > 0 else Direction.Left,
        abs(g),
        float(wedges.mean()),
    )


def _significant(c: Curve, config: Config) -> bool:
    return c.cobb_deg >= config.gamma_threshold_deg - config.compare_atol


def identify_curves(extrema: Sequence[Extremum], am: AngleMatrix, config: Config = DEFAULT_CONFIG) -> list[Curve]:
    """Candidate curves from adjacent opposite-kind extrema, thresholded by |gamma|.

    When the caudal-most extremum sits at L1 or higher, a terminal curve from
    it to L4 is added if that angle clears the threshold.
    """
    extrema = sorted(extrema, key=lambda e: e.vertebra)
    curves: list[Curve] = []
    for a, b in zip(extrema, extrema[1:]):
        if a.kind is b.kind or not am.valid_mask[a.vertebra.pos, b.vertebra.pos]:
            continue
        c = _make_curve(am, a.vertebra, b.vertebra)
        if _significant(c, config):
            curves.append(c)
    if extrema and extrema[-1].vertebra <= VertebraId.L1:
        c = _make_curve(am, extrema[-1].vertebra, VertebraId.L4)
        if _significant(c, config) and c.span not in {k.span for k in curves}:
            curves.append(c)
    return curves


def _overlap(a: Curve, b: Curve) -> int:
    """Number of shared vertebrae beyond a single shared boundary (<= 0 when disjoint)."""
    return min(a.lower_ev, b.lower_ev) - max(a.upper_ev, b.upper_ev)


def postprocess_curves(curves: Sequence[Curve], am: AngleMatrix, config: Config = DEFAULT_CONFIG) -> list[Curve]:
    """Drop overlapping curves, merge same-direction neighbours, re-threshold; repeat to a fixpoint."""

    def key(c: Curve):
        return (c.upper_ev, c.lower_ev)

    out = sorted({c.span: c for c in curves}.values(), key=key)
    while True:
        changed = False
        # overlap removal, smaller |Cobb| loses, cranial survives ties
        i = 0
        while i < len(out):
            j = i + 1
            while j < len(out):
                if _overlap(out[i], out[j]) >= 1:
                    if out[j].cobb_deg > out[i].cobb_deg:
                        del out[i]
                        j = i + 1
                    else:
                        del out[j]
                    changed = True
                    continue
                j += 1
            i += 1
        # merge consecutive same-direction curves, cobb re-read from the matrix
        merged: list[Curve] = []
        for c in out:
            if merged and merged[-1].direction is c.direction:
                merged[-1] = _make_curve(am, merged[-1].upper_ev, c.lower_ev)
                changed = True
            else:
                merged.append(c)
        kept = [c for c in merged if _significant(c, config)]
        changed = changed or len(kept) != len(merged)
        out = sorted({c.span: c for c in kept}.values(), key=key)
        if not changed:
            return out


def vwi(curve_range: tuple[VertebraId, VertebraId], spine: Spine) -> float:
    """Mean absolute endplate divergence over the vertebrae of a curve, ends included."""
    upper, lower = (VertebraId(v) for v in curve_range)
    if upper > lower:
        raise ValueError(f"curve range {upper.label}-{lower.label} is reversed")
    sl = slice(upper.pos, lower.pos + 1)
    return float(np.mean(np.abs(spine.upper_angles[sl] - spine.lower_angles[sl])))


@dataclass(frozen=True)
class Violation:
    vertebra: VertebraId
    deviation_deg: float


def constraint_violation(spine: Spine, eps_deg: float = 5.0) -> tuple[float, list[Violation]]:
    """Sum of |mean tilt - mean directional angle| over interior vertebrae exceeding ``eps_deg``."""
    if eps_deg < 0:
        raise ValueError("eps_deg must be >= 0")
    verts = spine.vertebrae
    centers = [vertebra_center(v) for v in verts]
    beta = [directional_angle(centers[k], centers[k + 1]) for k in range(N_VERTEBRAE - 1)]
    total = 0.0
    hits: list[Violation] = []
    for pos in range(1, N_VERTEBRAE - 1):
        dev = abs(mean_tilt(verts[pos]) - (beta[pos - 1] + beta[pos]) / 2.0)
        if dev > eps_deg:
            total += dev
            hits.append(Violation(verts[pos].id, dev))
    return total, hits


def diagnose_angles(am: AngleMatrix, pc1: Pc1Scores, case_id: str, config: Config = DEFAULT_CONFIG, constraint_score: float = 0.0) -> CurveReport:
    extrema = detect_extrema(pc1, config)
    curves = postprocess_curves(identify_curves(extrema, am, config), am, config)
    return report_from_curves(
        case_id,
        curves,
        config,
        extrema=tuple(extrema),
        pc1=pc1,
        constraint_score=constraint_score,
    )


def diagnose(spine: Spine, config: Config = DEFAULT_CONFIG) -> CurveReport:
    am = build_angle_matrix(spine)
    pc1 = pc1_scores(am, spine.upper_angles)
    rank = int(np.sum(pc1.sigma > config.svd_tol * pc1.sigma[0])) if pc1.sigma[0] > 0 else 0
    if rank > 2:
        log.warning("case %r: angle matrix has numerical rank %d (> 2)", spine.case_id, rank)
    score, _ = constraint_violation(spine, config.eps_deg)
    return diagnose_angles(am, pc1, spine.case_id, config, score)
