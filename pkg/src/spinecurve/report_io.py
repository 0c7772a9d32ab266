"""Stable JSON/CSV renderings of reports.

Floats are always written with six decimals and keys keep insertion order, so
identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable

import numpy as np

from .diagnosis import Curve, CurveReport, Direction, Severity, report_from_curves
from .landmarks import VertebraId
from .metrics import AVERAGING_NOTE, CohortRow, EvalReport

FLOAT_FMT = "{:.6f}"


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = FLOAT_FMT.format(x)
    return "0.000000" if s == "-0.000000" else s


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with fixed six-decimal floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def curve_to_dict(c: Curve) -> dict:
    return {
        "upper_ev": c.upper_ev.label,
        "lower_ev": c.lower_ev.label,
        "direction": c.direction.value,
        "cobb_deg": c.cobb_deg,
        "vwi_deg": c.vwi_deg,
    }


def curve_from_dict(d: dict) -> Curve:
    return Curve(
        VertebraId.from_label(d["upper_ev"]),
        VertebraId.from_label(d["lower_ev"]),
        Direction(str(d["direction"]).lower()),
        float(d["cobb_deg"]),
        float(d.get("vwi_deg", 0.0)),
    )


def report_to_dict(r: CurveReport) -> dict:
    return {
        "case_id": r.case_id,
        "curves": [curve_to_dict(c) for c in r.curves],
        "max_cobb_deg": r.max_cobb_deg,
        "severity": r.severity.value,
        "pc1_scores": [] if r.pc1 is None else [float(x) for x in r.pc1.scores],
        "singular_values": [] if r.pc1 is None else [float(x) for x in r.pc1.sigma],
        "constraint_score": r.constraint_score,
    }


def report_from_dict(d: dict) -> CurveReport:
    """Rebuild a report from its JSON form (curves and severity only)."""
    rep = report_from_curves(str(d["case_id"]), [curve_from_dict(c) for c in d.get("curves", [])])
    if "severity" in d and Severity(d["severity"]) is not rep.severity:
        raise ValueError(f"case {d['case_id']!r}: severity does not match its curves")
    return rep


REPORT_CSV_COLUMNS = (
    "case_id",
    "curve",
    "upper_ev",
    "lower_ev",
    "direction",
    "cobb_deg",
    "vwi_deg",
    "max_cobb_deg",
    "severity",
)


def reports_to_csv(reports: Iterable[CurveReport]) -> str:
    """One row per curve; a curve-less case gets a single row with empty curve fields."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_COLUMNS)
    for r in reports:
        tail = [_fmt_float(r.max_cobb_deg), r.severity.value]
        if not r.curves:
            w.writerow([r.case_id, "", "", "", "", "", "", *tail])
        for k, c in enumerate(r.curves, 1):
            w.writerow(
                [
                    r.case_id,
                    k,
                    c.upper_ev.label,
                    c.lower_ev.label,
                    c.direction.value,
                    _fmt_float(c.cobb_deg),
                    _fmt_float(c.vwi_deg),
                    *tail,
                ]
            )
    return buf.getvalue()


def eval_to_dict(e: EvalReport, warnings: Iterable[str] = ()) -> dict:
    return {
        "mmae_deg": e.mmae_deg,
        "da_pct": e.da_pct,
        "cdr_pct": e.cdr_pct,
        "fdr_pct": e.fdr_pct,
        "mpe_px": e.mpe_px,
        "mae_deg": e.mae_deg,
        "confusion": {
            "labels": [s.value for s in (Severity.NormalMild, Severity.Moderate, Severity.Severe)],
            "rows_are": "ground_truth",
            "counts": e.confusion.tolist(),
        },
        "n_cases": e.n_cases,
        "n_gt_curves": e.n_gt_curves,
        "n_pred_curves": e.n_pred_curves,
        "max_cobb_abs_error_deg": dict(sorted(e.case_errors.items())),
        "metadata": {"averaging": AVERAGING_NOTE},
        "warnings": list(warnings),
    }


def cohort_to_dict(rows: Iterable[CohortRow]) -> dict:
    rows = list(rows)
    return {
        "n_patients": rows[0].n if rows else 0,
        "progression": "last minus first Cobb angle per patient",
        "rows": [
            {"metric": r.metric, "r": r.r, "p": r.p, "significant": r.significant} for r in rows
        ],
    }
