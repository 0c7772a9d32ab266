import sys

import numpy as np
import pytest

from spinecurve.diagnosis import Curve, Direction, report_from_curves
from spinecurve.landmarks import VertebraId
from spinecurve.metrics import CasePair
from spinecurve.synthetic import CurveSpec, SpineSpec, generate

R, L = Direction.Right, Direction.Left

# Five published cases: (upper, lower, direction, cobb) for ground truth and prediction.
FIVE_CASES = {
    "a": (
        [("T6", "T12", R, 23.3), ("T12", "L4", L, 25.7)],
        [("T6", "T12", R, 20.1), ("T12", "L4", L, 30.7)],
    ),
    "b": (
        [("C7", "T7", L, 42.4), ("T7", "L2", R, 50.9)],
        [("T1", "T6", L, 40.7), ("T6", "L2", R, 50.2)],
    ),
    "c": (
        [("T1", "T7", R, 12.0), ("T7", "T12", L, 13.4), ("T12", "L4", R, 15.8)],
        [("T2", "T7", R, 13.9), ("T7", "L1", L, 13.0), ("L1", "L4", R, 19.6)],
    ),
    "d": (
        [("T6", "L1", R, 26.0), ("T2", "T6", L, 10.4), ("L1", "L4", L, 15.8)],
        [("T7", "L1", R, 13.5), ("T3", "T7", L, 12.4), ("L1", "L4", L, 13.6)],
    ),
    "e": (
        [("T5", "T10", R, 16.0), ("T10", "L3", L, 17.8)],
        [("T5", "T10", R, 12.6), ("T10", "L3", L, 20.3)],
    ),
}
FIVE_CASE_CLASSES = {"a": ("M", "M"), "b": ("S", "S"), "c": ("N", "N"), "d": ("M", "N"), "e": ("N", "M")}


def curves_from_rows(rows):
    return [Curve(VertebraId.from_label(u), VertebraId.from_label(l), d, c) for u, l, d, c in rows]


def five_case_pairs():
    return [
        CasePair(
            cid,
            report_from_curves(cid, curves_from_rows(gt)),
            report_from_curves(cid, curves_from_rows(pred)),
        )
        for cid, (gt, pred) in FIVE_CASES.items()
    ]


def spec_of(rows, **kw):
    curves = tuple(
        CurveSpec(VertebraId.from_label(u), VertebraId.from_label(l), Direction(d) if isinstance(d, str) else d, c)
        for u, l, d, c in rows
    )
    return SpineSpec(curves, **kw)


def spine_of(rows, **kw):
    return generate(spec_of(rows, **kw))[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def five_cases():
    return five_case_pairs()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
