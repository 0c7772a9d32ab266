import itertools
import math

import numpy as np
import pytest
from scipy import stats

from spinecurve.diagnosis import Curve, Direction, diagnose, report_from_curves
from spinecurve.errors import (
    ConstantSeries,
    EmptySet,
    IncompleteSpine,
    LengthMismatch,
    MissingColumns,
    NoGtCurves,
    NoPredCurves,
    TooFewPoints,
)
from spinecurve.landmarks import Spine, VertebraId as V
from spinecurve.metrics import (
    CasePair,
    cohort_baselines,
    cohort_correlations,
    confusion_matrix,
    curve_detection_rate,
    diagnostic_accuracy,
    evaluate,
    false_detection_rate,
    match_curves,
    max_cobb_errors,
    mean_angle_error,
    mean_position_error,
    mmae,
    parse_cohort_csv,
    pearson,
)
from spinecurve.synthetic import generate, generate_cohort, random_spec

from conftest import FIVE_CASE_CLASSES, curves_from_rows, spine_of

R, L = Direction.Right, Direction.Left


def pair(cid, gt, pred, **kw):
    return CasePair(cid, report_from_curves(cid, curves_from_rows(gt)), report_from_curves(cid, curves_from_rows(pred)), **kw)


# ---------------------------------------------------------------- five-case fixture


def test_five_cases_classes(five_cases):
    for p in five_cases:
        g, q = FIVE_CASE_CLASSES[p.case_id]
        assert (p.gt.severity.code, p.pred.severity.code) == (g, q)


def test_five_cases_da_and_errors(five_cases):
    assert diagnostic_accuracy(five_cases) == 60.0
    hand = {"a": 30.7 - 25.7, "b": 50.9 - 50.2, "c": 19.6 - 15.8, "d": 26.0 - 13.6, "e": 20.3 - 17.8}
    errs = max_cobb_errors(five_cases)
    for cid, e in hand.items():
        assert errs[cid] == pytest.approx(abs(e), abs=1e-9)
    assert errs["a"] == pytest.approx(5.0, abs=1e-9)
    assert mmae(five_cases) == pytest.approx(sum(abs(e) for e in hand.values()) / 5, abs=1e-9)
    cm = confusion_matrix(five_cases)
    assert cm.sum() == 5 and np.trace(cm) == 3
    assert cm[1, 0] == 1 and cm[0, 1] == 1  # d: M->N, e: N->M


def test_five_cases_detection(five_cases):
    # case b: C7-T7 vs T1-T6 and T7-L2 vs T6-L2 are within +-1
    b = next(p for p in five_cases if p.case_id == "b")
    assert len(match_curves(b.gt.curves, b.pred.curves)) == 2
    # case d: T2-T6 vs T3-T7 and T6-L1 vs T7-L1 match, L1-L4 exact
    d = next(p for p in five_cases if p.case_id == "d")
    assert len(match_curves(d.gt.curves, d.pred.curves)) == 3
    assert curve_detection_rate(five_cases) == 100.0
    assert false_detection_rate(five_cases) == 0.0


# ---------------------------------------------------------------- basic metrics


def test_mmae_examples():
    p = [pair("a", [("T12", "L4", L, 25.7)], [("T12", "L4", L, 30.7)])]
    assert mmae(p) == pytest.approx(5.0)
    two = [pair("x", [("T2", "T8", R, 20.0)], [("T2", "T8", R, 22.0)]), pair("y", [("T2", "T8", R, 20.0)], [("T2", "T8", R, 16.0)])]
    assert mmae(two) == pytest.approx(3.0)
    with pytest.raises(EmptySet):
        mmae([])
    with pytest.raises(EmptySet):
        diagnostic_accuracy([])


def test_cdr_fdr_definitions():
    p = [
        pair("x", [("T6", "T12", R, 20.0)], [("T6", "T12", R, 20.0), ("L1", "L4", L, 12.0)]),
        pair("y", [("C7", "T7", L, 40.0)], [("T1", "T6", L, 40.0)]),
    ]
    assert curve_detection_rate(p) == 100.0
    assert false_detection_rate(p) == pytest.approx(100 / 3)
    with pytest.raises(NoGtCurves):
        curve_detection_rate([pair("z", [], [("T2", "T8", R, 20.0)])])
    with pytest.raises(NoPredCurves):
        false_detection_rate([pair("z", [("T2", "T8", R, 20.0)], [])])


def test_fdr_two_of_thirty():
    pairs = []
    for k in range(15):
        pred = [("T2", "T8", R, 20.0), ("T8", "L2", L, 20.0)]
        if k < 2:
            pred[1] = ("T10", "L4", L, 20.0)
        pairs.append(pair(f"c{k}", [("T2", "T8", R, 20.0), ("T8", "L2", L, 20.0)], pred))
    assert false_detection_rate(pairs) == pytest.approx(200 / 30)
    assert round(false_detection_rate(pairs), 2) == 6.67


def test_one_to_one_matching():
    # both GT curves are within +-1 of the single prediction; only one may count
    gt = curves_from_rows([("T6", "L1", R, 26.0), ("T7", "L2", R, 20.0)])
    pred = curves_from_rows([("T7", "L1", R, 13.5)])
    assert match_curves(gt, pred) == [(0, 0)]


def _brute_max_matching(gt, pred):
    n, m = len(gt), len(pred)
    for k in range(min(n, m), 0, -1):
        for gi in itertools.combinations(range(n), k):
            for pj in itertools.permutations(range(m), k):
                if all(abs(gt[a].upper_ev - pred[b].upper_ev) <= 1 and abs(gt[a].lower_ev - pred[b].lower_ev) <= 1 for a, b in zip(gi, pj)):
                    return k
    return 0


def _chain(rng, n):
    # non-overlapping, alternating curves sharing or separating end vertebrae
    cuts = sorted(rng.choice(np.arange(1, 17), size=n + 1, replace=False))
    d = rng.choice([R, L])
    out = []
    for a, b in zip(cuts, cuts[1:]):
        if b - a >= 1:
            out.append(Curve(V(a), V(b), d, 20.0))
            d = d.flipped
    return out


def test_greedy_matches_brute_force(rng):
    for _ in range(2000):
        gt = _chain(rng, rng.integers(1, 4))
        pred = []
        for c in _chain(rng, rng.integers(0, 4)) if rng.random() < 0.3 else gt:
            u = int(np.clip(c.upper_ev + rng.integers(-2, 3), 1, 16))
            l = int(np.clip(c.lower_ev + rng.integers(-2, 3), u + 1, 17))
            pred.append(Curve(V(u), V(l), c.direction, 20.0))
        assert len(match_curves(gt, pred)) == _brute_max_matching(sorted(gt, key=lambda c: c.upper_ev), pred)


def test_rates_invariant_to_order(five_cases):
    rev = [CasePair(p.case_id, p.gt, report_from_curves(p.case_id, list(reversed(p.pred.curves)))) for p in reversed(five_cases)]
    assert curve_detection_rate(rev) == curve_detection_rate(five_cases)
    assert false_detection_rate(rev) == false_detection_rate(five_cases)


# ---------------------------------------------------------------- landmark metrics


def _shifted(s: Spine, dx, dy) -> Spine:
    a = s.to_array()
    a[:, [0, 3]] += dx
    a[:, [1, 4]] += dy
    return Spine.from_array(a, case_id=s.case_id)


def test_mpe_mae_examples():
    s = spine_of([("T4", "T11", "right", 30.0)], case_id="x")
    r = diagnose(s)
    same = CasePair("x", r, r, s, s)
    assert mean_position_error([same]) == 0 and mean_angle_error([same]) == 0
    moved = CasePair("x", r, r, s, _shifted(s, 3, 4))
    assert mean_position_error([moved]) == pytest.approx(5.0, abs=1e-12)
    t = s.with_angles(s.upper_angles + 2, s.lower_angles + 2)
    assert mean_angle_error([CasePair("x", r, r, s, t)]) == pytest.approx(2.0, abs=1e-12)
    sign = np.where(np.arange(18) % 2, 1.0, -1.0)
    t = s.with_angles(s.upper_angles + sign, s.lower_angles - sign)
    assert mean_angle_error([CasePair("x", r, r, s, t)]) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(IncompleteSpine):
        mean_position_error([CasePair("x", r, r)])


def test_mpe_rayleigh_mean(rng):
    sigma = 2.0
    base = Spine.from_angles(np.zeros(18), np.zeros(18))
    pairs = []
    for k in range(400):
        a = base.to_array()
        a[:, [0, 1, 3, 4]] += rng.normal(0, sigma, size=(18, 4))
        pred = Spine.from_array(a)
        r = report_from_curves(str(k), [])
        pairs.append(CasePair(str(k), r, r, base, pred))
    assert mean_position_error(pairs) == pytest.approx(sigma * math.sqrt(math.pi / 2), rel=0.02)


def test_evaluate_self_identity():
    rng = np.random.default_rng(3)
    pairs = []
    for k in range(20):
        s, _ = generate(random_spec(rng, case_id=f"c{k}", seed=k, noise_px=1.0))
        r = diagnose(s)
        pairs.append(CasePair(s.case_id, r, r, s, s))
    e = evaluate(pairs)
    assert (e.mmae_deg, e.da_pct, e.cdr_pct, e.fdr_pct, e.mpe_px, e.mae_deg) == (0, 100, 100, 0, 0, 0)
    assert e.da_pct == np.trace(e.confusion) / e.n_cases * 100


def test_evaluate_without_curves_or_spines():
    r = report_from_curves("x", [])
    e = evaluate([CasePair("x", r, r)])
    assert e.cdr_pct is None and e.fdr_pct is None and e.mpe_px is None and e.da_pct == 100


# ---------------------------------------------------------------- correlation


def _r_formula(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def test_pearson_hand_dataset():
    x, y = [1, 2, 3, 4, 5], [2, 1, 4, 3, 5]
    r, p = pearson(x, y)
    assert r == pytest.approx(_r_formula(x, y), abs=1e-12)
    assert r == pytest.approx(0.8, abs=1e-12)
    ref = stats.pearsonr(x, y)
    assert p == pytest.approx(ref.pvalue, rel=1e-9)


def test_pearson_linear():
    x = np.arange(10.0)
    r, p = pearson(x, 2 * x + 1)
    assert r == pytest.approx(1.0, abs=1e-12) and p < 1e-12
    r, _ = pearson(x, -3 * x + 7)
    assert r == pytest.approx(-1.0, abs=1e-12)


def test_pearson_against_scipy(rng):
    for _ in range(50):
        n = int(rng.integers(3, 80))
        x = rng.normal(size=n)
        y = 0.3 * x + rng.normal(size=n)
        r, p = pearson(x, y)
        ref = stats.pearsonr(x, y)
        assert r == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-7, abs=1e-15)


def test_pearson_independent_small(rng):
    r, _ = pearson(rng.normal(size=5000), rng.normal(size=5000))
    assert abs(r) < 0.05


def test_pearson_errors():
    with pytest.raises(ConstantSeries):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(LengthMismatch):
        pearson([1, 2, 3], [1, 2])
    with pytest.raises(TooFewPoints):
        pearson([1, 2], [1, 2])


# ---------------------------------------------------------------- cohort


def _csv(rows):
    lines = ["case_id,date,vwi,risser,cobb"]
    lines += [f"{r['case_id']},{r['date']},{r['vwi']},{r['risser']},{r['cobb']}" for r in rows]
    return "\n".join(lines) + "\n"


def test_cohort_progression_definition():
    rows = parse_cohort_csv(
        _csv(
            [
                {"case_id": "A", "date": "2021-06-01", "vwi": 5, "risser": 3, "cobb": 30},
                {"case_id": "A", "date": "2021-01-01", "vwi": 4, "risser": 2, "cobb": 20},
                {"case_id": "A", "date": "2021-03-01", "vwi": 4, "risser": 2, "cobb": 40},
                {"case_id": "B", "date": "2021-01-01", "vwi": 1, "risser": 1, "cobb": 10},
            ]
        )
    )
    base = cohort_baselines(rows)
    assert list(base) == ["A"]
    assert base["A"] == {"vwi": 4.0, "risser": 2.0, "cobb": 20.0, "progression": 10.0}


def test_cohort_planted_zero():
    hits = 0
    for seed in range(100):
        rows = cohort_correlations(generate_cohort(200, 0.0, seed))
        hits += abs(rows[0].r) < 0.2
    assert hits >= 97


def test_cohort_planted_negative():
    rows = cohort_correlations(generate_cohort(500, -0.5, 1))
    assert rows[0].metric == "Initial VWI"
    assert -0.6 <= rows[0].r <= -0.4 and rows[0].significant
    assert [r.metric for r in rows] == ["Initial VWI", "Initial Risser Score", "Initial Cobb Angle"]


def test_cohort_errors():
    rows = generate_cohort(10, -0.3, 0)
    two = [r for r in rows if r["case_id"] in ("P0000", "P0001")]
    with pytest.raises(TooFewPoints):
        cohort_correlations(two)
    flat = [{**r, "vwi": 3.0} for r in rows]
    with pytest.raises(ConstantSeries, match="Initial VWI"):
        cohort_correlations(flat)
    with pytest.raises(MissingColumns, match="risser"):
        parse_cohort_csv("case_id,date,vwi,cobb\nA,2020-01-01,1,2\n")
    with pytest.raises(ValueError):
        generate_cohort(5, 0.1)
