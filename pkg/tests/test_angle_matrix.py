import numpy as np

from spinecurve.angle_matrix import build_angle_matrix, pc1_scores
from spinecurve.diagnosis import Kind, detect_extrema
from spinecurve.landmarks import Spine, VertebraId
from spinecurve.svd import numerical_rank, svd

from conftest import spine_of


def random_angles(rng, n=18):
    return rng.uniform(-40, 40, n), rng.uniform(-40, 40, n)


def test_zero_spine():
    am = build_angle_matrix(Spine.from_angles(np.zeros(18), np.zeros(18)))
    assert np.all(am.gamma == 0)
    p = pc1_scores(am)
    assert np.all(p.scores == 0)


def test_entries_exact(rng):
    u, l = random_angles(rng)
    u[3], l[9] = 10.0, -15.0
    am = build_angle_matrix(Spine.from_angles(u, l))
    assert am[3, 9] == 25.0
    for i in range(18):
        for j in range(18):
            assert am.gamma[i, j] == u[i] - l[j]
        assert am.gamma[i, i] == Spine.from_angles(u, l).vertebrae[i].wedge_deg


def test_mask_orientation():
    am = build_angle_matrix(Spine.from_angles(np.zeros(18), np.zeros(18)))
    assert am.valid_mask[VertebraId.T6.pos, VertebraId.T12.pos]
    assert am.valid_mask[4, 4]
    assert not am.valid_mask[VertebraId.T12.pos, VertebraId.T6.pos]
    m = am.masked()
    assert np.isnan(m[10, 2]) and m[2, 10] == 0


def test_gamma_plus_transpose_identity(rng):
    # brute force over random spines
    for _ in range(100):
        u, l = random_angles(rng)
        g = build_angle_matrix(Spine.from_angles(u, l)).gamma
        w = u - l
        expect = w[:, None] + w[None, :]
        np.testing.assert_allclose(g + g.T, expect, atol=1e-12)


def test_rank_two(rng):
    for _ in range(100):
        u, l = random_angles(rng)
        res = svd(build_angle_matrix(Spine.from_angles(u, l)).gamma)
        assert numerical_rank(res, 1e-8) <= 2


def test_sign_convention(rng):
    for _ in range(50):
        u, l = random_angles(rng)
        p = pc1_scores(build_angle_matrix(Spine.from_angles(u, l)), u)
        assert np.dot(p.scores, u - u.mean()) >= 0


def test_scores_affine_in_upper(rng):
    # rows of gamma differ by constants, so PC1 row scores are affine in theta_upper
    u, l = random_angles(rng)
    p = pc1_scores(build_angle_matrix(Spine.from_angles(u, l)), u)
    coef = np.polyfit(u, p.scores, 1)
    np.testing.assert_allclose(np.polyval(coef, u), p.scores, atol=1e-9)


def test_linear_ramp_extrema_at_ends():
    ramp = np.linspace(-17, 17, 18)
    am = build_angle_matrix(Spine.from_angles(ramp, ramp))
    p = pc1_scores(am, ramp)
    assert np.all(np.diff(p.scores) > 0)
    ex = detect_extrema(p)
    assert [(e.vertebra, e.kind) for e in ex] == [(VertebraId.C7, Kind.Min), (VertebraId.L4, Kind.Max)]


def test_translation_invariance(rng):
    u, l = random_angles(rng)
    a = pc1_scores(build_angle_matrix(Spine.from_angles(u, l)), u)
    for c in (-7.5, 3.25, 20.0):
        b = pc1_scores(build_angle_matrix(Spine.from_angles(u + c, l + c)), u + c)
        np.testing.assert_allclose(b.scores, a.scores, atol=1e-9)


def test_mirror_antisymmetry(rng):
    for _ in range(30):
        u, l = random_angles(rng)
        a = pc1_scores(build_angle_matrix(Spine.from_angles(u, l)), u)
        b = pc1_scores(build_angle_matrix(Spine.from_angles(-u, -l)), -u)
        np.testing.assert_allclose(b.scores, -a.scores, atol=1e-9)
        ea, eb = detect_extrema(a), detect_extrema(b)
        assert [e.vertebra for e in ea] == [e.vertebra for e in eb]
        assert all(x.kind is not y.kind for x, y in zip(ea, eb))


def test_single_right_thoracic_curve():
    s = spine_of([("T4", "T12", "right", 30.0)])
    am = build_angle_matrix(s)
    p = pc1_scores(am, s.upper_angles)
    interior = [e for e in detect_extrema(p) if VertebraId.C7 < e.vertebra < VertebraId.L4]
    kinds = {e.kind: e.vertebra for e in interior}
    assert set(kinds) == {Kind.Max, Kind.Min} and len(interior) == 2
    assert abs(kinds[Kind.Max] - VertebraId.T4) <= 1
    assert abs(kinds[Kind.Min] - VertebraId.T12) <= 1
