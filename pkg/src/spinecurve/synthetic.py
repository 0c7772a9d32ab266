"""Parametric scoliotic spines with known curves, and synthetic follow-up cohorts.

Tilt is built as a walk along the 36 endplates, cranial to caudal. Inside a
planted curve the tilt follows a cosine ramp: the per-vertebra tilt increment
is a half-sine that vanishes at both end vertebrae and peaks at the apex. The
end vertebrae are then the most tilted ones, and
``theta_upper(UEV) - theta_lower(LEV)`` equals the planted signed Cobb angle. Outside the curves the tilt relaxes by a small
``transition_deg`` (below any clinical threshold) so that every end vertebra is
a genuine local extremum.

Vertebral centres are placed so that each interior vertebra's mean tilt equals
the mean directional angle to its neighbours, i.e. the spine satisfies the
biomechanical constraint exactly before noise.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diagnosis import Curve, CurveReport, Direction, report_from_curves, vwi
from .angle_matrix import build_angle_matrix, pc1_scores
from .errors import InfeasibleSpec
from .landmarks import N_VERTEBRAE, Corners, Point2, Spine, Vertebra, VertebraId

MAX_TILT_DEG = 80.0


@dataclass(frozen=True)
class CurveSpec:
    upper_ev: VertebraId
    lower_ev: VertebraId
    direction: Direction
    cobb_deg: float
    wedge_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "upper_ev", VertebraId(self.upper_ev))
        object.__setattr__(self, "lower_ev", VertebraId(self.lower_ev))
        object.__setattr__(self, "direction", Direction(self.direction))
        if not self.upper_ev < self.lower_ev:
            raise InfeasibleSpec(f"curve {self.upper_ev.label}-{self.lower_ev.label}: upper EV must be cranial")
        if self.lower_ev == VertebraId.L5:
            raise InfeasibleSpec("a curve cannot end at L5")
        if not self.cobb_deg > 0:
            raise InfeasibleSpec(f"cobb_deg must be positive, got {self.cobb_deg}")
        if not 0.0 <= self.wedge_fraction <= 1.0:
            raise InfeasibleSpec(f"wedge_fraction must lie in [0, 1], got {self.wedge_fraction}")

    @property
    def sign(self) -> float:
        return 1.0 if self.direction is Direction.Right else -1.0

    def to_dict(self) -> dict:
        return {
            "upper_ev": self.upper_ev.label,
            "lower_ev": self.lower_ev.label,
            "direction": self.direction.value,
            "cobb_deg": self.cobb_deg,
            "wedge_fraction": self.wedge_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CurveSpec":
        return cls(
            VertebraId.from_label(d["upper_ev"]),
            VertebraId.from_label(d["lower_ev"]),
            Direction(str(d["direction"]).lower()),
            float(d["cobb_deg"]),
            float(d.get("wedge_fraction", 0.5)),
        )


@dataclass(frozen=True)
class SpineSpec:
    curves: tuple[CurveSpec, ...] = ()
    vertebra_height_px: float = 100.0
    disc_height_px: float = 30.0
    vertebra_width_px: float = 160.0
    noise_deg: float = 0.0
    noise_px: float = 0.0
    seed: int = 0
    case_id: str = "synthetic"
    transition_deg: float = 3.0
    margin_px: float = 200.0

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(sorted(self.curves, key=lambda c: c.upper_ev)))
        for name in ("vertebra_height_px", "disc_height_px", "vertebra_width_px"):
            if not getattr(self, name) > 0:
                raise InfeasibleSpec(f"{name} must be positive")
        if self.noise_deg < 0 or self.noise_px < 0 or self.transition_deg < 0:
            raise InfeasibleSpec("noise and transition magnitudes must be >= 0")

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "seed": self.seed,
            "curves": [c.to_dict() for c in self.curves],
            "vertebra_height_px": self.vertebra_height_px,
            "disc_height_px": self.disc_height_px,
            "vertebra_width_px": self.vertebra_width_px,
            "noise_deg": self.noise_deg,
            "noise_px": self.noise_px,
            "transition_deg": self.transition_deg,
            "margin_px": self.margin_px,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpineSpec":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InfeasibleSpec(f"unknown spec keys: {', '.join(sorted(unknown))}")
        curves = tuple(CurveSpec.from_dict(c) for c in d.pop("curves", ()))
        return cls(curves=curves, **d)


def _check_layout(curves: Sequence[CurveSpec]) -> None:
    for a, b in zip(curves, curves[1:]):
        if b.upper_ev < a.lower_ev:
            raise InfeasibleSpec(
                f"curves {a.upper_ev.label}-{a.lower_ev.label} and "
                f"{b.upper_ev.label}-{b.lower_ev.label} overlap"
            )
        if a.direction is b.direction:
            raise InfeasibleSpec("adjacent curves must alternate direction")
        if b.upper_ev - a.lower_ev == 1:
            raise InfeasibleSpec(
                f"a one-vertebra gap between {a.lower_ev.label} and {b.upper_ev.label} "
                "leaves no room for the tilt to turn"
            )


def tilt_profile(spec: SpineSpec) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free (upper, lower) endplate angles for a spec, centred on zero."""
    curves = spec.curves
    _check_layout(curves)
    n = N_VERTEBRAE
    # tilt drops by wedge[k] across vertebra k and by disc[k] from k's lower to k+1's upper
    wedge = np.zeros(n)
    disc = np.zeros(n - 1)
    for c in curves:
        pa, pb = c.upper_ev.pos, c.lower_ev.pos
        if pb - pa == 1:
            disc[pa] += c.sign * c.cobb_deg
            continue
        k = np.arange(pa, pb + 1)
        g = np.sin(np.pi * (k - pa) / (pb - pa))
        scale = c.sign * c.cobb_deg / g.sum()
        f = c.wedge_fraction
        wedge[pa : pb + 1] += f * scale * g
        disc[pa:pb] += (1.0 - f) * scale * (g[:-1] + g[1:]) / 2.0

    t = spec.transition_deg
    if curves and t > 0:
        first, last = curves[0], curves[-1]
        pa = first.upper_ev.pos
        if pa > 0:
            w = 0.5 ** np.arange(pa)[::-1]
            disc[:pa] -= first.sign * t * w / w.sum()
        pb = last.lower_ev.pos
        if pb < n - 1:
            w = 0.5 ** np.arange(n - 1 - pb)
            disc[pb:] -= last.sign * t * w / w.sum()
        for a, b in zip(curves, curves[1:]):
            pb, pc = a.lower_ev.pos, b.upper_ev.pos
            if pc > pb:
                h = t * np.sin(np.pi * np.arange(pc - pb + 1) / (pc - pb))
                disc[pb:pc] -= a.sign * np.diff(h)

    walk = np.empty(2 * n)
    walk[0] = 0.0
    for k in range(n):
        walk[2 * k + 1] = walk[2 * k] - wedge[k]
        if k < n - 1:
            walk[2 * k + 2] = walk[2 * k + 1] - disc[k]
    walk -= (walk.max() + walk.min()) / 2.0
    if np.abs(walk).max() > MAX_TILT_DEG:
        raise InfeasibleSpec(
            f"requested curves need endplate tilts up to {np.abs(walk).max():.1f} deg"
        )
    return walk[0::2].copy(), walk[1::2].copy()


def _step_directions(mean_tilt: np.ndarray) -> np.ndarray:
    """Directional angles of the 17 centre-to-centre steps.

    Solves ``(phi[i-1] + phi[i]) / 2 == mean_tilt[i]`` for every interior
    vertebra; the one free parameter (an alternating mode) is chosen to keep
    the steps closest to the local mean tilt.
    """
    n = len(mean_tilt)
    base = np.empty(n - 1)
    base[0] = 0.0
    for i in range(1, n - 1):
        base[i] = 2.0 * mean_tilt[i] - base[i - 1]
    alt = (-1.0) ** np.arange(n - 1)
    ref = (mean_tilt[:-1] + mean_tilt[1:]) / 2.0
    p = -np.dot(alt, base - ref) / (n - 1)
    return base + p * alt


def build_spine(upper: np.ndarray, lower: np.ndarray, spec: SpineSpec) -> Spine:
    """Noise-free corner-form spine carrying the given endplate angles."""
    mean = (upper + lower) / 2.0
    phi = np.radians(_step_directions(mean))
    if np.abs(phi).max() > np.radians(MAX_TILT_DEG):
        raise InfeasibleSpec("spine centreline would turn past horizontal")
    step = spec.vertebra_height_px + spec.disc_height_px
    centers = np.zeros((N_VERTEBRAE, 2))
    for k, a in enumerate(phi):
        centers[k + 1] = centers[k] + step * np.array([np.sin(a), np.cos(a)])
    half_w = spec.vertebra_width_px / 2.0
    half_h = spec.vertebra_height_px / 2.0
    centers[:, 0] += spec.margin_px + half_w - centers[:, 0].min()
    centers[:, 1] += spec.margin_px + half_h

    verts = []
    for k in range(N_VERTEBRAE):
        m = math.radians(mean[k])
        axis = np.array([math.sin(m), math.cos(m)])
        up_mid = centers[k] - half_h * axis
        lo_mid = centers[k] + half_h * axis
        pts = []
        for mid, ang in ((up_mid, upper[k]), (lo_mid, lower[k])):
            d = half_w * np.array([math.cos(math.radians(ang)), math.sin(math.radians(ang))])
            pts.append(Point2(*(mid - d)))
            pts.append(Point2(*(mid + d)))
        verts.append(Vertebra.from_corners(VertebraId.at(k), Corners(*pts)))
    xs = centers[:, 0]
    size = (
        float(math.ceil(xs.max() + half_w + spec.margin_px)),
        float(math.ceil(centers[-1, 1] + half_h + spec.margin_px)),
    )
    return Spine(spec.case_id, tuple(verts), size)


def perturb(spine: Spine, noise_px: float, noise_deg: float, rng: np.random.Generator) -> Spine:
    """Rotate each endplate about its midpoint by N(0, noise_deg), then jitter every corner by N(0, noise_px)."""
    verts = []
    for v in spine.vertebrae:
        c = v.corners
        pts = []
        for left, right in ((c.ul, c.ur), (c.ll, c.lr)):
            mid = (np.asarray(left) + np.asarray(right)) / 2.0
            half = (np.asarray(right) - np.asarray(left)) / 2.0
            if noise_deg > 0:
                a = math.radians(rng.normal(0.0, noise_deg))
                rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
                half = rot @ half
            lp = mid - half
            rp = mid + half
            if noise_px > 0:
                lp = lp + rng.normal(0.0, noise_px, 2)
                rp = rp + rng.normal(0.0, noise_px, 2)
            pts.extend((Point2(*lp), Point2(*rp)))
        verts.append(Vertebra.from_corners(v.id, Corners(*pts)))
    return Spine(spine.case_id, tuple(verts), spine.image_size)


def generate(spec: SpineSpec) -> tuple[Spine, CurveReport]:
    """A spine realising ``spec`` plus its ground-truth report (recorded before noise)."""
    upper, lower = tilt_profile(spec)
    clean = build_spine(upper, lower, spec)
    truth = [
        Curve(c.upper_ev, c.lower_ev, c.direction, float(c.cobb_deg), vwi((c.upper_ev, c.lower_ev), clean))
        for c in spec.curves
    ]
    am = build_angle_matrix(clean)
    report = report_from_curves(spec.case_id, truth, pc1=pc1_scores(am, clean.upper_angles))
    if spec.noise_px > 0 or spec.noise_deg > 0:
        rng = np.random.default_rng(spec.seed)
        return perturb(clean, spec.noise_px, spec.noise_deg, rng), report
    return clean, report


def random_spec(
    rng: np.random.Generator,
    n_curves: int | None = None,
    cobb_range: tuple[float, float] = (12.0, 60.0),
    min_span: int = 2,
    min_gap: int = 3,
    case_id: str = "synthetic",
    **spine_kw,
) -> SpineSpec:
    """Random 1-3 curve layout.

    Every planted Cobb angle lies in ``cobb_range``, every curve spans at least
    ``min_span`` levels, and consecutive curves either share an end vertebra or
    are separated by at least ``min_gap`` levels. Gaps narrower than the
    extremum window put two same-kind end vertebrae inside each other's
    comparison window, where only one of them can survive detection.
    """
    if n_curves is None:
        n_curves = int(rng.integers(1, 4))
    last = VertebraId.L4.pos
    for _ in range(1000):
        pos = int(rng.integers(0, 5))
        bounds = []
        ok = True
        for _k in range(n_curves):
            span = int(rng.integers(min_span, 9))
            lo, hi = pos, pos + span
            if hi > last:
                ok = False
                break
            bounds.append((lo, hi))
            pos = hi + (0 if rng.random() < 0.7 else int(rng.integers(min_gap, min_gap + 2)))
        if not ok:
            continue
        sign = 1 if rng.random() < 0.5 else -1
        curves = []
        for lo, hi in bounds:
            curves.append(
                CurveSpec(
                    VertebraId.at(lo),
                    VertebraId.at(hi),
                    Direction.Right if sign > 0 else Direction.Left,
                    float(rng.uniform(*cobb_range)),
                    float(rng.uniform(0.0, 1.0)),
                )
            )
            sign = -sign
        spec = SpineSpec(curves=tuple(curves), case_id=case_id, **spine_kw)
        try:
            tilt_profile(spec)
        except InfeasibleSpec:
            continue
        return spec
    raise InfeasibleSpec("could not draw a feasible random layout")


# ---------------------------------------------------------------------------
# longitudinal cohorts

def generate_cohort(n: int, planted_r: float, seed: int = 0) -> list[dict]:
    """Follow-up rows whose baseline VWI correlates with Cobb progression at ``planted_r``.

    Progression is last-minus-first Cobb per patient. Risser grade and baseline
    Cobb are drawn independently of progression.
    """
    if not abs(planted_r) < 1:
        raise ValueError("planted_r must lie in (-1, 1)")
    if n < 10:
        raise ValueError("n must be >= 10")
    rng = np.random.default_rng(seed)
    start = dt.date(2020, 1, 1)
    rows = []
    for p in range(n):
        z_vwi, z_noise = rng.normal(size=2)
        vwi0 = max(0.0, 4.0 + 1.2 * z_vwi)
        progression = 2.0 + 4.0 * (planted_r * z_vwi + math.sqrt(1 - planted_r**2) * z_noise)
        cobb0 = float(rng.uniform(10.0, 45.0))
        risser0 = int(rng.integers(0, 6))
        visits = int(rng.integers(2, 5))
        day = start + dt.timedelta(days=int(rng.integers(0, 1200)))
        offsets = [0.0]
        for _ in range(visits - 1):
            offsets.append(offsets[-1] + max(1.0, rng.normal(5.2, 2.7)))
        total = offsets[-1]
        for k, months in enumerate(offsets):
            frac = months / total
            cobb = cobb0 + progression * frac
            if 0 < k < visits - 1:
                cobb += float(rng.normal(0.0, 0.5))
            rows.append(
                {
                    "case_id": f"P{p:04d}",
                    "date": (day + dt.timedelta(days=round(30.44 * months))).isoformat(),
                    "vwi": vwi0 + (0.05 * progression * frac if k else 0.0),
                    "risser": min(5, risser0 + (k if rng.random() < 0.3 else 0)),
                    "cobb": cobb,
                }
            )
    return rows
