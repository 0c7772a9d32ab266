"""Vertebra, endplate and spine types plus the landmark file formats.

Coordinates are image pixels with +x to the right and +y downward. A positive
endplate angle means the right endpoint sits lower than the left one.
Angles are stored in degrees everywhere; trigonometry happens in radians.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    CoincidentCenters,
    CoincidentPoints,
    SchemaError,
    SteepEndplate,
    ValidationError,
)

N_VERTEBRAE = 18


class VertebraId(IntEnum):
    C7 = 1
    T1 = 2
    T2 = 3
    T3 = 4
    T4 = 5
    T5 = 6
    T6 = 7
    T7 = 8
    T8 = 9
    T9 = 10
    T10 = 11
    T11 = 12
    T12 = 13
    L1 = 14
    L2 = 15
    L3 = 16
    L4 = 17
    L5 = 18

    @property
    def label(self) -> str:
        return self.name

    @property
    def pos(self) -> int:
        """Zero-based row/column position in per-spine arrays."""
        return int(self) - 1

    @classmethod
    def from_label(cls, label: str) -> "VertebraId":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise ValidationError(f"unknown vertebra label {label!r}") from None

    @classmethod
    def at(cls, pos: int) -> "VertebraId":
        return cls(pos + 1)


LABELS = tuple(v.label for v in VertebraId)


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Endplate:
    midpoint: Point2
    angle_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.angle_deg) and -90.0 <= self.angle_deg <= 90.0):
            raise SteepEndplate(f"endplate angle {self.angle_deg!r} outside [-90, 90]")
        if not all(math.isfinite(c) for c in self.midpoint):
            raise ValidationError(f"non-finite endplate midpoint {self.midpoint!r}")


@dataclass(frozen=True)
class Corners:
    """Four labelled endplate endpoints in image space."""

    ul: Point2
    ur: Point2
    ll: Point2
    lr: Point2


@dataclass(frozen=True)
class Vertebra:
    id: VertebraId
    upper: Endplate
    lower: Endplate
    corners: Corners | None = None

    def __post_init__(self):
        if self.upper.midpoint.y > self.lower.midpoint.y:
            raise ValidationError(
                f"{self.id.label}: superior endplate midpoint lies below the inferior one"
            )

    @classmethod
    def from_corners(cls, vid: VertebraId, corners: Corners) -> "Vertebra":
        try:
            upper = corners_to_endplate(corners.ul, corners.ur)
            lower = corners_to_endplate(corners.ll, corners.lr)
        except ValidationError as exc:
            raise type(exc)(f"{vid.label}: {exc}") from None
        return cls(vid, upper, lower, corners)

    @property
    def wedge_deg(self) -> float:
        """Signed angle between the two endplates of this vertebra."""
        return self.upper.angle_deg - self.lower.angle_deg


@dataclass(frozen=True)
class Spine:
    case_id: str
    vertebrae: tuple[Vertebra, ...]
    image_size: tuple[float, float] | None = None

    def __post_init__(self):
        verts = tuple(self.vertebrae)
        object.__setattr__(self, "vertebrae", verts)
        if len(verts) != N_VERTEBRAE:
            raise ValidationError(
                f"case {self.case_id!r}: expected {N_VERTEBRAE} vertebrae, got {len(verts)}"
            )
        for pos, v in enumerate(verts):
            if v.id.pos != pos:
                raise ValidationError(
                    f"case {self.case_id!r}: position {pos} holds {v.id.label}, "
                    f"expected {VertebraId.at(pos).label}"
                )
        ys = [vertebra_center(v).y for v in verts]
        for pos in range(1, N_VERTEBRAE):
            if not ys[pos] > ys[pos - 1]:
                raise ValidationError(
                    f"case {self.case_id!r}: center of {LABELS[pos]} is not below "
                    f"{LABELS[pos - 1]} (y {ys[pos]:.3f} <= {ys[pos - 1]:.3f})"
                )

    def __getitem__(self, vid: VertebraId | int) -> Vertebra:
        return self.vertebrae[VertebraId(vid).pos]

    @property
    def upper_angles(self) -> np.ndarray:
        return np.array([v.upper.angle_deg for v in self.vertebrae], dtype=float)

    @property
    def lower_angles(self) -> np.ndarray:
        return np.array([v.lower.angle_deg for v in self.vertebrae], dtype=float)

    @property
    def centers(self) -> np.ndarray:
        return np.array([vertebra_center(v) for v in self.vertebrae], dtype=float)

    def midpoints(self) -> np.ndarray:
        """(36, 2) array of endplate midpoints, upper then lower per vertebra."""
        pts = []
        for v in self.vertebrae:
            pts.append(v.upper.midpoint)
            pts.append(v.lower.midpoint)
        return np.array(pts, dtype=float)

    def endplate_angles(self) -> np.ndarray:
        """(36,) endplate angles in the same order as :meth:`midpoints`."""
        out = np.empty(2 * N_VERTEBRAE)
        out[0::2] = self.upper_angles
        out[1::2] = self.lower_angles
        return out

    def to_array(self) -> np.ndarray:
        """(18, 6) rows of ``upper_x, upper_y, upper_angle, lower_x, lower_y, lower_angle``."""
        return np.array(
            [
                (*v.upper.midpoint, v.upper.angle_deg, *v.lower.midpoint, v.lower.angle_deg)
                for v in self.vertebrae
            ],
            dtype=float,
        )

    @classmethod
    def from_array(cls, arr, case_id: str = "case", image_size=None) -> "Spine":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (N_VERTEBRAE, 6):
            raise ValidationError(f"expected array of shape (18, 6), got {arr.shape}")
        verts = [
            Vertebra(
                VertebraId.at(pos),
                Endplate(Point2(row[0], row[1]), float(row[2])),
                Endplate(Point2(row[3], row[4]), float(row[5])),
            )
            for pos, row in enumerate(arr)
        ]
        return cls(case_id, tuple(verts), image_size)

    @classmethod
    def from_angles(
        cls,
        upper_deg: Sequence[float],
        lower_deg: Sequence[float],
        case_id: str = "case",
        spacing_px: float = 100.0,
    ) -> "Spine":
        """Spine on a vertical line with the given endplate angles.

        Handy for angle-only work (diagnosis, thresholds) where the landmark
        positions are irrelevant.
        """
        upper = np.asarray(upper_deg, dtype=float)
        lower = np.asarray(lower_deg, dtype=float)
        rows = np.zeros((N_VERTEBRAE, 6))
        ys = spacing_px * np.arange(1, N_VERTEBRAE + 1)
        rows[:, 1] = ys - 0.35 * spacing_px
        rows[:, 4] = ys + 0.35 * spacing_px
        rows[:, 2] = upper
        rows[:, 5] = lower
        return cls.from_array(rows, case_id=case_id)

    def with_angles(self, upper_deg, lower_deg) -> "Spine":
        verts = tuple(
            replace(
                v,
                upper=Endplate(v.upper.midpoint, float(u)),
                lower=Endplate(v.lower.midpoint, float(lo)),
                corners=None,
            )
            for v, u, lo in zip(self.vertebrae, upper_deg, lower_deg)
        )
        return replace(self, vertebrae=verts)

    def mirrored(self) -> "Spine":
        """Left-right mirror: x-coordinates and all endplate angles negated.

        The mirror axis is x = 0, so negation is exact in floating point.
        Corners are dropped since their left/right labels would swap.
        """
        verts = tuple(
            Vertebra(
                v.id,
                Endplate(Point2(-v.upper.midpoint.x, v.upper.midpoint.y), -v.upper.angle_deg),
                Endplate(Point2(-v.lower.midpoint.x, v.lower.midpoint.y), -v.lower.angle_deg),
            )
            for v in self.vertebrae
        )
        return Spine(self.case_id, verts, None)


def corners_to_endplate(left: Point2, right: Point2) -> Endplate:
    """Endplate midpoint and tilt from its two labelled endpoints."""
    xl, yl = left
    xr, yr = right
    if xl == xr and yl == yr:
        raise CoincidentPoints(f"endplate endpoints coincide at {tuple(left)!r}")
    if not xl < xr:
        raise SteepEndplate(
            f"left endpoint x={xl} is not left of right endpoint x={xr}"
        )
    angle = math.degrees(math.atan2(yr - yl, xr - xl))
    return Endplate(Point2((xl + xr) / 2.0, (yl + yr) / 2.0), angle)


def directional_angle(center_i: Point2, center_j: Point2) -> float:
    """Angle from the vertical of the vector joining two vertebral centers.

    Positive when ``center_j`` lies to the right of ``center_i``.
    """
    dx = center_j[0] - center_i[0]
    dy = center_j[1] - center_i[1]
    if dx == 0 and dy == 0:
        raise CoincidentCenters(f"vertebral centers coincide at {tuple(center_i)!r}")
    return math.degrees(math.atan2(dx, dy))


def vertebra_center(v: Vertebra) -> Point2:
    (ux, uy), (lx, ly) = v.upper.midpoint, v.lower.midpoint
    return Point2((ux + lx) / 2.0, (uy + ly) / 2.0)


def mean_tilt(v: Vertebra) -> float:
    return (v.upper.angle_deg + v.lower.angle_deg) / 2.0


# ---------------------------------------------------------------------------
# file formats

CSV_COLUMNS = ("case_id", "label", "ulx", "uly", "urx", "ury", "llx", "lly", "lrx", "lry")


def _point(value: Any, where: str) -> Point2:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in value)
    ):
        raise SchemaError(f"{where}: expected [x, y], got {value!r}")
    p = Point2(float(value[0]), float(value[1]))
    if not all(math.isfinite(c) for c in p):
        raise SchemaError(f"{where}: non-finite coordinate {value!r}")
    return p


def _assemble(case_id: str, verts: dict[VertebraId, Vertebra], image_size, where: str) -> Spine:
    missing = [vid.label for vid in VertebraId if vid not in verts]
    if missing:
        raise SchemaError(f"{where}: missing vertebrae {', '.join(missing)}")
    try:
        return Spine(case_id, tuple(verts[vid] for vid in VertebraId), image_size)
    except SchemaError:
        raise
    except ValidationError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _vertebra_from_dict(item: Any, where: str) -> Vertebra:
    if not isinstance(item, dict) or "label" not in item:
        raise SchemaError(f"{where}: expected an object with a 'label'")
    try:
        vid = VertebraId.from_label(str(item["label"]))
    except ValidationError as exc:
        raise SchemaError(f"{where}: {exc}") from None
    where = f"{where} ({vid.label})"
    try:
        if "corners" in item:
            c = item["corners"]
            if not isinstance(c, dict):
                raise SchemaError(f"{where}: 'corners' must be an object")
            for key in ("UL", "UR", "LL", "LR"):
                if key not in c:
                    raise SchemaError(f"{where}: missing corner {key!r}")
            corners = Corners(
                *(_point(c[key], f"{where}.corners.{key}") for key in ("UL", "UR", "LL", "LR"))
            )
            return Vertebra.from_corners(vid, corners)
        if "upper" in item and "lower" in item:
            plates = []
            for side in ("upper", "lower"):
                d = item[side]
                if not isinstance(d, dict) or "mid" not in d or "angle_deg" not in d:
                    raise SchemaError(f"{where}.{side}: expected {{mid, angle_deg}}")
                angle = d["angle_deg"]
                if not isinstance(angle, (int, float)) or isinstance(angle, bool):
                    raise SchemaError(f"{where}.{side}.angle_deg: expected a number")
                plates.append(Endplate(_point(d["mid"], f"{where}.{side}.mid"), float(angle)))
            return Vertebra(vid, plates[0], plates[1])
    except SchemaError:
        raise
    except ValidationError as exc:
        raise SchemaError(f"{where}: {exc}") from None
    raise SchemaError(f"{where}: needs either 'corners' or 'upper'/'lower'")


def spine_from_dict(doc: Any, where: str = "<input>") -> Spine:
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected a JSON object per case")
    for key in ("case_id", "vertebrae"):
        if key not in doc:
            raise SchemaError(f"{where}: missing key {key!r}")
    case_id = str(doc["case_id"])
    where = f"{where} case {case_id!r}"
    image_size = doc.get("image_size")
    if image_size is not None:
        image_size = tuple(_point(image_size, f"{where}.image_size"))
    items = doc["vertebrae"]
    if not isinstance(items, list):
        raise SchemaError(f"{where}: 'vertebrae' must be a list")
    verts: dict[VertebraId, Vertebra] = {}
    for k, item in enumerate(items):
        v = _vertebra_from_dict(item, f"{where} vertebrae[{k}]")
        if v.id in verts:
            raise SchemaError(f"{where} vertebrae[{k}]: duplicate label {v.id.label}")
        verts[v.id] = v
    return _assemble(case_id, verts, image_size, where)


def spine_to_dict(spine: Spine, form: str = "auto") -> dict:
    """Serialise to the landmark schema; ``form`` is ``corners``, ``direct`` or ``auto``."""
    items = []
    for v in spine.vertebrae:
        use_corners = form == "corners" or (form == "auto" and v.corners is not None)
        if use_corners:
            if v.corners is None:
                raise ValidationError(f"{v.id.label}: no corners to serialise")
            c = v.corners
            items.append(
                {
                    "label": v.id.label,
                    "corners": {
                        "UL": list(c.ul),
                        "UR": list(c.ur),
                        "LL": list(c.ll),
                        "LR": list(c.lr),
                    },
                }
            )
        else:
            items.append(
                {
                    "label": v.id.label,
                    "upper": {"mid": list(v.upper.midpoint), "angle_deg": v.upper.angle_deg},
                    "lower": {"mid": list(v.lower.midpoint), "angle_deg": v.lower.angle_deg},
                }
            )
    doc: dict[str, Any] = {"case_id": spine.case_id}
    if spine.image_size is not None:
        doc["image_size"] = list(spine.image_size)
    doc["vertebrae"] = items
    return doc


def parse_json(text: str, where: str = "<json>") -> list[Spine]:
    """Parse one case object or a list of case objects."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{where}: line {exc.lineno}: {exc.msg}") from None
    if isinstance(doc, list):
        return [spine_from_dict(d, f"{where}[{k}]") for k, d in enumerate(doc)]
    return [spine_from_dict(doc, where)]


def parse_csv(text: str, where: str = "<csv>") -> list[Spine]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise SchemaError(f"{where}: empty file")
    missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise SchemaError(f"{where}: missing columns {', '.join(missing)}")
    cases: dict[str, dict[VertebraId, Vertebra]] = {}
    for row in reader:
        line = reader.line_num
        loc = f"{where}: line {line}"
        try:
            vid = VertebraId.from_label(row["label"] or "")
            vals = [float(row[c]) for c in CSV_COLUMNS[2:]]
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"{loc}: {exc}") from None
        if not all(math.isfinite(x) for x in vals):
            raise SchemaError(f"{loc}: non-finite coordinate")
        pts = [Point2(vals[k], vals[k + 1]) for k in range(0, 8, 2)]
        try:
            v = Vertebra.from_corners(vid, Corners(*pts))
        except ValidationError as exc:
            raise SchemaError(f"{loc}: {exc}") from None
        case = cases.setdefault(row["case_id"], {})
        if vid in case:
            raise SchemaError(f"{loc}: duplicate label {vid.label} in case {row['case_id']!r}")
        case[vid] = v
    return [_assemble(cid, verts, None, f"{where} case {cid!r}") for cid, verts in cases.items()]


def spines_to_csv(spines: Iterable[Spine]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in spines:
        for v in s.vertebrae:
            if v.corners is None:
                raise ValidationError(f"{s.case_id}/{v.id.label}: CSV requires corners")
            c = v.corners
            w.writerow([s.case_id, v.id.label, *(repr(float(t)) for t in (*c.ul, *c.ur, *c.ll, *c.lr))])
    return buf.getvalue()


def landmark_files(path: str | Path) -> list[Path]:
    """``path`` itself, or the landmark files of a directory (truth sidecars skipped)."""
    path = Path(path)
    if not path.is_dir():
        return [path]
    return [
        p
        for p in sorted(path.iterdir())
        if p.suffix.lower() in (".json", ".csv") and not p.name.endswith(".truth.json")
    ]


def load_spines(path: str | Path) -> list[Spine]:
    """Load every case from a .json/.csv file, or from all such files in a directory."""
    out: list[Spine] = []
    for p in landmark_files(path):
        text = p.read_text()
        out.extend(parse_csv(text, str(p)) if p.suffix.lower() == ".csv" else parse_json(text, str(p)))
    return out
