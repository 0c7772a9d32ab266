"""scikit-learn style front end for the diagnosis pipeline.

``X`` is a sequence of :class:`~spinecurve.landmarks.Spine` objects or an
array of shape ``(n_cases, 18, 6)`` whose rows are
``upper_x, upper_y, upper_angle, lower_x, lower_y, lower_angle``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .angle_matrix import build_angle_matrix, pc1_scores
from .config import Config
from .diagnosis import CurveReport, Severity, diagnose
from .errors import ValidationError
from .landmarks import N_VERTEBRAE, Spine


def check_spines(X) -> list[Spine]:
    """Coerce ``X`` to a list of validated spines."""
    if isinstance(X, Spine):
        return [X]
    if isinstance(X, np.ndarray) or (
        isinstance(X, Sequence) and X and not isinstance(X[0], Spine)
    ):
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or arr.shape[1:] != (N_VERTEBRAE, 6):
            raise ValidationError(f"expected shape (n_cases, 18, 6), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("input contains NaN or infinite values")
        return [Spine.from_array(a, case_id=f"case{k:04d}") for k, a in enumerate(arr)]
    spines = list(X)
    for k, s in enumerate(spines):
        if not isinstance(s, Spine):
            raise ValidationError(f"X[{k}] is {type(s).__name__}, expected Spine")
    return spines


def check_severity_labels(y) -> list[Severity]:
    out = []
    for v in y:
        if isinstance(v, Severity):
            out.append(v)
            continue
        s = str(v)
        by_code = {sev.code: sev for sev in Severity}
        if s in by_code:
            out.append(by_code[s])
        else:
            out.append(Severity(s))
    return out


class CobbAngleEstimator(TransformerMixin, BaseEstimator):
    """Cobb angle, curve and severity estimation from endplate landmarks.

    There is nothing to learn; ``fit`` only validates the input and freezes the
    configuration so the object composes with pipelines and grid searches over
    the clinical thresholds.

    ``transform`` returns the PC1 score profile (n_cases, 18), ``predict`` the
    severity class labels, and ``diagnose`` the full curve reports.
    """

    def __init__(
        self,
        gamma_threshold_deg: float = 10.0,
        severity_bounds: tuple[float, float] = (20.0, 40.0),
        extremum_window: int = 2,
        lumbar_relaxed_window: int = 1,
        eps_deg: float = 5.0,
    ):
        self.gamma_threshold_deg = gamma_threshold_deg
        self.severity_bounds = severity_bounds
        self.extremum_window = extremum_window
        self.lumbar_relaxed_window = lumbar_relaxed_window
        self.eps_deg = eps_deg

    def fit(self, X, y=None):
        spines = check_spines(X)
        self.config_ = Config(
            gamma_threshold_deg=self.gamma_threshold_deg,
            severity_bounds=tuple(self.severity_bounds),
            extremum_window=self.extremum_window,
            lumbar_relaxed_window=self.lumbar_relaxed_window,
            eps_deg=self.eps_deg,
        )
        self.n_features_in_ = N_VERTEBRAE * 6
        self.n_cases_seen_ = len(spines)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "config_")
        return np.array(
            [pc1_scores(build_angle_matrix(s), s.upper_angles).scores for s in check_spines(X)]
        )

    def diagnose(self, X) -> list[CurveReport]:
        check_is_fitted(self, "config_")
        return [diagnose(s, self.config_) for s in check_spines(X)]

    def predict(self, X) -> np.ndarray:
        return np.array([r.severity.value for r in self.diagnose(X)])

    def predict_max_cobb(self, X) -> np.ndarray:
        return np.array([r.max_cobb_deg for r in self.diagnose(X)])

    def score(self, X, y) -> float:
        """Fraction of cases whose predicted severity matches ``y``."""
        pred = [Severity(v) for v in self.predict(X)]
        truth = check_severity_labels(y)
        if len(truth) != len(pred):
            raise ValidationError(f"{len(pred)} cases but {len(truth)} labels")
        return float(np.mean([a is b for a, b in zip(pred, truth)]))
