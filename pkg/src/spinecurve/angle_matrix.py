"""Pairwise endplate angle matrix and its first principal component scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .landmarks import Spine
from .svd import SvdResult, svd


@dataclass(frozen=True)
class AngleMatrix:
    """``gamma[i, j]`` is the superior endplate angle of vertebra ``i`` minus the
    inferior endplate angle of vertebra ``j``.

    Rows index superior endplates, columns inferior endplates. A cell is
    clinically meaningful only when the row vertebra is not caudal to the
    column vertebra (``i <= j``); ``valid_mask`` marks those cells.
    """

    gamma: np.ndarray
    valid_mask: np.ndarray

    def __getitem__(self, ij) -> float:
        i, j = ij
        return float(self.gamma[int(i), int(j)])

    def masked(self) -> np.ndarray:
        """Copy of gamma with invalid cells set to NaN (for display)."""
        out = self.gamma.copy()
        out[~self.valid_mask] = np.nan
        return out


@dataclass(frozen=True)
class Pc1Scores:
    scores: np.ndarray
    sigma: np.ndarray


def build_angle_matrix(spine: Spine) -> AngleMatrix:
    upper = spine.upper_angles
    lower = spine.lower_angles
    gamma = upper[:, None] - lower[None, :]
    n = len(upper)
    mask = np.triu(np.ones((n, n), dtype=bool))
    return AngleMatrix(gamma, mask)


def _orient(scores: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Fix the PC1 sign so that scores co-vary positively with superior tilt.

    The centred inner product is used first because it is unaffected by a
    common offset on all angles; the raw product and the score sum break any
    remaining tie.
    """
    for ref in (upper - upper.mean(), upper, np.ones_like(upper)):
        d = float(np.dot(scores, ref))
        if d > 0:
            return scores
        if d < 0:
            return -scores
    return scores


def pc1_from_svd(result: SvdResult, upper: np.ndarray) -> Pc1Scores:
    sigma = np.asarray(result.sigma, dtype=float)
    if sigma.size == 0 or sigma[0] == 0:
        return Pc1Scores(np.zeros(result.u.shape[0]), sigma.copy())
    scores = sigma[0] * result.u[:, 0]
    return Pc1Scores(_orient(scores, upper), sigma.copy())


def pc1_scores(am: AngleMatrix, upper: np.ndarray | None = None) -> Pc1Scores:
    """First principal component of the full (unmasked) angle matrix.

    ``upper`` (superior endplate angles) orients the sign; when omitted it is
    recovered from the matrix up to the common offset, which the orientation
    rule ignores anyway.
    """
    if upper is None:
        upper = am.gamma[:, 0]
    return pc1_from_svd(svd(am.gamma), np.asarray(upper, dtype=float))
