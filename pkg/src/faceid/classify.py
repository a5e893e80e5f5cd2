"""Weighted per-class residual classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DictionaryError
from .model import Dictionary, FaceVector
from .solver import SolveResult


@dataclass(frozen=True)
class ClassificationResult:
    """Predicted dense class id plus the per-class residual landscape."""

    predicted: int
    residuals: np.ndarray
    margin: float


def class_residuals(y, T: Dictionary, result: SolveResult) -> np.ndarray:
    """Weighted reconstruction residual of y under each class's columns.

    Residual i is ||sqrt(W) (y - T_i a_i)|| where W holds the final solver
    weights and (T_i, a_i) are the columns and coefficients of class i alone.
    When the dictionary carries a variation block, its response is subtracted
    from y first so every class is judged on the identity part only.
    """
    a = np.asarray(result.a, dtype=float).ravel()
    if a.size != T.n:
        raise DictionaryError(f"coefficient length {a.size} does not match dictionary n={T.n}")
    w = result.w.values
    if w.size != T.d:
        raise DictionaryError(f"weight length {w.size} does not match dictionary d={T.d}")
    y = np.asarray(getattr(y, "values", y), dtype=float).ravel()
    sw = np.sqrt(w)
    base = y
    if T.has_variation:
        base = y - T.variation_columns @ a[T.variation_start :]
    out = np.empty(T.n_classes)
    for i in range(T.n_classes):
        lo, hi = T.class_range(i)
        out[i] = np.linalg.norm(sw * (base - T.columns[:, lo:hi] @ a[lo:hi]))
    return out


def identify(y, T: Dictionary, result: SolveResult) -> ClassificationResult:
    """Assign y to the class with the smallest weighted residual.

    Ties go to the lowest class id. The margin is the gap between the
    runner-up and the winning residual (infinite with a single class).
    """
    residuals = class_residuals(y, T, result)
    predicted = int(np.argmin(residuals))
    if residuals.size > 1:
        margin = float(np.partition(residuals, 1)[1] - residuals[predicted])
    else:
        margin = float("inf")
    return ClassificationResult(predicted=predicted, residuals=residuals, margin=margin)
