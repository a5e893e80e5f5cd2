"""Image geometry, vectorized faces, and class-structured dictionaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DictionaryError, GeometryError

# Max deviation of a dictionary column norm from 1.
NORM_TOL = 1e-9


@dataclass(frozen=True)
class ImageGeometry:
    """Grid shape of the face images; vectors have length d = rows * cols."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise GeometryError(f"geometry must be positive, got {self.rows}x{self.cols}")

    @property
    def d(self) -> int:
        return self.rows * self.cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)


@dataclass(frozen=True)
class FaceVector:
    """A column-stacked image together with its grid geometry."""

    values: np.ndarray
    geometry: ImageGeometry

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise GeometryError(f"face vector must be 1-d, got shape {v.shape}")
        if v.size != self.geometry.d:
            raise GeometryError(
                f"face vector length {v.size} does not match geometry "
                f"{self.geometry.rows}x{self.geometry.cols} (d={self.geometry.d})"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def normalized(self) -> "FaceVector":
        """Unit l2 copy; zero vectors cannot be normalized."""
        nrm = self.norm
        if nrm == 0.0:
            raise GeometryError("cannot normalize an all-zero face vector")
        return FaceVector(self.values / nrm, self.geometry)


def matricize(v, geometry: ImageGeometry | None = None) -> np.ndarray:
    """Reshape a vectorized image back onto its rows x cols grid.

    Inverse of :func:`vectorize`; both use column stacking, so entry i of the
    vector lands at grid position (i % rows, i // rows).
    """
    if isinstance(v, FaceVector):
        geometry = v.geometry
        v = v.values
    if geometry is None:
        raise GeometryError("matricize needs a FaceVector or an explicit geometry")
    arr = np.asarray(v, dtype=float)
    if arr.size != geometry.d:
        raise GeometryError(f"vector length {arr.size} does not match geometry d={geometry.d}")
    return arr.reshape(geometry.shape, order="F")


def vectorize(image) -> FaceVector:
    """Column-stack a 2-d image grid into a FaceVector."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim != 2:
        raise GeometryError(f"expected a 2-d image grid, got shape {arr.shape}")
    geometry = ImageGeometry(arr.shape[0], arr.shape[1])
    return FaceVector(arr.reshape(-1, order="F"), geometry)


@dataclass(frozen=True)
class Dictionary:
    """Training faces as unit l2 columns, grouped contiguously by class.

    Columns at index >= variation_start form an optional appended block of
    intra-class variation atoms that belongs to no class (label -1).
    """

    columns: np.ndarray
    labels: np.ndarray
    geometry: ImageGeometry
    class_names: tuple
    variation_start: int

    def __post_init__(self):
        cols = np.ascontiguousarray(np.asarray(self.columns, dtype=float))
        if cols.ndim != 2:
            raise DictionaryError(f"columns must be 2-d, got shape {cols.shape}")
        if cols.shape[0] != self.geometry.d:
            raise DictionaryError(
                f"column length {cols.shape[0]} does not match geometry d={self.geometry.d}"
            )
        labels = np.asarray(self.labels, dtype=int)
        if labels.shape != (cols.shape[1],):
            raise DictionaryError("need one label per column")
        if not 0 <= self.variation_start <= cols.shape[1]:
            raise DictionaryError("variation_start out of range")
        norms = np.linalg.norm(cols, axis=0)
        bad = np.abs(norms - 1.0) > NORM_TOL
        if bad.any():
            raise DictionaryError(
                f"{int(bad.sum())} column(s) are not unit norm (max deviation "
                f"{float(np.abs(norms - 1.0).max()):.3e})"
            )
        # Class columns must be contiguous runs 0,1,...,c-1; variation block is -1.
        class_part = labels[: self.variation_start]
        if (labels[self.variation_start :] != -1).any():
            raise DictionaryError("variation columns must carry label -1")
        n_classes = len(self.class_names)
        if class_part.size == 0:
            raise DictionaryError("dictionary needs at least one class column")
        boundaries = np.flatnonzero(np.diff(class_part) != 0)
        runs = class_part[np.concatenate(([0], boundaries + 1))]
        if not np.array_equal(runs, np.arange(n_classes)):
            raise DictionaryError("class labels must form contiguous runs 0..c-1")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "labels", labels)

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def n(self) -> int:
        return self.columns.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def has_variation(self) -> bool:
        return self.variation_start < self.n

    @property
    def variation_columns(self) -> np.ndarray:
        return self.columns[:, self.variation_start :]

    def class_range(self, class_id: int) -> tuple[int, int]:
        """Half-open column range [lo, hi) occupied by a dense class id."""
        idx = np.flatnonzero(self.labels[: self.variation_start] == class_id)
        if idx.size == 0:
            raise DictionaryError(f"unknown class id {class_id}")
        return int(idx[0]), int(idx[-1]) + 1

    def class_columns(self, class_id: int) -> np.ndarray:
        lo, hi = self.class_range(class_id)
        return self.columns[:, lo:hi]


def _normalize_columns(cols: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(cols, axis=0)
    if (norms == 0.0).any():
        raise DictionaryError(f"{int((norms == 0.0).sum())} all-zero column(s) cannot be normalized")
    return cols / norms


def _stack(images, geometry):
    vecs = []
    for img in images:
        if isinstance(img, FaceVector):
            if geometry is None:
                geometry = img.geometry
            elif img.geometry != geometry:
                raise GeometryError("all images must share one geometry")
            vecs.append(img.values)
        else:
            arr = np.asarray(img, dtype=float)
            if arr.ndim == 2:
                arr = arr.reshape(-1, order="F")
            if geometry is None:
                raise GeometryError("raw arrays need an explicit geometry")
            if arr.size != geometry.d:
                raise GeometryError(f"image length {arr.size} does not match geometry d={geometry.d}")
            vecs.append(arr)
    if not vecs:
        raise DictionaryError("no training images given")
    return np.column_stack(vecs), geometry


def build_dictionary(images, labels, geometry: ImageGeometry | None = None) -> Dictionary:
    """Assemble a class dictionary from training images.

    Args:
        images: sequence of FaceVector (or raw arrays if geometry is given).
        labels: one hashable class label per image; sorted unique labels are
            remapped to dense ids 0..c-1 and columns are grouped per class.
        geometry: required when images are raw arrays.

    Returns:
        Dictionary with unit-normalized, class-contiguous columns.
    """
    labels = list(labels)
    cols, geometry = _stack(images, geometry)
    if len(labels) != cols.shape[1]:
        raise DictionaryError(f"{cols.shape[1]} images but {len(labels)} labels")
    names = sorted(set(labels))
    dense = {name: i for i, name in enumerate(names)}
    order = np.argsort([dense[lab] for lab in labels], kind="stable")
    cols = _normalize_columns(cols[:, order])
    dense_labels = np.array([dense[labels[i]] for i in order], dtype=int)
    return Dictionary(
        columns=cols,
        labels=dense_labels,
        geometry=geometry,
        class_names=tuple(names),
        variation_start=cols.shape[1],
    )


def build_extended_dictionary(
    images, labels, variation_images, geometry: ImageGeometry | None = None
) -> Dictionary:
    """Class dictionary with an appended intra-class variation block.

    The variation images (for example difference faces) are normalized and
    appended after the class columns; the coding stage fits them jointly but
    classification charges them to no class.
    """
    base = build_dictionary(images, labels, geometry)
    var_cols, _ = _stack(variation_images, base.geometry)
    var_cols = _normalize_columns(var_cols)
    cols = np.hstack([base.columns, var_cols])
    lab = np.concatenate([base.labels, -np.ones(var_cols.shape[1], dtype=int)])
    return Dictionary(
        columns=cols,
        labels=lab,
        geometry=base.geometry,
        class_names=base.class_names,
        variation_start=base.n,
    )
