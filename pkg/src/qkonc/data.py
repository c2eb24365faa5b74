"""Dataset ingestion and preprocessing: IDX/CSV loading, class filtering,
PCA, range normalization and synthetic uniform data."""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .concentration import jacobi_eigh
from .sampling import stream

IDX_IMAGES_MAGIC = 0x00000803  # 2051
IDX_LABELS_MAGIC = 0x00000801  # 2049


class DataFormatError(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray | None = None
    provenance: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
            if self.labels.shape[0] != self.features.shape[0]:
                raise ValueError(f"{self.labels.shape[0]} labels for {self.features.shape[0]} rows")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def _derive(self, features, labels, step: dict[str, Any]) -> "Dataset":
        return Dataset(features, labels, self.provenance + [step])

    def manifest(self) -> str:
        return json.dumps({"n_points": len(self), "dim": self.dim, "steps": self.provenance}, sort_keys=True, indent=1)


# -- IDX -----------------------------------------------------------------------


def _read_idx(blob: bytes, magic: int, what: str) -> tuple[tuple[int, ...], bytes]:
    if len(blob) < 4:
        raise DataFormatError(f"{what}: file too short for an IDX header")
    (found,) = struct.unpack(">I", blob[:4])
    if found != magic:
        raise DataFormatError(f"{what}: bad magic number {found} (expected {magic})")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(blob) < header:
        raise DataFormatError(f"{what}: truncated header")
    dims = struct.unpack(f">{ndim}I", blob[4:header])
    size = int(np.prod(dims))
    payload = blob[header:]
    if len(payload) < size:
        raise DataFormatError(f"{what}: truncated payload ({len(payload)} of {size} bytes)")
    return dims, payload[:size]


def parse_idx(images: bytes, labels: bytes | None = None) -> Dataset:
    dims, pix = _read_idx(images, IDX_IMAGES_MAGIC, "images")
    count = dims[0]
    feats = np.frombuffer(pix, dtype=np.uint8).reshape(count, -1).astype(np.float64) / 255.0
    lab = None
    if labels is not None:
        ldims, lpay = _read_idx(labels, IDX_LABELS_MAGIC, "labels")
        if ldims[0] != count:
            raise DataFormatError(f"count mismatch: {count} images but {ldims[0]} labels")
        lab = np.frombuffer(lpay, dtype=np.uint8).astype(np.int64)
    return Dataset(feats, lab)


def load_idx(images_path, labels_path=None) -> Dataset:
    images = Path(images_path).read_bytes()
    labels = None if labels_path is None else Path(labels_path).read_bytes()
    ds = parse_idx(images, labels)
    step = {"step": "load_idx", "images": str(images_path), "labels": None if labels_path is None else str(labels_path)}
    return Dataset(ds.features, ds.labels, [step])


def idx_bytes(kind: str, array: np.ndarray) -> bytes:
    """Encode an unsigned-byte array as IDX (``kind`` is 'images' or 'labels')."""
    arr = np.asarray(array, dtype=np.uint8)
    magic = IDX_IMAGES_MAGIC if kind == "images" else IDX_LABELS_MAGIC
    if arr.ndim != (magic & 0xFF):
        raise ValueError(f"{kind} need {magic & 0xFF} dimensions")
    return struct.pack(f">I{arr.ndim}I", magic, *arr.shape) + arr.tobytes()


# -- CSV -----------------------------------------------------------------------


def load_csv(path, label_column: str = "label") -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: empty CSV")
        header = [h.strip() for h in header]
        rows = [r for r in reader if r]
    li = header.index(label_column) if label_column in header else None
    feats, labels = [], []
    for lineno, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise DataFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(r)}")
        try:
            feats.append([float(v) for k, v in enumerate(r) if k != li])
            if li is not None:
                labels.append(int(float(r[li])))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if not feats:
        raise DataFormatError(f"{path}: no data rows")
    return Dataset(np.array(feats), np.array(labels) if li is not None else None, [{"step": "load_csv", "path": str(path)}])


# -- preprocessing ---------------------------------------------------------------


def filter_binary(dataset: Dataset, class_a: int, class_b: int, n_points: int, seed: int) -> Dataset:
    """Balanced draw: ceil(n/2) rows of ``class_a`` then floor(n/2) of ``class_b``."""
    if dataset.labels is None:
        raise ValueError("dataset has no labels")
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    want = {class_a: (n_points + 1) // 2, class_b: n_points // 2}
    picked = []
    for k, cls in enumerate((class_a, class_b)):
        idx = np.flatnonzero(dataset.labels == cls)
        if idx.size < want[cls]:
            raise ValueError(f"class {cls} has {idx.size} points, need {want[cls]}")
        if want[cls]:
            picked.append(np.sort(stream(seed, k).choice(idx, size=want[cls], replace=False)))
    sel = np.concatenate(picked)
    step = {"step": "filter_binary", "classes": [class_a, class_b], "n_points": n_points, "seed": seed}
    return dataset._derive(dataset.features[sel], dataset.labels[sel], step)


@dataclass
class PCAFit:
    mean: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    eigenvalues: np.ndarray  # all covariance eigenvalues, descending

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) @ self.components.T

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return Z @ self.components + self.mean


def pca_fit(X: np.ndarray, k: int, degenerate_tol: float = 1e-12) -> PCAFit:
    """Principal axes from the sample covariance.

    Uses the d x d covariance when d <= N, otherwise the N x N Gram matrix
    of the centered data (same nonzero spectrum, cheaper to diagonalize).
    Each axis is signed so its largest-magnitude component is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k={k} must lie in [1, min(N, d)] = [1, {min(n, d)}]")
    if n < 2:
        raise ValueError("PCA needs at least 2 points")
    mean = X.mean(axis=0)
    Xc = X - mean
    if d <= n:
        evals, evecs = jacobi_eigh(Xc.T @ Xc / (n - 1))
        axes = evecs[:, :k].T
    else:
        evals, u = jacobi_eigh(Xc @ Xc.T / (n - 1))
        axes = np.empty((k, d))
        for j in range(k):
            if evals[j] > degenerate_tol:
                v = Xc.T @ u[:, j]
                axes[j] = v / np.linalg.norm(v)
    scale = max(1.0, float(evals[0]))
    for j in range(k):
        if evals[j] <= degenerate_tol * scale:
            raise ValueError(
                f"degenerate data: principal direction {j + 1} has zero variance ({evals[j]:.3e})"
            )
    for j in range(k):
        if axes[j, np.argmax(np.abs(axes[j]))] < 0:
            axes[j] = -axes[j]
    return PCAFit(mean, axes, evals)


def pca_reduce(dataset: Dataset, k: int) -> Dataset:
    fit = pca_fit(dataset.features, k)
    step = {"step": "pca_reduce", "k": k, "explained_variance": fit.eigenvalues[:k].tolist()}
    return dataset._derive(fit.transform(dataset.features), dataset.labels, step)


def normalize_range(dataset: Dataset) -> Dataset:
    """Per-dimension affine map of [min, max] onto [-pi, pi]; constant columns map to 0."""
    X = dataset.features
    if X.size == 0:
        raise ValueError("empty dataset")
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    out = np.zeros_like(X)
    live = span > 0
    out[:, live] = -math.pi + 2 * math.pi * (X[:, live] - lo[live]) / span[live]
    np.clip(out, -math.pi, math.pi, out=out)
    return dataset._derive(out, dataset.labels, {"step": "normalize_range", "range": [-math.pi, math.pi]})


def synthetic_uniform(n_points: int, d: int, seed: int) -> Dataset:
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    X = stream(seed, 0).uniform(-math.pi, math.pi, size=(n_points, d))
    return Dataset(X, None, [{"step": "synthetic_uniform", "n_points": n_points, "d": d, "seed": seed}])


def prepare_dataset(
    base: Dataset,
    n_qubits: int,
    classes: tuple[int, int] | None,
    n_points: int,
    seed: int,
    normalize: bool = True,
) -> Dataset:
    """filter -> PCA to ``n_qubits`` dims (fitted on the filtered subset) -> normalize."""
    ds = base
    if classes is not None and base.labels is not None:
        ds = filter_binary(ds, classes[0], classes[1], n_points, seed)
    elif len(ds) > n_points:
        labels = None if ds.labels is None else ds.labels[:n_points]
        ds = ds._derive(ds.features[:n_points], labels, {"step": "head", "n_points": n_points})
    if ds.dim != n_qubits:
        if not normalize:
            raise ValueError(f"raw data has {ds.dim} dimensions; PCA to {n_qubits} needs normalization on")
        ds = pca_reduce(ds, n_qubits)
    return normalize_range(ds) if normalize else ds
