"""Classification loss and top-k accuracy."""

from typing import Dict, Sequence, Union

import numpy as np

from ..core import Tensor, log_softmax_nll


class MetricError(ValueError):
    """Exception raised for invalid metric inputs."""

    pass


LogitsBatch = Union[np.ndarray, Sequence[Tensor], Sequence[np.ndarray]]


def cross_entropy(logits: Tensor, label: int) -> Tensor:
    """``-log softmax(logits)[label]`` with log-sum-exp stabilization."""
    if logits.ndim != 1:
        raise MetricError(f"cross_entropy expects 1-D logits, got shape {logits.shape}")
    if not 0 <= label < logits.shape[0]:
        raise MetricError(f"label {label} outside 0..{logits.shape[0] - 1}")
    return log_softmax_nll(logits, int(label))


def _as_matrix(logits_batch: LogitsBatch) -> np.ndarray:
    if isinstance(logits_batch, np.ndarray):
        matrix = logits_batch
    else:
        rows = [row.data if isinstance(row, Tensor) else np.asarray(row) for row in logits_batch]
        if not rows:
            raise MetricError("cannot score an empty batch")
        matrix = np.stack(rows)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise MetricError(f"logits batch must be a non-empty [B, K] array, got {matrix.shape}")
    return matrix


def topk_hits(logits_batch: LogitsBatch, labels: Sequence[int], k: int) -> np.ndarray:
    """Boolean per sample: label among the ``k`` best classes, lower index first on ties."""
    matrix = _as_matrix(logits_batch)
    labels_arr = np.asarray(labels, dtype=np.int64)
    batch, classes = matrix.shape
    if labels_arr.shape != (batch,):
        raise MetricError(f"{labels_arr.size} labels for a batch of {batch}")
    if not 1 <= k <= classes:
        raise MetricError(f"k must be in 1..{classes}, got {k}")
    if np.any(labels_arr < 0) or np.any(labels_arr >= classes):
        raise MetricError(f"labels must lie in 0..{classes - 1}")
    ranking = np.argsort(-matrix, axis=1, kind="stable")[:, :k]
    return np.any(ranking == labels_arr[:, None], axis=1)


def topk_accuracy(logits_batch: LogitsBatch, labels: Sequence[int], k: int) -> float:
    """Fraction of samples whose label is in the top ``k``."""
    return float(np.mean(topk_hits(logits_batch, labels, k)))


def per_class_accuracy(
    logits_batch: LogitsBatch, labels: Sequence[int], class_names: Sequence[str]
) -> Dict[str, float]:
    """Top-1 accuracy per class; classes absent from ``labels`` are omitted."""
    hits = topk_hits(logits_batch, labels, 1)
    labels_arr = np.asarray(labels)
    return {
        name: float(np.mean(hits[labels_arr == index]))
        for index, name in enumerate(class_names)
        if np.any(labels_arr == index)
    }
