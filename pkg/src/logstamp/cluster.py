"""DBSCAN over unit-norm sentence embeddings with cosine distance."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, ParameterError

NOISE = -1


@dataclass(frozen=True)
class DbscanConfig:
    # radius on centred embeddings; 0.05 was too tight once the shared mean is removed
    eps: float = 0.1
    min_pts: int = 2
    # subtract the corpus mean before clustering (see center_rows)
    center: bool = True

    def __post_init__(self):
        if not 0.0 < self.eps <= 2.0:
            raise ParameterError(f"dbscan.eps must be in (0, 2], got {self.eps}")
        if self.min_pts < 1:
            raise ParameterError(f"dbscan.min_pts must be >= 1, got {self.min_pts}")


@dataclass(frozen=True)
class ClusterAssignment:
    labels: dict[int, int]  # record id -> cluster id or NOISE
    num_clusters: int

    def members(self) -> dict[int, list[int]]:
        groups: dict[int, list[int]] = {}
        for rid, c in self.labels.items():
            if c != NOISE:
                groups.setdefault(c, []).append(rid)
        return groups

    @property
    def noise_count(self) -> int:
        return sum(1 for c in self.labels.values() if c == NOISE)


def cosine_distances(points: np.ndarray) -> np.ndarray:
    dist = 1.0 - points @ points.T
    np.fill_diagonal(dist, 0.0)
    return dist


def center_rows(points: np.ndarray) -> np.ndarray:
    """Remove the shared mean direction and re-normalise each row.

    Mean-pooled sentence vectors share a large common component, which
    squeezes all cosine distances towards zero; centring restores the spread.
    Rows equal to the mean are left as the (unit) mean direction.
    """
    X = np.asarray(points, dtype=float)
    if len(X) < 2:
        return X
    mean = X.mean(axis=0)
    C = X - mean
    norms = np.linalg.norm(C, axis=1, keepdims=True)
    fallback = mean / (np.linalg.norm(mean) or 1.0)
    out = np.where(norms > 1e-12, C / np.where(norms > 1e-12, norms, 1.0), fallback)
    return out


def _as_matrix(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        mat = points
    else:
        rows = [np.asarray(p, dtype=float) for p in points]
        dims = {r.shape for r in rows}
        if len(dims) > 1:
            raise InputError(f"points have mismatched dimensions: {sorted(dims)}")
        mat = np.array(rows)
    if mat.ndim != 2:
        raise InputError("points must form a 2-D array")
    return mat.astype(float, copy=False)


def dbscan(points, config: DbscanConfig = DbscanConfig(), ids: Sequence[int] | None = None,
           check_norm: bool = True) -> ClusterAssignment:
    """Cluster ``points``; ``ids`` name them in the result (default 0..n-1).

    Points are scanned in ascending position. A border point reachable from
    several clusters joins whichever reaches it first.
    """
    if ids is None:
        ids = range(len(points))
    ids = list(ids)
    if len(points) == 0:
        return ClusterAssignment({}, 0)
    X = _as_matrix(points)
    if len(ids) != len(X):
        raise InputError("ids and points differ in length")
    if check_norm:
        norms = np.linalg.norm(X, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise InputError("dbscan expects unit-norm points")

    neighbours = [np.flatnonzero(row <= config.eps) for row in cosine_distances(X)]
    core = np.array([len(nb) >= config.min_pts for nb in neighbours])
    labels = np.full(len(X), NOISE)
    cluster = 0
    for start in range(len(X)):
        if labels[start] != NOISE or not core[start]:
            continue
        labels[start] = cluster
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for q in neighbours[p]:
                if labels[q] == NOISE:
                    labels[q] = cluster
                    if core[q]:
                        queue.append(q)
        cluster += 1
    return ClusterAssignment({rid: int(c) for rid, c in zip(ids, labels)}, cluster)


def dump_assignment(path: str | Path, points, assignment: ClusterAssignment,
                    ids: Sequence[int] | None = None) -> None:
    """CSV of record id, cluster id and nearest-neighbour cosine distance."""
    X = _as_matrix(points)
    ids = list(range(len(X))) if ids is None else list(ids)
    dist = cosine_distances(X) if len(X) else np.zeros((0, 0))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["record_id", "cluster_id", "nn_distance"])
        for i, rid in enumerate(ids):
            others = np.delete(dist[i], i)
            nn_d = float(others.min()) if len(others) else float("nan")
            w.writerow([rid, assignment.labels[rid], f"{nn_d:.6f}"])
