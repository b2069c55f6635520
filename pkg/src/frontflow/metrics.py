"""Solution-quality metrics.

Nondominated filtering (minimization convention), exact hypervolume for
two and three objectives, a Monte-Carlo hypervolume estimator for higher
dimensions, and generational-distance metrics against a reference front.
"""

from __future__ import annotations

from bisect import bisect_right, insort
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.spatial import cKDTree

from .errors import UnsupportedDimensionError

if TYPE_CHECKING:  # pragma: no cover
    from .problems import ReferenceFront


@dataclass(frozen=True)
class MetricsConfig:
    """Measurement settings for a run.

    ``hv_reference`` is the hypervolume reference point (stored as a tuple
    so configs compare by value); points beyond it contribute zero volume.
    ``front_n`` is the reference-front sample size used for in-run
    distance metrics.
    """

    hv_reference: tuple
    mc_samples: int = 100_000
    distance_norm: str = "euclidean"
    tolerance: float = 0.05
    front_n: int = 1000

    def __post_init__(self):
        if self.distance_norm != "euclidean":
            raise ValueError("only euclidean distances are supported")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        object.__setattr__(self, "hv_reference", tuple(float(v) for v in self.hv_reference))


# ---------------------------------------------------------------------------
# Nondominated filtering
# ---------------------------------------------------------------------------

def _filter_unique_2d(P: np.ndarray) -> np.ndarray:
    order = np.lexsort((P[:, 1], P[:, 0]))
    f2 = P[order, 1]
    best = np.minimum.accumulate(f2)
    keep_sorted = np.empty(len(P), dtype=bool)
    keep_sorted[0] = True
    keep_sorted[1:] = f2[1:] < best[:-1]
    keep = np.zeros(len(P), dtype=bool)
    keep[order] = keep_sorted
    return keep


def _filter_unique_3d(P: np.ndarray) -> np.ndarray:
    order = np.lexsort((P[:, 2], P[:, 1], P[:, 0]))
    keep = np.zeros(len(P), dtype=bool)
    # Staircase over (f2, f3) of kept points: f2 ascending, f3 strictly
    # descending.  A candidate is dominated iff some already-kept point has
    # f2 <= p2 and f3 <= p3 (earlier points have f1 <= p1 by the sort).
    stair_f2: list[float] = []
    stair_f3: list[float] = []
    for idx in order:
        p2 = P[idx, 1]
        p3 = P[idx, 2]
        j = bisect_right(stair_f2, p2) - 1
        if j >= 0 and stair_f3[j] <= p3:
            continue
        keep[idx] = True
        # Insert the new corner and drop corners it renders redundant.
        j += 1
        end = j
        while end < len(stair_f2) and stair_f3[end] >= p3:
            end += 1
        stair_f2[j:end] = [p2]
        stair_f3[j:end] = [p3]
    return keep


def _filter_unique_general(P: np.ndarray) -> np.ndarray:
    n = len(P)
    keep = np.ones(n, dtype=bool)
    block = max(1, 10_000_000 // max(n, 1))
    for start in range(0, n, block):
        chunk = P[start : start + block]
        le_all = (P[:, None, :] <= chunk[None, :, :]).all(axis=2)
        lt_any = (P[:, None, :] < chunk[None, :, :]).any(axis=2)
        keep[start : start + block] = ~(le_all & lt_any).any(axis=0)
    return keep


def nondominated_filter(points: np.ndarray) -> np.ndarray:
    """Indices of points not dominated by any other point (ascending order).

    Minimization convention: q dominates p when q <= p in every objective
    and q < p in at least one.  Duplicates of a nondominated point are all
    kept.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2:
        raise ValueError("points must be (n, m)")
    n, m = P.shape
    if n == 0:
        return np.empty(0, dtype=int)
    uniq, inverse = np.unique(P, axis=0, return_inverse=True)
    if m == 1:
        keep_u = uniq[:, 0] == uniq[:, 0].min()
    elif m == 2:
        keep_u = _filter_unique_2d(uniq)
    elif m == 3:
        keep_u = _filter_unique_3d(uniq)
    else:
        keep_u = _filter_unique_general(uniq)
    return np.flatnonzero(keep_u[inverse])


# ---------------------------------------------------------------------------
# Hypervolume
# ---------------------------------------------------------------------------

def _hv2d(P: np.ndarray, ref: np.ndarray) -> float:
    """Sort-and-sweep over a deduplicated nondominated 2-D set."""
    if len(P) == 0:
        return 0.0
    order = np.argsort(P[:, 0], kind="stable")
    f1 = P[order, 0]
    f2 = P[order, 1]
    right = np.append(f1[1:], ref[0])
    return float(np.sum((right - f1) * (ref[1] - f2)))


class _Staircase2D:
    """Incremental union-of-boxes area for the 3-D sweep."""

    def __init__(self, ref):
        self.r1 = float(ref[0])
        self.r2 = float(ref[1])
        self.f1: list[float] = []
        self.f2: list[float] = []
        self.area = 0.0

    def insert(self, p1: float, p2: float) -> None:
        j = bisect_right(self.f1, p1)
        cover = self.f2[j - 1] if j > 0 else self.r2
        if cover <= p2:
            return  # already covered in 2-D
        x0, h0 = p1, cover
        end = j
        while end < len(self.f1) and self.f2[end] >= p2:
            x1 = self.f1[end]
            self.area += (x1 - x0) * (h0 - p2)
            x0, h0 = x1, self.f2[end]
            end += 1
        xr = self.f1[end] if end < len(self.f1) else self.r1
        self.area += (xr - x0) * (h0 - p2)
        self.f1[j:end] = [p1]
        self.f2[j:end] = [p2]


def _hv3d(P: np.ndarray, ref: np.ndarray) -> float:
    """Sweep ascending f3, integrating the 2-D staircase area between levels."""
    if len(P) == 0:
        return 0.0
    order = np.lexsort((P[:, 1], P[:, 0], P[:, 2]))
    stair = _Staircase2D(ref[:2])
    hv = 0.0
    z_prev = None
    for idx in order:
        z = P[idx, 2]
        if z_prev is not None:
            hv += stair.area * (z - z_prev)
        stair.insert(float(P[idx, 0]), float(P[idx, 1]))
        z_prev = z
    hv += stair.area * (ref[2] - z_prev)
    return float(hv)


def hypervolume_exact(points: np.ndarray, ref: np.ndarray) -> float:
    """Exact hypervolume dominated by ``points`` up to the reference point.

    Supports two and three objectives; raises
    :class:`UnsupportedDimensionError` above that (use
    :func:`hypervolume_mc`).  Points that do not weakly dominate ``ref``
    contribute nothing.
    """
    P = np.asarray(points, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if P.ndim != 2 or P.shape[1] != len(ref):
        raise ValueError("points must be (n, m) matching the reference point")
    m = P.shape[1]
    if m not in (2, 3):
        raise UnsupportedDimensionError(
            f"exact hypervolume supports m in (2, 3); got m = {m}"
        )
    P = P[(P <= ref).all(axis=1)]
    if len(P) == 0:
        return 0.0
    P = np.unique(P, axis=0)
    P = P[nondominated_filter(P)]
    return _hv2d(P, ref) if m == 2 else _hv3d(P, ref)


def hypervolume_mc(
    points: np.ndarray,
    ref: np.ndarray,
    cfg: MetricsConfig,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte-Carlo hypervolume estimate with its binomial standard error.

    Samples uniformly in the box spanned by the componentwise minimum of
    the contributing points and ``ref``.
    """
    P = np.asarray(points, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if len(P):
        P = P[(P <= ref).all(axis=1)]
    if len(P) == 0:
        return 0.0, 0.0
    lo = P.min(axis=0)
    vol = float(np.prod(ref - lo))
    if vol <= 0.0:
        return 0.0, 0.0
    n = int(cfg.mc_samples)
    hits = 0
    block = max(1, 20_000_000 // max(len(P), 1))
    for start in range(0, n, block):
        size = min(block, n - start)
        samples = lo + rng.random((size, len(ref))) * (ref - lo)
        covered = np.zeros(size, dtype=bool)
        for p in P:
            covered |= (p <= samples).all(axis=1)
        hits += int(covered.sum())
    frac = hits / n
    est = vol * frac
    stderr = vol * float(np.sqrt(frac * (1.0 - frac) / n))
    return est, stderr


# ---------------------------------------------------------------------------
# Distances to a reference front
# ---------------------------------------------------------------------------

def front_distance(
    points: np.ndarray,
    front: "ReferenceFront",
    tolerance: float = 0.05,
) -> tuple[float, float, np.ndarray]:
    """Generational distances and per-segment occupancy.

    Returns ``(gd, igd, segment_counts)`` where ``gd`` is the mean distance
    from solution points to the front, ``igd`` the mean distance from front
    samples to the solutions, and ``segment_counts[s]`` the number of
    solution points within ``tolerance`` of front segment ``s``.
    """
    P = np.asarray(points, dtype=float)
    F = np.asarray(front.points, dtype=float)
    if len(P) == 0 or len(F) == 0:
        raise ValueError("front_distance needs nonempty inputs")
    d_pf, _ = cKDTree(F).query(P)
    d_fp, _ = cKDTree(P).query(F)
    labels = front.segment_labels
    n_seg = int(labels.max()) + 1
    counts = np.zeros(n_seg, dtype=int)
    for s in range(n_seg):
        seg_d, _ = cKDTree(F[labels == s]).query(P)
        counts[s] = int((seg_d <= tolerance).sum())
    return float(d_pf.mean()), float(d_fp.mean()), counts
