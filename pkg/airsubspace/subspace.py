"""
Affine subspace models of the acoustic impulse response manifold.

**What:** Training corpora, the affine subspace record with its orthogonal
projection, and the three ways of fitting one: a global PCA model, a k-means
mixture of local PCA models and the adaptive nearest-neighbour model.

**How:** Vectors are stacked channel-major time-domain filters of length
Q = L*B. Projections are matrix-free (``V @ solve(VᵀV, Vᵀ(w - w̄))``) with the
Gram matrix Cholesky-factored once per subspace. Neighbour searches are
exhaustive scans with stable sorting, so ties resolve to the lowest index.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve, qr, svd
from scipy.spatial.distance import cdist

from .constants import GRAM_COND_LIMIT, KMEANS_MAX_ITER, QR_RANK_TOL, UNCERTAINTY_FLOOR
from .dsp import embed_filters
from .models import FrameConfig, Metric

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[np.ndarray]]


# Corpus

@dataclass(frozen=True)
class Provenance:
    """Where a training set came from."""
    seed: int = 0
    geometry_hash: str = ""
    source: str = "simulated"


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """K stacked AIR vectors of length Q = L*B sharing one frame configuration."""
    vectors: np.ndarray
    frame: FrameConfig
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] < 1:
            raise ValueError(f"vectors must be a non-empty (K, Q) array, got shape {vectors.shape}")
        if vectors.shape[1] != self.frame.vector_length:
            raise ValueError(f"vectors must have length Q={self.frame.vector_length}, got {vectors.shape[1]}")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("training vectors must be finite")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @cached_property
    def atfs(self) -> np.ndarray:
        """Per-channel transfer functions of every member, shape (K, B, M); computed once."""
        atfs = embed_filters(self.vectors, self.frame)
        atfs.setflags(write=False)
        return atfs

    def subset(self, indices) -> "TrainingSet":
        return TrainingSet(self.vectors[np.asarray(indices)], self.frame, self.provenance)


def _as_matrix(members: ArrayLike) -> np.ndarray:
    m = np.asarray(members, dtype=float)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("members must be a non-empty list of equal-length vectors")
    return m


# Affine subspaces

@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """
    Offset w̄ plus the span of the basis columns V (Q x D).

    D = 0 is allowed and denotes the offset-only model.
    """
    offset: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        offset = np.asarray(self.offset, dtype=float)
        basis = np.asarray(self.basis, dtype=float)
        if offset.ndim != 1:
            raise ValueError("offset must be a vector")
        if basis.ndim != 2 or basis.shape[0] != offset.shape[0]:
            raise ValueError(f"basis must be ({offset.shape[0]}, D), got {basis.shape}")
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "basis", basis)
        factor = None
        if basis.shape[1] > 0:
            gram = basis.T @ basis
            cond = np.linalg.cond(gram)
            if not np.isfinite(cond) or cond > GRAM_COND_LIMIT:
                raise ValueError(f"basis columns are not linearly independent (cond(VᵀV)={cond:.3g})")
            factor = cho_factor(gram)
        object.__setattr__(self, "_gram_factor", factor)

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    def project(self, w) -> np.ndarray:
        """Orthogonal projection of ``w`` (shape (Q,) or (n, Q)) onto the subspace."""
        w = np.asarray(w, dtype=float)
        if w.shape[-1] != self.offset.shape[0]:
            raise ValueError(f"vector length {w.shape[-1]} does not match Q={self.offset.shape[0]}")
        if self._gram_factor is None:
            return np.broadcast_to(self.offset, w.shape).copy()
        diff = (w - self.offset).T
        coeffs = cho_solve(self._gram_factor, self.basis.T @ diff)
        return self.offset + (self.basis @ coeffs).T


def project(subspace: AffineSubspace, w) -> np.ndarray:
    return subspace.project(w)


def fit_offset(members: ArrayLike) -> np.ndarray:
    """Arithmetic mean of the members."""
    if len(members) == 0:
        raise ValueError("cannot fit an offset to an empty member list")
    return _as_matrix(members).mean(axis=0)


def _centered_svd(members: np.ndarray, offset: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    centered = members - np.asarray(offset, dtype=float)
    _, s, vt = svd(centered, full_matrices=False)
    eigenvalues = s**2 / (members.shape[0] - 1)
    return eigenvalues, vt


def fit_basis_pca(members: ArrayLike, offset, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Leading ``d`` principal directions of the members around ``offset``.

    The covariance is normalized by 1/(n - 1). Eigenvalues are returned in
    non-increasing order alongside the orthonormal basis columns.

    Returns:
        (basis of shape (Q, d), eigenvalues of shape (d,))
    """
    m = _as_matrix(members)
    n, q = m.shape
    if n < 2:
        raise ValueError("PCA needs at least two members")
    if d < 0 or d > min(q, n - 1):
        raise ValueError(f"d={d} exceeds min(Q, members-1)={min(q, n - 1)}")
    eigenvalues, vt = _centered_svd(m, offset)
    return vt[:d].T.copy(), eigenvalues[:d].copy()


def covariance_spectrum(members: ArrayLike, offset) -> np.ndarray:
    """All non-zero-rank eigenvalues of the sample covariance, non-increasing."""
    m = _as_matrix(members)
    if m.shape[0] < 2:
        raise ValueError("covariance needs at least two members")
    eigenvalues, _ = _centered_svd(m, offset)
    return eigenvalues


def fit_global(training: TrainingSet, d: int) -> AffineSubspace:
    offset = fit_offset(training.vectors)
    basis, _ = fit_basis_pca(training.vectors, offset, d)
    return AffineSubspace(offset, basis)


# Clustering

@dataclass(frozen=True, eq=False)
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    distortions: List[float]

    @property
    def iterations(self) -> int:
        return len(self.distortions)


def _kmeans_pp(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = data.shape[0]
    chosen = [int(rng.integers(n))]
    closest = cdist(data, data[chosen], "sqeuclidean")[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        closest = np.minimum(closest, cdist(data, data[[idx]], "sqeuclidean")[:, 0])
    return data[chosen].copy()


def kmeans(training: Union[TrainingSet, np.ndarray], i: int, seed: int, max_iter: int = KMEANS_MAX_ITER) -> KMeansResult:
    """
    Hard k-means with k-means++ seeding.

    Empty clusters are re-seeded at the points farthest from their centroid.
    Stops on an assignment fixpoint or after ``max_iter`` iterations; the
    distortion after every assignment step is recorded.
    """
    data = training.vectors if isinstance(training, TrainingSet) else np.asarray(training, dtype=float)
    n = data.shape[0]
    if not 1 <= i <= n:
        raise ValueError(f"cluster count must lie in [1, {n}], got {i}")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(data, i, rng)
    assignments = None
    distortions: List[float] = []

    for iteration in range(max_iter):
        dist = cdist(data, centroids, "sqeuclidean")
        new_assignments = np.argmin(dist, axis=1)
        point_dist = dist[np.arange(n), new_assignments]
        distortions.append(float(point_dist.sum()))
        if assignments is not None and np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments

        counts = np.bincount(assignments, minlength=i)
        for c in np.flatnonzero(counts):
            centroids[c] = data[assignments == c].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        spread = np.flatnonzero(point_dist > 0)
        if empty.size and spread.size:
            logger.warning("k-means iteration %d: re-seeding %d empty cluster(s)", iteration, empty.size)
            farthest = spread[np.argsort(-point_dist[spread], kind="stable")][: empty.size]
            centroids[empty[: farthest.size]] = data[farthest]
            # force another assignment pass
            assignments = None
        elif empty.size:
            # every point already sits on a centroid (duplicates); nothing left to split
            logger.debug("k-means: %d cluster(s) stay empty, data has fewer distinct points", empty.size)
            break
    else:
        logger.debug("k-means hit the %d-iteration cap", max_iter)

    final = np.argmin(cdist(data, centroids, "sqeuclidean"), axis=1)
    return KMeansResult(final, centroids, distortions)


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """One affine subspace per k-means cluster; runtime selection by nearest centroid."""
    subspaces: List[AffineSubspace]
    centroids: np.ndarray

    @property
    def min_dimension(self) -> int:
        """Smallest per-cluster dimension actually fitted."""
        return min(s.dimension for s in self.subspaces)

    def select(self, w) -> int:
        d = cdist(np.asarray(w, dtype=float)[None, :], self.centroids, "sqeuclidean")[0]
        return int(np.argmin(d))

    def project(self, w) -> np.ndarray:
        return self.subspaces[self.select(w)].project(w)

    def project_all(self, w) -> np.ndarray:
        """Projection of ``w`` onto every cluster subspace, shape (I, Q)."""
        return np.stack([s.project(w) for s in self.subspaces])


def fit_mixture(training: TrainingSet, clusters: int, dim: int, seed: int,
                clustering: Optional[KMeansResult] = None) -> MixtureModel:
    """
    Cluster with k-means, then fit a PCA subspace of dimension min(dim, members-1) per cluster.

    A precomputed ``clustering`` skips the k-means run.
    """
    result = clustering if clustering is not None else kmeans(training, clusters, seed)
    subspaces, centroids = [], []
    clamped = 0
    for c in range(result.centroids.shape[0]):
        members = training.vectors[result.assignments == c]
        if members.shape[0] == 0:
            logger.warning("dropping empty cluster %d", c)
            continue
        offset = fit_offset(members)
        d = min(dim, members.shape[0] - 1, training.frame.vector_length)
        clamped += d < dim
        basis = fit_basis_pca(members, offset, d)[0] if d > 0 else np.zeros((offset.size, 0))
        subspaces.append(AffineSubspace(offset, basis))
        centroids.append(result.centroids[c])
    if clamped:
        logger.warning("mixture D=%d: %d of %d cluster(s) too small, fitted with fewer dimensions",
                       dim, clamped, len(subspaces))
    logger.debug("mixture fitted: %d clusters, requested D=%d", len(subspaces), dim)
    return MixtureModel(subspaces, np.stack(centroids))


# Neighbourhoods

def distance_euclidean(a, b) -> float:
    """Squared Euclidean distance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sum((a - b) ** 2))


def _floored_uncertainty(p_diag) -> np.ndarray:
    p = np.maximum(np.asarray(p_diag, dtype=float), UNCERTAINTY_FLOOR)
    if not np.all(p > 0):
        raise RuntimeError("state uncertainty is not positive after flooring")
    return p


def distance_kf(candidate, mean, p_diag) -> Union[float, np.ndarray]:
    """
    Uncertainty-weighted squared distance Σ_{b,f} |candidate - mean|² / p_{bb,f}.

    ``candidate`` may carry leading batch axes in front of the (B, M) block,
    in which case one distance per candidate is returned.
    """
    p = _floored_uncertainty(p_diag)
    diff = np.asarray(candidate) - np.asarray(mean)
    dist = np.sum((diff.real**2 + diff.imag**2) / p, axis=(-2, -1))
    return float(dist) if np.ndim(dist) == 0 else dist


def neighbour_distances(query, training: TrainingSet, metric: Metric) -> np.ndarray:
    """Distance from the query to every training member."""
    if metric == Metric.EUCLIDEAN:
        q = np.asarray(query, dtype=float)
        if q.shape != (training.frame.vector_length,):
            raise ValueError(f"euclidean query must have shape ({training.frame.vector_length},)")
        return np.sum((training.vectors - q) ** 2, axis=1)
    if metric == Metric.KF:
        atf, p_diag = query
        return distance_kf(training.atfs, atf, p_diag)
    raise ValueError(f"unknown metric {metric!r}")


def knn_select(query, training: TrainingSet, k: int, metric: Metric = Metric.EUCLIDEAN) -> np.ndarray:
    """
    Indices of the ``k`` nearest members, nearest first, ties to the lowest index.

    For ``metric="kf"`` the query is a ``(atf, p_diag)`` pair of (B, M) arrays.
    """
    if not 1 <= k <= training.count:
        raise ValueError(f"k must lie in [1, {training.count}], got {k}")
    dist = neighbour_distances(query, training, metric)
    return np.argsort(dist, kind="stable")[:k]


def build_knn_subspace(neighbours: ArrayLike, rank_tol: float = QR_RANK_TOL) -> AffineSubspace:
    """
    Affine hull of the neighbours, ordered nearest first.

    Offset is their mean; the basis spans the differences to the mean of all
    but the last (farthest) neighbour, orthonormalized by pivoted QR with
    columns whose pivot falls below ``rank_tol`` times the leading pivot dropped.
    """
    m = _as_matrix(neighbours)
    offset = m.mean(axis=0)
    diffs = (m[:-1] - offset).T
    if diffs.shape[1] == 0:
        return AffineSubspace(offset, np.zeros((offset.size, 0)))
    q_mat, r_mat, _ = qr(diffs, mode="economic", pivoting=True)
    pivots = np.abs(np.diag(r_mat))
    if pivots.size == 0 or pivots[0] == 0:
        rank = 0
    else:
        rank = int(np.count_nonzero(pivots > rank_tol * pivots[0]))
    if rank < diffs.shape[1]:
        logger.debug("neighbour basis pruned from %d to %d columns", diffs.shape[1], rank)
    return AffineSubspace(offset, q_mat[:, :rank].copy())


def nearest_neighbour_subspace(query, training: TrainingSet, k: int, metric: Metric = Metric.EUCLIDEAN,
                               indices: Optional[np.ndarray] = None) -> AffineSubspace:
    """Select the k nearest members and build their affine hull."""
    if indices is None:
        indices = knn_select(query, training, k, metric)
    return build_knn_subspace(training.vectors[indices])
