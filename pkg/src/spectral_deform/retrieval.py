"""Similarity scoring, ranking/filtering, and coefficient-space clustering.

Similarity between a descriptor and a candidate shape is the cosine of the
two length-3m vectors formed by flattening the coefficient triples at the
descriptor's indices only: the descriptor is the feature. Signs are kept,
so opposite deformation directions (upward vs. downward bend) score
negatively against each other.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .descriptor import DeformationDescriptor
from .spectral import FingerprintMismatchError, SpectralCoefficients

__all__ = [
    "SimilarityRanking",
    "ClusterAssignment",
    "cosine_similarity",
    "rank_bundle",
    "filter_bundle",
    "cluster_coefficients",
    "write_ranking_csv",
    "write_assignment_csv",
    "write_scatter_data",
]

DEGENERATE_NORM = 1e-14


@dataclass(frozen=True)
class SimilarityRanking:
    """Shape ids with non-increasing cosine scores; ties broken by id."""

    ids: tuple
    scores: np.ndarray
    label: str = ""

    def __iter__(self):
        return iter(zip(self.ids, self.scores))


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray  # (n,) cluster index per shape
    centroids: np.ndarray  # (k, d)
    inertia: float


def _check_fp(descriptor: DeformationDescriptor, coeffs: SpectralCoefficients) -> None:
    if (
        descriptor.basis_fingerprint
        and coeffs.basis_fingerprint
        and descriptor.basis_fingerprint != coeffs.basis_fingerprint
    ):
        raise FingerprintMismatchError(
            "descriptor and candidate coefficients come from different bases"
        )


def cosine_similarity(
    descriptor: DeformationDescriptor, coeffs: SpectralCoefficients
) -> float:
    """Cosine between descriptor triples and candidate triples at the same indices.

    Returns 0.0 (with a warning) if either flattened vector is degenerate
    (norm below 1e-14).
    """
    _check_fp(descriptor, coeffs)
    if descriptor.indices.max() >= coeffs.m:
        raise ValueError(
            f"descriptor index {descriptor.indices.max()} out of range for "
            f"M={coeffs.m} coefficients"
        )
    a = descriptor.triples.ravel()
    b = coeffs.values[descriptor.indices].ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < DEGENERATE_NORM or nb < DEGENERATE_NORM:
        warnings.warn("degenerate coefficient vector: cosine similarity set to 0")
        return 0.0
    return float(a @ b / (na * nb))


def rank_bundle(
    descriptor: DeformationDescriptor,
    bundle_coeffs: list[SpectralCoefficients],
    ids: list | None = None,
) -> SimilarityRanking:
    """Rank every shape by descending similarity; ties broken by ascending id."""
    if not bundle_coeffs:
        raise ValueError("bundle is empty")
    if ids is None:
        ids = list(range(len(bundle_coeffs)))
    if len(ids) != len(bundle_coeffs):
        raise ValueError("ids and bundle length differ")
    scores = np.array([cosine_similarity(descriptor, c) for c in bundle_coeffs])
    order = sorted(range(len(ids)), key=lambda k: (-scores[k], ids[k]))
    return SimilarityRanking(
        ids=tuple(ids[k] for k in order),
        scores=scores[order],
        label=descriptor.label,
    )


def filter_bundle(
    descriptor: DeformationDescriptor,
    bundle_coeffs: list[SpectralCoefficients],
    ids: list | None = None,
    top_k: int | None = None,
    min_score: float | None = None,
) -> list:
    """Ids of the ranking prefix selected by top_k or min_score (exactly one)."""
    if (top_k is None) == (min_score is None):
        raise ValueError("specify exactly one of top_k or min_score")
    ranking = rank_bundle(descriptor, bundle_coeffs, ids)
    if top_k is not None:
        if top_k > len(ranking.ids):
            warnings.warn(
                f"top_k={top_k} exceeds bundle size {len(ranking.ids)}; clamping"
            )
            top_k = len(ranking.ids)
        return list(ranking.ids[:top_k])
    return [i for i, s in ranking if s >= min_score]


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(x.shape[0])]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:  # all remaining points coincide with a center
            centers[c] = x[rng.integers(x.shape[0])]
            continue
        centers[c] = x[rng.choice(x.shape[0], p=d2 / total)]
        d2 = np.minimum(d2, np.sum((x - centers[c]) ** 2, axis=1))
    return centers


def _lloyd(
    x: np.ndarray,
    centers: np.ndarray,
    max_iter: int = 300,
    rtol: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, float]:
    prev = np.inf
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(len(x)), labels].sum())
        for c in range(centers.shape[0]):
            members = x[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:  # re-seed an empty cluster at the farthest point
                centers[c] = x[d2.min(axis=1).argmax()]
        if prev - inertia <= rtol * max(prev, 1e-300) and np.isfinite(prev):
            break
        prev = inertia
    return labels, centers, inertia


def cluster_coefficients(
    bundle_coeffs: list[SpectralCoefficients],
    k: int,
    feature: str = "first_eigenvector_xyz",
    m: int | None = None,
    seed: int = 0,
) -> ClusterAssignment:
    """k-means over per-shape coefficient features.

    ``feature`` is "first_eigenvector_xyz" (the 3 coefficients of the first
    eigenvector, enough to separate coarse deformation modes) or "first_m"
    (the flattened first ``m`` triples). Seeded k-means++ initialization and
    Lloyd iterations until the relative inertia change drops below 1e-6.
    """
    n = len(bundle_coeffs)
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= {n} shapes, got k={k}")
    if feature == "first_eigenvector_xyz":
        x = np.array([c.values[0] for c in bundle_coeffs])
    elif feature == "first_m":
        if m is None or m < 1:
            raise ValueError("feature 'first_m' needs m >= 1")
        m = min(m, min(c.m for c in bundle_coeffs))
        x = np.array([c.values[:m].ravel() for c in bundle_coeffs])
    else:
        raise ValueError(f"unknown feature {feature!r}")
    if len(np.unique(x, axis=0)) < k:
        raise ValueError(f"only {len(np.unique(x, axis=0))} distinct points for k={k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(x, k, rng)
    labels, centers, inertia = _lloyd(x, centers)
    return ClusterAssignment(labels=labels, centroids=centers, inertia=inertia)


def write_ranking_csv(path, ranking: SimilarityRanking) -> None:
    with open(path, "w") as f:
        f.write("shape_id,score,label\n")
        for i, s in ranking:
            f.write(f"{i},{float(s)!r},{ranking.label}\n")


def write_assignment_csv(path, ids: list, assignment: ClusterAssignment) -> None:
    with open(path, "w") as f:
        f.write("shape_id,cluster\n")
        for i, c in zip(ids, assignment.labels):
            f.write(f"{i},{c}\n")


def write_scatter_data(path, bundle_coeffs: list[SpectralCoefficients]) -> None:
    """First-eigenvector xyz coefficients per shape, gnuplot-compatible."""
    with open(path, "w") as f:
        f.write("# alpha_x alpha_y alpha_z\n")
        for c in bundle_coeffs:
            x, y, z = c.values[0]
            f.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
