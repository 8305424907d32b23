"""Eigendecomposition of the mesh operator and the spectral transforms.

A single basis (the first M eigenpairs of the base mesh operator, ascending
eigenvalues, orthonormal eigenvectors) is shared by all deformed states of a
bundle. Mesh functions and xyz coordinate columns are projected into the
basis with plain transposes and reconstructed by partial sums.

All eigenvector indices are 0-based: index 0 is the constant null vector of
a connected mesh.
"""

from __future__ import annotations

import hashlib
import struct
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as dla
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

__all__ = [
    "EigensolverError",
    "FingerprintMismatchError",
    "SpectralBasis",
    "SpectralCoefficients",
    "eigendecompose",
    "encode",
    "decode",
    "encode_geometry",
    "reconstruct_geometry",
]

# meshes up to this size go through the dense LAPACK path by default
DENSE_FALLBACK_N = 2000

_SPBS_MAGIC = b"SPBS"
_SPBS_VERSION = 1


class EigensolverError(RuntimeError):
    """Sparse eigensolver failed to converge."""


class FingerprintMismatchError(ValueError):
    """Coefficients or descriptor were produced against a different basis."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SpectralBasis:
    """First M eigenpairs of a symmetric mesh operator.

    Eigenvalues ascend; eigenvector columns are orthonormal and carry a
    deterministic sign (largest-magnitude entry positive), so repeated
    decompositions produce bitwise-identical coefficients.
    """

    eigenvalues: np.ndarray  # (M,)
    eigenvectors: np.ndarray  # (N, M)
    operator_fingerprint: str = ""

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.eigenvalues, dtype=np.float64))
        vecs = np.ascontiguousarray(np.asarray(self.eigenvectors, dtype=np.float64))
        if vals.ndim != 1 or vecs.ndim != 2 or vecs.shape[1] != vals.shape[0]:
            raise ValueError(
                f"inconsistent basis shapes: {vals.shape} values, {vecs.shape} vectors"
            )
        if np.any(np.diff(vals) < 0):
            raise ValueError("eigenvalues must be ascending")
        object.__setattr__(self, "eigenvalues", _freeze(vals))
        object.__setattr__(self, "eigenvectors", _freeze(vecs))
        h = hashlib.sha256()
        h.update(self.operator_fingerprint.encode())
        h.update(vals.tobytes())
        h.update(vecs.tobytes())
        object.__setattr__(self, "_fingerprint", h.hexdigest())

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    @property
    def m(self) -> int:
        return self.eigenvectors.shape[1]

    @property
    def fingerprint(self) -> str:
        return self._fingerprint

    def degenerate_flags(self, rel_gap: float = 1e-8) -> np.ndarray:
        """Mark eigenvalues whose neighbor gap is below rel_gap * lambda_max.

        Within such a cluster the individual eigenvectors are only defined up
        to rotation; comparisons stay valid because every shape of a bundle
        is projected into this one basis.
        """
        vals = self.eigenvalues
        tol = rel_gap * max(abs(vals[-1]), 1.0)
        gaps = np.diff(vals) < tol
        flags = np.zeros(self.m, dtype=bool)
        flags[:-1] |= gaps
        flags[1:] |= gaps
        return flags

    def save(self, path) -> None:
        """Write the SPBS binary format (f64 LE, eigenvectors column-major)."""
        header = struct.pack(
            "<4sIQQ32s",
            _SPBS_MAGIC,
            _SPBS_VERSION,
            self.n,
            self.m,
            bytes.fromhex(self.operator_fingerprint or "00" * 32),
        )
        with open(path, "wb") as f:
            f.write(header)
            f.write(self.eigenvalues.astype("<f8").tobytes())
            f.write(np.asfortranarray(self.eigenvectors).astype("<f8").tobytes("F"))

    @classmethod
    def load(cls, path) -> "SpectralBasis":
        with open(path, "rb") as f:
            head = f.read(struct.calcsize("<4sIQQ32s"))
            magic, version, n, m, fp = struct.unpack("<4sIQQ32s", head)
            if magic != _SPBS_MAGIC:
                raise ValueError(f"not a SPBS file (magic {magic!r})")
            if version != _SPBS_VERSION:
                raise ValueError(f"unsupported SPBS version {version}")
            vals = np.frombuffer(f.read(8 * m), dtype="<f8")
            vecs = np.frombuffer(f.read(8 * n * m), dtype="<f8")
        vecs = vecs.reshape((n, m), order="F")
        fp_hex = fp.hex()
        if fp_hex == "00" * 32:
            fp_hex = ""
        return cls(vals.copy(), np.ascontiguousarray(vecs), fp_hex)


@dataclass(frozen=True)
class SpectralCoefficients:
    """Per-shape projection of xyz coordinates: M rows of (ax, ay, az)."""

    values: np.ndarray  # (M, 3)
    basis_fingerprint: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"coefficients must be (M, 3), got {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def save_csv(self, path) -> None:
        with open(path, "w") as f:
            if self.basis_fingerprint:
                f.write(f"# basis_fingerprint: {self.basis_fingerprint}\n")
            f.write("index,alpha_x,alpha_y,alpha_z\n")
            for i, (x, y, z) in enumerate(self.values):
                f.write(f"{i},{float(x)!r},{float(y)!r},{float(z)!r}\n")

    @classmethod
    def load_csv(cls, path) -> "SpectralCoefficients":
        fp = ""
        rows = []
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if "basis_fingerprint:" in line:
                        fp = line.split("basis_fingerprint:", 1)[1].strip()
                    continue
                if line.startswith("index,"):
                    continue
                parts = line.split(",")
                rows.append([float(parts[1]), float(parts[2]), float(parts[3])])
        return cls(np.array(rows), fp)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive.

    Ties are resolved by the first entry within 1e-6 of the maximum: on
    symmetric meshes entries come in +-pairs of equal magnitude, and a plain
    argmax would flip between solvers on rounding noise.
    """
    absv = np.abs(vecs)
    near_max = absv >= (1.0 - 1e-6) * absv.max(axis=0)
    idx = near_max.argmax(axis=0)  # first near-maximal entry per column
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def eigendecompose(
    L: sparse.spmatrix,
    m: int,
    method: str = "auto",
    operator_fingerprint: str = "",
    seed: int = 0,
) -> SpectralBasis:
    """Compute the m smallest eigenpairs of a sparse symmetric operator.

    ``method`` is "auto" (dense LAPACK for N <= 2000 or m close to N,
    Lanczos otherwise), "dense", or "lanczos". The Lanczos path uses
    shift-invert with a fixed seeded start vector for reproducibility.
    """
    n = L.shape[0]
    if not (1 <= m <= n):
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={n}")
    if method not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "dense" if (n <= DENSE_FALLBACK_N or m >= n - 1) else "lanczos"

    if method == "dense":
        vals, vecs = dla.eigh(np.asarray(L.todense()), subset_by_index=[0, m - 1])
    else:
        # shift slightly below zero: L is PSD, so L - sigma*I is definite
        scale = max(abs(L.diagonal()).max(), 1.0)
        v0 = np.random.default_rng(seed).standard_normal(n)
        try:
            vals, vecs = eigsh(
                L.tocsc(), k=m, sigma=-1e-3 * scale, which="LM", v0=v0
            )
        except ArpackNoConvergence as e:
            raise EigensolverError(
                f"Lanczos converged only {len(e.eigenvalues)}/{m} eigenpairs"
            ) from e

    order = np.argsort(vals, kind="stable")
    return SpectralBasis(
        vals[order], _fix_signs(vecs[:, order]), operator_fingerprint
    )


def _check_fingerprint(basis: SpectralBasis, fp: str) -> None:
    if fp and basis.fingerprint != fp:
        raise FingerprintMismatchError(
            f"basis fingerprint {basis.fingerprint[:12]}... does not match "
            f"coefficients fingerprint {fp[:12]}..."
        )


def encode(basis: SpectralBasis, f: np.ndarray) -> np.ndarray:
    """Spectral coefficients of one mesh function: alpha_i = <f, psi_i>."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (basis.n,):
        raise ValueError(f"mesh function has shape {f.shape}, expected ({basis.n},)")
    return basis.eigenvectors.T @ f


def decode(
    basis: SpectralBasis, coeffs: np.ndarray, indices: np.ndarray | None = None
) -> np.ndarray:
    """Partial inverse transform: f = sum over supplied indices of alpha_i psi_i."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if indices is None:
        if coeffs.shape[0] > basis.m:
            raise ValueError(f"{coeffs.shape[0]} coefficients but basis has M={basis.m}")
        return basis.eigenvectors[:, : coeffs.shape[0]] @ coeffs
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= basis.m):
        raise ValueError(f"index out of basis range [0, {basis.m})")
    return basis.eigenvectors[:, indices] @ coeffs


def encode_geometry(basis: SpectralBasis, coordinates: np.ndarray) -> SpectralCoefficients:
    """Project xyz coordinate columns into the basis (one matmul, O(3MN))."""
    p = np.asarray(coordinates, dtype=np.float64)
    if p.shape != (basis.n, 3):
        raise ValueError(f"coordinates have shape {p.shape}, expected ({basis.n}, 3)")
    return SpectralCoefficients(basis.eigenvectors.T @ p, basis.fingerprint)


def reconstruct_geometry(
    basis: SpectralBasis,
    coeffs: SpectralCoefficients,
    subset: np.ndarray | None = None,
) -> np.ndarray:
    """Per-axis partial sums over a subset of eigenvector indices.

    ``subset=None`` uses all M indices. An empty subset yields an all-zero
    geometry with a warning rather than an error.
    """
    _check_fingerprint(basis, coeffs.basis_fingerprint)
    if coeffs.m != basis.m:
        raise ValueError(f"coefficients M={coeffs.m} but basis M={basis.m}")
    if subset is None:
        return basis.eigenvectors @ coeffs.values
    subset = np.asarray(subset, dtype=np.int64)
    if subset.size == 0:
        warnings.warn("empty index subset: reconstructing all-zero geometry")
        return np.zeros((basis.n, 3))
    if subset.min() < 0 or subset.max() >= basis.m:
        raise ValueError(f"subset index out of basis range [0, {basis.m})")
    return basis.eigenvectors[:, subset] @ coeffs.values[subset]
