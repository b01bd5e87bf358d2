"""Diffusion-maps approximation of the Laplace-Beltrami operator.

Gaussian kernel with the two-sided degree normalization, eigendecomposition of
the symmetrized Markov matrix, heat-trace volume estimate, volume-consistent
inner-product weights and the Nystrom extension of eigenvectors to arbitrary
points of data space.

All row reductions use ``numpy.sum`` (pairwise summation) in a fixed order, so
results are bit-reproducible for a given BLAS/LAPACK build.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import DegenerateInputError, InvalidArgumentError, NumericError, OutOfRangeError

__all__ = [
    "DiffusionBasis",
    "KernelConfig",
    "gaussian_kernel",
    "kernel_matrix",
    "compute_degrees",
    "build_symmetric_markov",
    "eigendecompose",
    "estimate_volume",
    "compute_weights",
    "normalize_eigenvectors",
    "fit_diffusion_basis",
    "nystrom_extend",
    "BASIS_SCHEMA",
]

BASIS_SCHEMA = "sec-field/basis-v1"
LAMBDA_FLOOR = 1e-14
# kernel of a query this many squared bandwidths from every sample is treated as unresolvable
MAX_SCALED_SQDIST = 1e6


@dataclass(frozen=True)
class KernelConfig:
    epsilon: float
    c_constant: float = 0.25

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")


def _check_epsilon(epsilon):
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise InvalidArgumentError(f"epsilon must be positive and finite, got {epsilon}")


def gaussian_kernel(y, y2, epsilon: float) -> float:
    _check_epsilon(epsilon)
    y = np.asarray(y, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(y2))):
        raise InvalidArgumentError("kernel arguments must be finite")
    diff = y - y2
    return float(np.exp(-np.dot(diff, diff) / epsilon**2))


def kernel_matrix(points, epsilon: float) -> np.ndarray:
    """Dense, exactly symmetric Gaussian kernel matrix of the samples."""
    _check_epsilon(epsilon)
    points = np.asarray(points, dtype=float)
    if points.shape[0] == 1:
        return np.ones((1, 1))
    return squareform(np.exp(-pdist(points, "sqeuclidean") / epsilon**2), checks=False) + np.eye(
        points.shape[0]
    )


def compute_degrees(points, epsilon: float, kernel=None):
    """Right and left normalization functions evaluated at the samples.

    ``r_n = mean_m k(y_n, y_m)`` and ``l_n = mean_m k(y_n, y_m) / r_m``.
    """
    if kernel is None:
        kernel = kernel_matrix(points, epsilon)
    r = np.sum(kernel, axis=1) / kernel.shape[0]
    l = np.sum(kernel / r[None, :], axis=1) / kernel.shape[0]
    return r, l


def _check_duplicates(points):
    if points.shape[0] < 2:
        return
    dist = pdist(points, "sqeuclidean")
    zero = np.flatnonzero(dist == 0)
    if zero.size:
        rows, cols = np.triu_indices(points.shape[0], 1)
        i, j = int(rows[zero[0]]), int(cols[zero[0]])
        raise DegenerateInputError(
            f"duplicate sample points at indices {i} and {j} ({zero.size} duplicate pair(s))"
        )


def build_symmetric_markov(points, epsilon: float):
    """Return ``(P_tilde, d_alpha, trace_P, r, l)``.

    ``P_tilde[i, j] = (k(y_i, y_j) / N) / sqrt(l_i r_i r_j l_j)`` is the symmetric
    conjugate ``D P D^-1`` of the Markov matrix ``P[i, j] = k / (N l_i r_j)``
    with ``D = diag(sqrt(l / r))``.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise InvalidArgumentError("need at least two sample points")
    if not np.all(np.isfinite(points)):
        raise InvalidArgumentError("sample points must be finite")
    _check_duplicates(points)
    n = points.shape[0]
    kernel = kernel_matrix(points, epsilon)
    r, l = compute_degrees(points, epsilon, kernel=kernel)
    s = 1.0 / np.sqrt(l * r)
    # outer product first: s_i*s_j == s_j*s_i keeps the result exactly symmetric
    p_tilde = kernel * (np.outer(s, s) / n)
    d_alpha = np.sqrt(l / r)
    trace_p = float(np.sum(np.diag(p_tilde)))
    return p_tilde, d_alpha, trace_p, r, l


def eigendecompose(p_tilde, n_eigs: int):
    """Top ``n_eigs`` eigenpairs of the symmetric Markov conjugate, descending.

    The leading eigenvector is made entrywise positive. Eigenvalues at or below
    ``LAMBDA_FLOOR`` (and everything after them) are dropped with a warning,
    since the Laplace eigenvalue ``-4 log(Lambda) / eps^2`` needs ``Lambda > 0``.
    """
    n = p_tilde.shape[0]
    if not 1 <= n_eigs <= n:
        raise InvalidArgumentError(f"n_eigs must lie in [1, {n}], got {n_eigs}")
    try:
        vals, vecs = scipy.linalg.eigh(p_tilde, subset_by_index=[n - n_eigs, n - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"symmetric eigensolver failed: {exc}") from exc
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    keep = int(np.argmax(vals <= LAMBDA_FLOOR)) if np.any(vals <= LAMBDA_FLOOR) else n_eigs
    if keep < n_eigs:
        warnings.warn(
            f"only {keep} of {n_eigs} Markov eigenvalues exceed {LAMBDA_FLOOR:g}; truncating",
            RuntimeWarning,
            stacklevel=2,
        )
        vals, vecs = vals[:keep], vecs[:, :keep]
    if keep == 0:
        raise NumericError("no positive Markov eigenvalues")
    if np.sum(vecs[:, 0]) < 0:
        vecs[:, 0] = -vecs[:, 0]
    return vals, vecs


def estimate_volume(trace_p: float, epsilon: float, dim_manifold: int) -> float:
    """Heat-trace estimate ``(pi eps^2)^(m/2) tr P`` of the Riemannian volume."""
    if not trace_p > 0:
        raise InvalidArgumentError(f"trace must be positive, got {trace_p}")
    return float((math.pi * epsilon**2) ** (dim_manifold / 2) * trace_p)


def compute_weights(e0, volume: float) -> np.ndarray:
    e0 = np.asarray(e0, dtype=float)
    if np.any(e0 == 0):
        raise DegenerateInputError(
            f"leading eigenvector vanishes at index {int(np.flatnonzero(e0 == 0)[0])}"
        )
    sq = e0**2
    return volume * sq / np.sum(sq)


def normalize_eigenvectors(vecs, weights):
    """Divide by the leading eigenvector, fix signs, normalize in the weighted norm."""
    phi = vecs / vecs[:, :1]
    idx = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[idx, np.arange(phi.shape[1])])
    signs[signs == 0] = 1.0
    phi = phi * signs
    norms = np.sqrt(np.sum(phi**2 * weights[:, None], axis=0))
    return phi / norms


@dataclass(frozen=True, eq=False)
class DiffusionBasis:
    epsilon: float
    dim_manifold: int
    eigenvalues_markov: np.ndarray
    eigenvalues_laplace: np.ndarray
    eigenvectors: np.ndarray
    weights: np.ndarray
    volume: float
    degrees_r: np.ndarray
    degrees_l: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        for name in (
            "eigenvalues_markov",
            "eigenvalues_laplace",
            "eigenvectors",
            "weights",
            "degrees_r",
            "degrees_l",
            "points",
        ):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_eigs(self) -> int:
        return self.eigenvectors.shape[1]

    @property
    def n_samples(self) -> int:
        return self.points.shape[0]

    def with_eigenvectors(self, eigenvectors) -> "DiffusionBasis":
        """Copy with replaced eigenvector columns (used for gauge checks)."""
        return dataclasses.replace(self, eigenvectors=np.asarray(eigenvectors, dtype=float))

    def truncated(self, n_eigs: int) -> "DiffusionBasis":
        return dataclasses.replace(
            self,
            eigenvalues_markov=self.eigenvalues_markov[:n_eigs],
            eigenvalues_laplace=self.eigenvalues_laplace[:n_eigs],
            eigenvectors=self.eigenvectors[:, :n_eigs],
        )

    def invariant_violations(self, tol_orth=1e-8) -> list[str]:
        """Human-readable list of broken basis invariants (empty when healthy)."""
        out = []
        lam = self.eigenvalues_markov
        if abs(lam[0] - 1) > 1e-8:
            out.append(f"Lambda_0 = {lam[0]!r} is not 1")
        if lam.size > 1 and not lam[1] < lam[0]:
            out.append("Lambda_0 is not simple")
        if np.any(lam <= 0) or np.any(lam > 1 + 1e-12):
            out.append("Markov eigenvalues outside (0, 1]")
        if np.any(self.weights <= 0):
            out.append("non-positive weights")
        gram = self.eigenvectors.T @ (self.weights[:, None] * self.eigenvectors)
        err = np.max(np.abs(gram - np.eye(self.n_eigs)))
        if err > tol_orth:
            out.append(f"weighted orthonormality defect {err:.3g}")
        return out

    def to_document(self) -> dict:
        return {
            "schema": BASIS_SCHEMA,
            "epsilon": self.epsilon,
            "dim_manifold": self.dim_manifold,
            "n_eigs": self.n_eigs,
            "volume": self.volume,
            "eigenvalues_markov": self.eigenvalues_markov.tolist(),
            "eigenvalues_laplace": self.eigenvalues_laplace.tolist(),
            "eigenvectors": self.eigenvectors.tolist(),
            "weights": self.weights.tolist(),
            "degrees_r": self.degrees_r.tolist(),
            "degrees_l": self.degrees_l.tolist(),
            "points": self.points.tolist(),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "DiffusionBasis":
        from .errors import SchemaError

        if doc.get("schema") != BASIS_SCHEMA:
            raise SchemaError(f"expected schema {BASIS_SCHEMA!r}, got {doc.get('schema')!r}")
        try:
            return cls(
                epsilon=float(doc["epsilon"]),
                dim_manifold=int(doc["dim_manifold"]),
                eigenvalues_markov=doc["eigenvalues_markov"],
                eigenvalues_laplace=doc["eigenvalues_laplace"],
                eigenvectors=doc["eigenvectors"],
                weights=doc["weights"],
                volume=float(doc["volume"]),
                degrees_r=doc["degrees_r"],
                degrees_l=doc["degrees_l"],
                points=doc["points"],
            )
        except KeyError as exc:
            raise SchemaError(f"basis document lacks field {exc.args[0]!r}") from exc


def fit_diffusion_basis(points, epsilon: float, dim_manifold: int, n_eigs: int) -> DiffusionBasis:
    """Run the full diffusion-maps pipeline on the sample points."""
    _check_epsilon(epsilon)
    points = np.asarray(points, dtype=float)
    p_tilde, _, trace_p, r, l = build_symmetric_markov(points, epsilon)
    vals, vecs = eigendecompose(p_tilde, n_eigs)
    del p_tilde
    if abs(vals[0] - 1) > 1e-8:
        raise NumericError(f"leading Markov eigenvalue {vals[0]!r} differs from 1")
    if vals.size > 1 and 1 - vals[1] < 1e-12:
        raise NumericError(
            "Markov eigenvalue 1 is not simple; the kernel graph is numerically "
            "disconnected (epsilon too small?)"
        )
    volume = estimate_volume(trace_p, epsilon, dim_manifold)
    weights = compute_weights(vecs[:, 0], volume)
    phi = normalize_eigenvectors(vecs, weights)
    lam = -4.0 * np.log(vals) / epsilon**2
    return DiffusionBasis(
        epsilon=float(epsilon),
        dim_manifold=int(dim_manifold),
        eigenvalues_markov=vals,
        eigenvalues_laplace=lam,
        eigenvectors=phi,
        weights=weights,
        volume=volume,
        degrees_r=r,
        degrees_l=l,
        points=points,
    )


def markov_weights(basis: DiffusionBasis, y) -> np.ndarray:
    """Rows ``rho(y, y_n)`` of the normalized kernel for query points ``y`` (Q x d).

    Evaluated in the log domain so that queries far from the data (where every
    kernel value underflows) still give a well-defined Markov row.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("query points must be finite")
    sq = cdist(y, basis.points, "sqeuclidean") / basis.epsilon**2
    if not np.all(np.isfinite(sq)):
        raise OutOfRangeError("query point too far from the data")
    nearest = sq.min(axis=1)
    if np.any(nearest > MAX_SCALED_SQDIST):
        q = int(np.argmax(nearest))
        raise OutOfRangeError(
            f"query {q} lies {math.sqrt(nearest[q]):.3g} bandwidths from the nearest sample"
        )
    logits = -sq - np.log(basis.degrees_r)[None, :]
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / (np.sum(e, axis=1, keepdims=True) / basis.n_samples)


def nystrom_extend(basis: DiffusionBasis, y, j_max: int | None = None) -> np.ndarray:
    """Values of the first ``j_max`` eigenfunctions at ``y``.

    ``y`` may be a single d-vector (returns a ``j_max`` vector) or a Q x d array
    (returns Q x ``j_max``).
    """
    j_max = basis.n_eigs if j_max is None else int(j_max)
    if not 1 <= j_max <= basis.n_eigs:
        raise InvalidArgumentError(f"j_max must lie in [1, {basis.n_eigs}], got {j_max}")
    single = np.ndim(y) == 1
    rho = markov_weights(basis, y)
    scale = 1.0 / (basis.n_samples * basis.eigenvalues_markov[:j_max])
    out = (rho @ basis.eigenvectors[:, :j_max]) * scale
    return out[0] if single else out
