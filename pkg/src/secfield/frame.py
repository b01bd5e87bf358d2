"""Frame coefficients and the truncated vector-field regression.

The frame consists of the vector fields ``B_ij = phi_i grad(phi_j)`` with
``0 <= i < L`` and ``1 <= j <= J``. Everything here works on spectral data
only: products of eigenvectors (``c``), the carre du champ identity for
gradient inner products (``g``), their contraction (``d``), and from those the
Gram matrix of the frame and the right-hand side of the regression.

Index conventions
-----------------
``c[i, j, p]`` and ``g[p, j, k]`` use natural eigenfunction indices.
``d`` has shape ``(L, J, L1, L2)`` and ``d[i, q, k, l]`` holds
``d_{i, q+1, k, l}``: the gradient slot skips the constant eigenfunction.
Gram rows and columns are flattened as ``r = i * J + (j - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .diffusion import DiffusionBasis
from .errors import ConfigError, InvalidArgumentError, NumericError

__all__ = [
    "ResolutionParams",
    "SecTensors",
    "FrameSolution",
    "compute_c",
    "compute_g",
    "compute_d",
    "build_gram",
    "compute_F_coeffs",
    "compute_v_hat",
    "solve_b",
    "fit_frame",
]


@dataclass(frozen=True)
class ResolutionParams:
    """Truncation parameters of the frame regression."""

    J: int
    L: int
    L1: int
    L2: int
    L_D: int
    eta: float

    def __post_init__(self):
        for name in ("J", "L", "L1", "L2", "L_D"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value}")
            object.__setattr__(self, name, int(value))
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        object.__setattr__(self, "eta", float(self.eta))
        # the Gram matrix reads d[i, j, l, k] with gradient index l <= J in the
        # third slot and function index k < L in the fourth
        if self.J >= self.L1:
            raise ConfigError(f"need J < L1 (got J={self.J}, L1={self.L1})")
        if self.L > self.L2:
            raise ConfigError(f"need L <= L2 (got L={self.L}, L2={self.L2})")

    @property
    def n_eigs(self) -> int:
        """Number of eigenpairs the regression consumes."""
        return max(self.J + 1, self.L, self.L1, self.L2, self.L_D)

    def check_against(self, n_eigs: int) -> None:
        if self.n_eigs > n_eigs:
            raise ConfigError(
                f"resolution needs {self.n_eigs} eigenpairs but only {n_eigs} are available"
            )

    @classmethod
    def circle_defaults(cls) -> "ResolutionParams":
        return cls(J=10, L=20, L1=20, L2=40, L_D=40, eta=0.01)

    @classmethod
    def torus_defaults(cls) -> "ResolutionParams":
        return cls(J=20, L=120, L1=120, L2=280, L_D=280, eta=0.05)

    def to_dict(self) -> dict:
        return {"J": self.J, "L": self.L, "L1": self.L1, "L2": self.L2, "L_D": self.L_D, "eta": self.eta}


@dataclass(frozen=True, eq=False)
class SecTensors:
    c: np.ndarray
    g: np.ndarray
    d: np.ndarray
    gram: np.ndarray
    gram_asymmetry: float
    F_coeffs: np.ndarray
    v_hat: np.ndarray


@dataclass(frozen=True, eq=False)
class FrameSolution:
    params: ResolutionParams
    b: np.ndarray
    gram_rank: int
    gram_spectrum: np.ndarray


def compute_c(phi, weights, i_max: int, j_max: int, p_max: int) -> np.ndarray:
    """Weighted triple products ``c[i, j, p] = sum_n phi_p phi_i phi_j w_n``.

    ``phi`` may also be a :class:`DiffusionBasis`, in which case its eigenvectors
    and weights are used and ``weights`` is ignored.
    """
    if isinstance(phi, DiffusionBasis):
        phi, weights = phi.eigenvectors, phi.weights
    m = phi.shape[1]
    if max(i_max, j_max, p_max) > m:
        raise InvalidArgumentError(f"c indices exceed the {m} available eigenvectors")
    phi_w = phi[:, :p_max] * weights[:, None]
    c = np.empty((i_max, j_max, p_max))
    for i in range(i_max):
        c[i] = (phi[:, :j_max] * phi[:, i : i + 1]).T @ phi_w
    s = min(i_max, j_max)
    sq = c[:s, :s]
    c[:s, :s] = 0.5 * (sq + sq.transpose(1, 0, 2))
    return c


def compute_g(c, laplace_eigenvalues, p_max: int, j_max: int, k_max: int) -> np.ndarray:
    """Carre du champ: ``g[p, j, k] = (lam_j + lam_k - lam_p) c[j, k, p] / 2``."""
    if j_max > c.shape[0] or k_max > c.shape[1] or p_max > c.shape[2]:
        raise InvalidArgumentError("c tensor does not cover the requested g indices")
    lam = np.asarray(laplace_eigenvalues, dtype=float)
    factor = lam[None, :j_max, None] + lam[None, None, :k_max] - lam[:p_max, None, None]
    return 0.5 * factor * c[:j_max, :k_max, :p_max].transpose(2, 0, 1)


def compute_d(c, g, params: ResolutionParams) -> np.ndarray:
    """``d_{ijkl} = sum_{p < L_D} c_{ilp} g_{pjk}`` for the gradient indices ``1..J``."""
    L, J, L1, L2, LD = params.L, params.J, params.L1, params.L2, params.L_D
    if c.shape[0] < L or c.shape[1] < L2 or c.shape[2] < LD:
        raise InvalidArgumentError("c tensor does not cover the d index ranges")
    if g.shape[0] < LD or g.shape[1] < J + 1 or g.shape[2] < L1:
        raise InvalidArgumentError("g tensor does not cover the d index ranges")
    g_sub = np.ascontiguousarray(g[:LD, 1 : J + 1, :L1]).reshape(LD, J * L1)
    d = np.empty((L, J, L1, L2))
    for i in range(L):
        # (J*L1, LD) @ (LD, L2)
        d[i] = (g_sub.T @ c[i, :L2, :LD].T).reshape(J, L1, L2)
    return d


def build_gram(d, params: ResolutionParams):
    """Gram matrix ``G[(i,j), (k,l)] = d_{ijlk}``, symmetrized.

    Returns ``(G, asymmetry)`` where ``asymmetry`` is the largest entry of
    ``|G - G^T|`` before symmetrization, a convergence diagnostic.
    """
    L, J = params.L, params.J
    if d.shape[0] < L or d.shape[1] < J or d.shape[2] < J + 1 or d.shape[3] < L:
        raise ConfigError("d tensor does not cover the Gram index ranges")
    g4 = d[:L, :J, 1 : J + 1, :L]  # axes (i, j, l, k)
    gram = np.ascontiguousarray(g4.transpose(0, 1, 3, 2)).reshape(L * J, L * J)
    asym = float(np.max(np.abs(gram - gram.T)))
    return 0.5 * (gram + gram.T), asym


def compute_F_coeffs(basis: DiffusionBasis, points, L1: int) -> np.ndarray:
    """Expansion coefficients of the embedding, one row per eigenfunction."""
    if L1 > basis.n_eigs:
        raise InvalidArgumentError(f"L1={L1} exceeds the {basis.n_eigs} eigenvectors")
    return (basis.eigenvectors[:, :L1] * basis.weights[:, None]).T @ np.asarray(points, dtype=float)


def compute_v_hat(basis: DiffusionBasis, arrows, F_coeffs, L1: int, L2: int) -> np.ndarray:
    arrows = np.asarray(arrows, dtype=float)
    if arrows.shape != (basis.n_samples, F_coeffs.shape[1]) or F_coeffs.shape[0] < L1:
        raise InvalidArgumentError("arrow / coefficient shapes are inconsistent")
    proj = (basis.eigenvectors[:, :L2] * basis.weights[:, None]).T @ arrows  # (L2, d)
    return (F_coeffs[:L1] @ proj.T).ravel()


def solve_b(gram, d, v_hat, params: ResolutionParams) -> FrameSolution:
    """Minimum-norm solution with the Gram spectrum floored at ``eta``."""
    L, J, L1, L2 = params.L, params.J, params.L1, params.L2
    try:
        gamma, u = scipy.linalg.eigh(gram)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"Gram eigendecomposition failed: {exc}") from exc
    keep = gamma > params.eta
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        raise ConfigError(
            f"eta too large: eta={params.eta:g} exceeds the largest Gram eigenvalue {gamma[-1]:.4g}"
        )
    dmat = d[:L, :J, :L1, :L2].reshape(L * J, L1 * L2)
    rhs = dmat @ v_hat
    u_k = u[:, keep]
    b = u_k @ ((u_k.T @ rhs) / gamma[keep])
    return FrameSolution(
        params=params,
        b=b.reshape(L, J),
        gram_rank=rank,
        gram_spectrum=gamma[keep][::-1].copy(),
    )


def fit_frame(basis: DiffusionBasis, points, arrows, params: ResolutionParams):
    """Build all coefficient tensors and solve for ``b``."""
    params.check_against(basis.n_eigs)
    m = max(params.L, params.L1, params.L2, params.J + 1)
    c = compute_c(basis, None, m, m, params.L_D)
    g = compute_g(c, basis.eigenvalues_laplace, params.L_D, params.J + 1, params.L1)
    d = compute_d(c, g, params)
    gram, asym = build_gram(d, params)
    F = compute_F_coeffs(basis, points, params.L1)
    v_hat = compute_v_hat(basis, arrows, F, params.L1, params.L2)
    solution = solve_b(gram, d, v_hat, params)
    tensors = SecTensors(c=c, g=g, d=d, gram=gram, gram_asymmetry=asym, F_coeffs=F, v_hat=v_hat)
    return tensors, solution
