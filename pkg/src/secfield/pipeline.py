"""End-to-end fit: diffusion basis, coefficient tensors, regression, field."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .datasets import TrainingSet
from .diffusion import DiffusionBasis, fit_diffusion_basis
from .errors import ConfigError
from .field import FieldMetrics, ReconstructedField, assemble_field, compute_metrics
from .frame import FrameSolution, ResolutionParams, SecTensors, fit_frame

__all__ = ["FitResult", "fit", "fit_with_basis", "sample_normals"]


@dataclass(frozen=True, eq=False)
class FitResult:
    basis: DiffusionBasis
    tensors: SecTensors
    solution: FrameSolution
    field: ReconstructedField
    metrics: FieldMetrics
    wall_times: dict

    def summary(self) -> dict:
        return {
            **self.metrics.to_dict(),
            "gram_rank": self.solution.gram_rank,
            "gram_asymmetry": self.tensors.gram_asymmetry,
            "volume": self.basis.volume,
            "epsilon": self.basis.epsilon,
            "n_samples": self.basis.n_samples,
            "params": self.solution.params.to_dict(),
            "eigenvalues_laplace": self.basis.eigenvalues_laplace.tolist(),
            "eigenvalues_markov": self.basis.eigenvalues_markov.tolist(),
        }


def fit_with_basis(basis: DiffusionBasis, training: TrainingSet, params: ResolutionParams,
                   normals=None, _t_basis: float = 0.0) -> FitResult:
    t0 = time.perf_counter()
    tensors, solution = fit_frame(basis, training.points, training.arrows, params)
    t1 = time.perf_counter()
    fld = assemble_field(basis, tensors, solution)
    t2 = time.perf_counter()
    metrics = compute_metrics(fld, training.points, training.arrows, normals=normals)
    return FitResult(
        basis=basis,
        tensors=tensors,
        solution=solution,
        field=fld,
        metrics=metrics,
        wall_times={"1a_eigendecomposition": _t_basis, "1b_sec_regression": t1 - t0,
                    "1c_field_assembly": t2 - t1},
    )


def fit(training: TrainingSet, epsilon: float, params: ResolutionParams, normals=None) -> FitResult:
    """Fit a reconstructed field to a training set."""
    if params.n_eigs > training.n_samples:
        raise ConfigError(
            f"resolution needs {params.n_eigs} eigenpairs but the data has {training.n_samples} samples"
        )
    t0 = time.perf_counter()
    basis = fit_diffusion_basis(training.points, epsilon, training.dim_manifold, params.n_eigs)
    return fit_with_basis(basis, training, params, normals=normals,
                          _t_basis=time.perf_counter() - t0)


def sample_normals(system, training: TrainingSet):
    """Unit normals of a builtin system at the training points, or ``None``."""
    if system is None:
        return None
    if system.dim_manifold != 1 and system.dim_ambient - system.dim_manifold != 1:
        return None
    return system.normal(system.angles_of(training.points))
