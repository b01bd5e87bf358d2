"""Reconstructed pushforward field on data space and its quality metrics."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diffusion import DiffusionBasis, markov_weights
from .errors import ConfigError, InvalidArgumentError, ParseError, SchemaError, UndefinedMetricError
from .frame import FrameSolution, ResolutionParams, SecTensors

__all__ = [
    "ReconstructedField",
    "FieldMetrics",
    "assemble_field",
    "evaluate",
    "compute_metrics",
    "metrics_from_values",
    "MODEL_SCHEMA",
    "save_model",
    "load_model",
    "write_quiver",
    "box_grid",
]

MODEL_SCHEMA = "sec-field/model-v1"


@dataclass(frozen=True, eq=False)
class ReconstructedField:
    """``y -> A @ varphi(y)`` with ``A`` the d x L2 evaluation matrix.

    The Nystrom sum and ``A`` are folded into one N x d matrix at construction,
    so a query costs one kernel row plus an N x d product.
    """

    basis: DiffusionBasis
    eval_matrix: np.ndarray
    params: ResolutionParams
    _folded: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.eval_matrix, dtype=float)
        if A.ndim != 2 or A.shape[1] != self.params.L2:
            raise ConfigError(f"evaluation matrix must have {self.params.L2} columns")
        if A.shape[0] != self.basis.points.shape[1]:
            raise ConfigError("evaluation matrix rows must match the ambient dimension")
        if not np.all(np.isfinite(A)):
            raise ConfigError("evaluation matrix has non-finite entries")
        A.setflags(write=False)
        object.__setattr__(self, "eval_matrix", A)
        L2 = self.params.L2
        scale = 1.0 / (self.basis.n_samples * self.basis.eigenvalues_markov[:L2])
        folded = (self.basis.eigenvectors[:, :L2] * scale) @ A.T
        folded.setflags(write=False)
        object.__setattr__(self, "_folded", folded)

    @property
    def dim(self) -> int:
        return self.eval_matrix.shape[0]

    def __call__(self, y):
        return evaluate(self, y)

    def at_samples(self) -> np.ndarray:
        """Field values at the training points from the stored eigenvectors."""
        return self.basis.eigenvectors[:, : self.params.L2] @ self.eval_matrix.T


@dataclass(frozen=True)
class FieldMetrics:
    r_squared: float
    max_pointwise_error: float
    mean_tangency_defect: float | None = None

    def to_dict(self) -> dict:
        return {
            "r_squared": self.r_squared,
            "max_pointwise_error": self.max_pointwise_error,
            "mean_tangency_defect": self.mean_tangency_defect,
        }


def assemble_field(basis: DiffusionBasis, tensors: SecTensors, solution: FrameSolution) -> ReconstructedField:
    """Collapse ``sum_{i,j,k} d_ijkl b_ij F_k`` into the d x L2 evaluation matrix."""
    p = solution.params
    d = tensors.d
    if d.shape[:2] != solution.b.shape or d.shape[2] < p.L1 or d.shape[3] < p.L2:
        raise ConfigError("frame solution and coefficient tensors disagree on resolution")
    if tensors.F_coeffs.shape[0] < p.L1:
        raise ConfigError("embedding coefficients do not cover L1")
    p.check_against(basis.n_eigs)
    t = np.tensordot(solution.b, d[:, :, : p.L1, : p.L2], axes=([0, 1], [0, 1]))  # (L1, L2)
    A = tensors.F_coeffs[: p.L1].T @ t
    return ReconstructedField(basis=basis, eval_matrix=A, params=p)


def evaluate(fld: ReconstructedField, y) -> np.ndarray:
    """Field value(s) at ``y``: a d-vector, or a Q x d array for Q queries."""
    single = np.ndim(y) == 1
    rho = markov_weights(fld.basis, y)
    out = rho @ fld._folded
    return out[0] if single else out


def compute_metrics(fld: ReconstructedField, points, arrows, normals=None) -> FieldMetrics:
    """R^2 (one minus the normalized residual), max error and tangency defect."""
    return metrics_from_values(evaluate(fld, np.asarray(points, dtype=float)), arrows, normals)


def metrics_from_values(pred, arrows, normals=None) -> FieldMetrics:
    """Metrics of predicted arrows ``pred`` against ``arrows`` (both N x d)."""
    pred = np.asarray(pred, dtype=float)
    arrows = np.asarray(arrows, dtype=float)
    if pred.shape != arrows.shape:
        raise InvalidArgumentError("predicted and true arrows differ in shape")
    total = float(np.sum(arrows**2))
    if total == 0:
        raise UndefinedMetricError("R^2 undefined: all true arrows are zero")
    resid = np.sum((arrows - pred) ** 2, axis=1)
    tangency = None
    if normals is not None:
        normals = np.asarray(normals, dtype=float)
        mag = np.linalg.norm(pred, axis=1)
        ok = mag >= 1e-8
        if np.any(ok):
            tangency = float(np.mean(np.abs(np.sum(pred[ok] * normals[ok], axis=1)) / mag[ok]))
    return FieldMetrics(
        r_squared=1.0 - float(np.sum(resid)) / total,
        max_pointwise_error=float(np.sqrt(resid.max())),
        mean_tangency_defect=tangency,
    )


# Persistence ---------------------------------------------------------------


def model_document(fld: ReconstructedField, solution: FrameSolution | None = None,
                   tensors: SecTensors | None = None, include_tensors: bool = False) -> dict:
    doc = {
        "schema": MODEL_SCHEMA,
        "params": fld.params.to_dict(),
        "eval_matrix": fld.eval_matrix.tolist(),
        "basis": fld.basis.truncated(fld.params.n_eigs).to_document(),
    }
    if solution is not None:
        doc["b"] = solution.b.tolist()
        doc["gram_rank"] = solution.gram_rank
        doc["gram_spectrum"] = solution.gram_spectrum.tolist()
    if tensors is not None:
        doc["F_coeffs"] = tensors.F_coeffs.tolist()
        doc["v_hat"] = tensors.v_hat.tolist()
        if include_tensors:
            doc["c"] = tensors.c.tolist()
            doc["g"] = tensors.g.tolist()
            doc["d"] = tensors.d.tolist()
            doc["gram"] = tensors.gram.tolist()
    return doc


def save_model(path, fld: ReconstructedField, solution=None, tensors=None, include_tensors=False) -> None:
    doc = model_document(fld, solution, tensors, include_tensors)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def field_from_document(doc: dict) -> ReconstructedField:
    if not isinstance(doc, dict) or doc.get("schema") != MODEL_SCHEMA:
        found = doc.get("schema") if isinstance(doc, dict) else None
        raise SchemaError(f"expected schema {MODEL_SCHEMA!r}, got {found!r}")
    try:
        params = ResolutionParams(**doc["params"])
        basis = DiffusionBasis.from_document(doc["basis"])
        return ReconstructedField(basis=basis, eval_matrix=doc["eval_matrix"], params=params)
    except KeyError as exc:
        raise SchemaError(f"model document lacks field {exc.args[0]!r}") from exc


def load_model(path) -> ReconstructedField:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return field_from_document(doc)


def box_grid(bounds, resolution) -> np.ndarray:
    """Regular grid over an axis-aligned box; ``bounds`` is a list of (lo, hi)."""
    axes = [np.linspace(lo, hi, int(n)) for (lo, hi), n in zip(bounds, resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def write_quiver(path, points, vhat, vtrue=None) -> None:
    points = np.asarray(points, dtype=float)
    vhat = np.asarray(vhat, dtype=float)
    if points.shape != vhat.shape:
        raise InvalidArgumentError("points and field values differ in shape")
    d = points.shape[1]
    header = [f"y_{i + 1}" for i in range(d)] + [f"vhat_{i + 1}" for i in range(d)]
    cols = [points, vhat]
    if vtrue is not None:
        header += [f"vtrue_{i + 1}" for i in range(d)]
        cols.append(np.asarray(vtrue, dtype=float))
    rows = np.hstack(cols)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows([repr(float(x)) for x in row] for row in rows)
