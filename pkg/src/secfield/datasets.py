"""Synthetic benchmark systems on the circle and the 2-torus.

Each system knows its embedding, the pushforward of its vector field and the
implicit equation of the embedded manifold, so the same objects serve as
training-data generators and as analytic oracles in tests.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, ParseError

__all__ = [
    "TrainingSet",
    "CircleField",
    "TorusField",
    "CircleSystem",
    "TorusSystem",
    "generate_circle",
    "generate_torus",
    "circle_analytic_basis",
    "read_training_set",
    "write_training_set",
    "parse_system",
]

FORMAT_TAG = "sec-field v1"


@dataclass(frozen=True)
class TrainingSet:
    """Embedded points ``y_n`` and pushforward arrows ``v_n`` (rows)."""

    points: np.ndarray
    arrows: np.ndarray
    dim_manifold: int

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        arrows = np.array(self.arrows, dtype=float)
        if points.ndim != 2 or arrows.ndim != 2:
            raise InvalidArgumentError("points and arrows must be 2-d arrays")
        if points.shape != arrows.shape:
            raise InvalidArgumentError(
                f"points {points.shape} and arrows {arrows.shape} differ in shape"
            )
        if points.shape[0] < 1:
            raise InvalidArgumentError("training set needs at least one sample")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(arrows))):
            raise InvalidArgumentError("training set contains non-finite entries")
        m = int(self.dim_manifold)
        if m < 1 or m > points.shape[1]:
            raise InvalidArgumentError(
                f"manifold dimension {m} must lie in [1, {points.shape[1]}]"
            )
        points.setflags(write=False)
        arrows.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "arrows", arrows)
        object.__setattr__(self, "dim_manifold", m)

    @property
    def n_samples(self) -> int:
        return self.points.shape[0]

    @property
    def dim_ambient(self) -> int:
        return self.points.shape[1]


class CircleField(enum.Enum):
    UNIFORM = "uniform"
    ARC = "arc"
    VARIABLE = "variable"


class TorusField(enum.Enum):
    RATIONAL = "rational"
    IRRATIONAL = "irrational"
    STEPANOFF = "stepanoff"


_CIRCLE_DEFAULT_C = {CircleField.UNIFORM: 0.0, CircleField.ARC: 1.5, CircleField.VARIABLE: 0.5}


@dataclass(frozen=True)
class CircleSystem:
    """Vector field ``h(theta) d/dtheta`` on the unit circle in R^2."""

    field_kind: CircleField = CircleField.UNIFORM
    c: float | None = None

    dim_manifold = 1
    dim_ambient = 2

    def __post_init__(self):
        kind = CircleField(self.field_kind)
        object.__setattr__(self, "field_kind", kind)
        c = _CIRCLE_DEFAULT_C[kind] if self.c is None else float(self.c)
        object.__setattr__(self, "c", c)
        if kind is CircleField.ARC and not c > 1:
            raise InvalidArgumentError("connecting-arc field requires c > 1")
        if kind is CircleField.VARIABLE and c == 0:
            raise InvalidArgumentError("variable-speed field requires c != 0")

    @property
    def name(self) -> str:
        return f"circle:{self.field_kind.value}"

    def h(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.field_kind is CircleField.UNIFORM:
            return np.ones_like(theta)
        if self.field_kind is CircleField.ARC:
            return 1.0 + self.c * np.cos(theta)
        return np.exp(self.c * np.cos(theta))

    def angle_rate(self, theta):
        return self.h(theta)

    def embed(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    def pushforward(self, theta):
        # counterclockwise for h > 0
        theta = np.asarray(theta, dtype=float)
        h = self.h(theta)
        return np.stack([-h * np.sin(theta), h * np.cos(theta)], axis=-1)

    def normal(self, theta):
        return self.embed(theta)

    def angles_of(self, points):
        points = np.asarray(points, dtype=float)
        return np.mod(np.arctan2(points[..., 1], points[..., 0]), 2 * np.pi)

    def manifold_distance(self, points):
        """Euclidean distance from each point to the unit circle."""
        points = np.asarray(points, dtype=float)
        return np.abs(np.linalg.norm(points, axis=-1) - 1.0)

    def fixed_points(self):
        if self.field_kind is not CircleField.ARC:
            return ()
        root = math.acos(-1.0 / self.c)
        return (root, 2 * math.pi - root)


@dataclass(frozen=True)
class TorusSystem:
    """Vector field ``h1 d/dtheta1 + h2 d/dtheta2`` on a torus of revolution in R^3.

    ``a`` is the radius of the latitude circle (angle ``theta1``) and ``b``
    the radius of the meridian circle (angle ``theta2``).
    """

    field_kind: TorusField = TorusField.RATIONAL
    a: float = 5.0 / 3.0
    b: float = 3.0 / 5.0
    alpha: float = math.sqrt(20.0)

    dim_manifold = 2
    dim_ambient = 3

    def __post_init__(self):
        kind = TorusField(self.field_kind)
        object.__setattr__(self, "field_kind", kind)
        if not self.a > self.b > 0:
            raise InvalidArgumentError("torus radii must satisfy a > b > 0")
        if kind is not TorusField.RATIONAL and self.alpha == 0:
            raise InvalidArgumentError(f"{kind.value} field requires alpha != 0")

    @property
    def name(self) -> str:
        return f"torus:{self.field_kind.value}"

    def angle_rate(self, theta):
        """Return ``(h1, h2)`` stacked on the last axis."""
        theta = np.asarray(theta, dtype=float)
        t1, t2 = theta[..., 0], theta[..., 1]
        if self.field_kind is TorusField.RATIONAL:
            h1 = np.ones_like(t1)
            h2 = np.ones_like(t1)
        elif self.field_kind is TorusField.IRRATIONAL:
            h1 = np.ones_like(t1)
            h2 = np.full_like(t1, self.alpha)
        else:
            h2 = self.alpha * (1.0 - np.cos(t1 - t2))
            h1 = h2 + (1.0 - self.alpha) * (1.0 - np.cos(t2))
        return np.stack([h1, h2], axis=-1)

    def embed(self, theta):
        theta = np.asarray(theta, dtype=float)
        t1, t2 = theta[..., 0], theta[..., 1]
        rho = self.a + self.b * np.cos(t2)
        return np.stack([rho * np.cos(t1), rho * np.sin(t1), self.b * np.sin(t2)], axis=-1)

    def tangent_frame(self, theta):
        """Coordinate tangent vectors dF/dtheta1 and dF/dtheta2."""
        theta = np.asarray(theta, dtype=float)
        t1, t2 = theta[..., 0], theta[..., 1]
        rho = self.a + self.b * np.cos(t2)
        e1 = np.stack([-rho * np.sin(t1), rho * np.cos(t1), np.zeros_like(t1)], axis=-1)
        e2 = np.stack(
            [
                -self.b * np.sin(t2) * np.cos(t1),
                -self.b * np.sin(t2) * np.sin(t1),
                self.b * np.cos(t2),
            ],
            axis=-1,
        )
        return e1, e2

    def pushforward(self, theta):
        h = self.angle_rate(theta)
        e1, e2 = self.tangent_frame(theta)
        return h[..., 0:1] * e1 + h[..., 1:2] * e2

    def normal(self, theta):
        theta = np.asarray(theta, dtype=float)
        t1, t2 = theta[..., 0], theta[..., 1]
        return np.stack(
            [np.cos(t2) * np.cos(t1), np.cos(t2) * np.sin(t1), np.sin(t2)], axis=-1
        )

    def angles_of(self, points):
        points = np.asarray(points, dtype=float)
        t1 = np.arctan2(points[..., 1], points[..., 0])
        rho = np.hypot(points[..., 0], points[..., 1])
        t2 = np.arctan2(points[..., 2], rho - self.a)
        return np.mod(np.stack([t1, t2], axis=-1), 2 * np.pi)

    def manifold_distance(self, points):
        """Euclidean distance from each point to the embedded torus surface."""
        points = np.asarray(points, dtype=float)
        rho = np.hypot(points[..., 0], points[..., 1])
        return np.abs(np.hypot(rho - self.a, points[..., 2]) - self.b)

    def volume(self) -> float:
        return 4 * math.pi**2 * self.a * self.b


def _check_count(name, n):
    if int(n) != n or n < 3:
        raise InvalidArgumentError(f"{name} must be an integer >= 3, got {n}")
    return int(n)


def generate_circle(system: CircleSystem, n: int) -> TrainingSet:
    """Sample ``n`` equispaced angles on the unit circle."""
    n = _check_count("n", n)
    theta = 2 * np.pi * np.arange(n) / n
    return TrainingSet(system.embed(theta), system.pushforward(theta), dim_manifold=1)


def torus_grid(n1: int, n2: int) -> np.ndarray:
    """Periodic (theta1, theta2) grid, theta1 varying slowest; endpoint 2*pi excluded."""
    t1 = 2 * np.pi * np.arange(n1) / n1
    t2 = 2 * np.pi * np.arange(n2) / n2
    g1, g2 = np.meshgrid(t1, t2, indexing="ij")
    return np.stack([g1.ravel(), g2.ravel()], axis=-1)


def generate_torus(system: TorusSystem, n1: int, n2: int) -> TrainingSet:
    n1 = _check_count("n1", n1)
    n2 = _check_count("n2", n2)
    theta = torus_grid(n1, n2)
    return TrainingSet(system.embed(theta), system.pushforward(theta), dim_manifold=2)


def circle_analytic_basis(j: int, theta):
    """Closed-form Laplace-Beltrami eigenpair ``j`` of the unit circle.

    Returns ``(eigenvalue, value)`` where ``value`` has the shape of ``theta``.
    Odd ``j`` are sines and even ``j`` cosines, so the spectrum reads
    0, 1, 1, 4, 4, 9, 9, ...
    """
    if int(j) != j or j < 0:
        raise InvalidArgumentError(f"eigenfunction index must be >= 0, got {j}")
    j = int(j)
    theta = np.asarray(theta, dtype=float)
    if j == 0:
        return 0.0, np.full_like(theta, 1.0 / math.sqrt(2 * math.pi))
    freq = (j + 1) // 2
    if j % 2:
        value = np.sin(freq * theta) / math.sqrt(math.pi)
    else:
        value = np.cos(freq * theta) / math.sqrt(math.pi)
    return float(freq**2), value


def parse_system(spec: str):
    """Build a system from ``circle:<kind>`` or ``torus:<kind>``."""
    family, _, kind = spec.partition(":")
    try:
        if family == "circle":
            return CircleSystem(CircleField(kind))
        if family == "torus":
            return TorusSystem(TorusField(kind))
    except ValueError:
        pass
    choices = [f"circle:{k.value}" for k in CircleField] + [
        f"torus:{k.value}" for k in TorusField
    ]
    raise InvalidArgumentError(
        f"unknown system {spec!r}; expected one of {', '.join(choices)}"
    )


# Training-set CSV ----------------------------------------------------------


def write_training_set(ts: TrainingSet, path) -> None:
    """Write ``ts`` as CSV; floats use ``repr`` so reading back is bit-exact."""
    path = Path(path)
    d, n = ts.dim_ambient, ts.n_samples
    lines = [f"# {FORMAT_TAG}, d={d}, m={ts.dim_manifold}, N={n}"]
    rows = np.hstack([ts.points, ts.arrows])
    lines.extend(",".join(repr(float(x)) for x in row) for row in rows)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def _parse_header(line):
    if not line.startswith("#"):
        raise ParseError("missing '# sec-field v1' header", line=1)
    parts = [p.strip() for p in line[1:].split(",")]
    if not parts or parts[0] != FORMAT_TAG:
        raise ParseError(f"unsupported format tag {parts[0] if parts else ''!r}", line=1)
    fields = {}
    for part in parts[1:]:
        key, eq, value = part.partition("=")
        if not eq:
            raise ParseError(f"malformed header field {part!r}", line=1)
        try:
            fields[key.strip()] = int(value)
        except ValueError:
            raise ParseError(f"header field {key.strip()!r} is not an integer", line=1)
    missing = {"d", "m", "N"} - fields.keys()
    if missing:
        raise ParseError(f"header lacks {', '.join(sorted(missing))}", line=1)
    if fields["d"] < 1 or fields["N"] < 1 or not 1 <= fields["m"] <= fields["d"]:
        raise ParseError("header sizes violate d >= 1, N >= 1, 1 <= m <= d", line=1)
    return fields["d"], fields["m"], fields["N"]


def read_training_set(path) -> TrainingSet:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("empty file", line=1)
    d, m, n = _parse_header(lines[0].strip())
    body = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    if len(body) != n:
        raise ParseError(f"header declares N={n} rows but found {len(body)}", line=1)
    data = np.empty((n, 2 * d))
    for row, (lineno, ln) in enumerate(body):
        cells = ln.split(",")
        if len(cells) != 2 * d:
            raise ParseError(
                f"expected {2 * d} values (d point + d arrow coordinates), got {len(cells)}",
                line=lineno,
            )
        try:
            values = [float(c) for c in cells]
        except ValueError:
            raise ParseError("non-numeric value", line=lineno)
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", line=lineno)
        data[row] = values
    return TrainingSet(data[:, :d], data[:, d:], dim_manifold=m)
