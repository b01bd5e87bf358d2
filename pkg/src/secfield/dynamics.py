"""Orbits of true and reconstructed fields, orbit comparison, fixed points."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergenceError,
    InvalidArgumentError,
    NonConvergenceError,
    SingularJacobianError,
)

__all__ = [
    "Orbit",
    "OrbitComparison",
    "FixedPoint",
    "integrate",
    "true_orbit",
    "compare_orbits",
    "newton_fixed_point",
    "write_orbit",
    "read_orbit",
    "write_comparison",
]

DIVERGENCE_NORM = 1e6


@dataclass(frozen=True, eq=False)
class Orbit:
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        states = np.array(self.states, dtype=float)
        if states.ndim != 2 or times.shape != (states.shape[0],):
            raise InvalidArgumentError("orbit needs T times and a T x d state matrix")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise InvalidArgumentError("orbit times must be strictly increasing")
        if not np.all(np.isfinite(states)):
            raise InvalidArgumentError("orbit states must be finite")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True, eq=False)
class OrbitComparison:
    times: np.ndarray
    error_series: np.ndarray
    max_error: float
    manifold_defect_series: np.ndarray | None = None

    def max_error_until(self, t_star: float) -> float:
        mask = self.times <= t_star + 1e-12
        return float(np.max(self.error_series[mask]))


@dataclass(frozen=True)
class FixedPoint:
    point: np.ndarray
    residual: float
    iterations: int


def _time_grid(dt, t_end) -> np.ndarray:
    """``0, dt, 2 dt, ...`` up to ``t_end``; a shorter last step lands exactly on ``t_end``."""
    if not dt > 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt}")
    if not (np.isfinite(t_end) and t_end >= dt):
        raise InvalidArgumentError(f"t_end must be at least dt, got {t_end}")
    n = int(np.floor(t_end / dt + 1e-9))
    times = dt * np.arange(n + 1)
    if t_end - times[-1] > 1e-9 * max(1.0, t_end):
        times = np.append(times, t_end)
    else:
        times[-1] = t_end  # absorb rounding in n * dt
    return times


def _rk4(rate, y0, times):
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("initial condition must be finite")
    states = np.empty((times.size, y.size))
    states[0] = y
    for step in range(times.size - 1):
        h = times[step + 1] - times[step]
        k1 = rate(y)
        k2 = rate(y + 0.5 * h * k1)
        k3 = rate(y + 0.5 * h * k2)
        k4 = rate(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) > DIVERGENCE_NORM:
            t = float(times[step + 1])
            raise DivergenceError(f"orbit diverged at t = {t:.6g}", time=t)
        states[step + 1] = y
    return states


def integrate(field_eval, y0, dt: float, t_end: float) -> Orbit:
    """Classical fixed-step RK4 sampled at ``0, dt, ..., t_end``."""
    times = _time_grid(dt, t_end)
    states = _rk4(lambda y: np.asarray(field_eval(y), dtype=float), y0, times)
    return Orbit(times=times, states=states)


def true_orbit(system, theta0, dt: float, t_end: float) -> Orbit:
    """Integrate the angle-coordinate ODE and map the angles through the embedding."""
    times = _time_grid(dt, t_end)
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    if theta0.size != system.dim_manifold:
        raise InvalidArgumentError(f"{system.name} needs {system.dim_manifold} initial angle(s)")
    if system.dim_manifold == 1:
        angles = _rk4(lambda th: np.atleast_1d(system.angle_rate(th[0])), theta0, times)[:, 0]
    else:
        angles = _rk4(system.angle_rate, theta0, times)
    return Orbit(times=times, states=system.embed(angles))


def compare_orbits(a: Orbit, b: Orbit, system=None) -> OrbitComparison:
    if a.times.shape != b.times.shape or np.max(np.abs(a.times - b.times), initial=0.0) > 1e-12:
        raise InvalidArgumentError("orbits live on different time grids")
    if a.states.shape != b.states.shape:
        raise InvalidArgumentError("orbits have different state dimensions")
    err = np.linalg.norm(a.states - b.states, axis=1)
    defect = system.manifold_distance(b.states) if system is not None else None
    return OrbitComparison(times=a.times, error_series=err, max_error=float(err.max()),
                           manifold_defect_series=defect)


def _jacobian(f, y, fy):
    h = 1e-5 * max(1.0, float(np.linalg.norm(y)))
    jac = np.empty((fy.size, y.size))
    for k in range(y.size):
        step = np.zeros_like(y)
        step[k] = h
        jac[:, k] = (f(y + step) - f(y - step)) / (2 * h)
    return jac


def newton_fixed_point(field_eval, y_init, tol: float = 1e-8, max_iter: int = 50) -> FixedPoint:
    """Newton's method on ``V(y) = 0`` with a central-difference Jacobian."""
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    y = np.array(y_init, dtype=float)
    fy = np.asarray(field_eval(y), dtype=float)
    best, best_res = y.copy(), float(np.linalg.norm(fy))
    for it in range(max_iter + 1):
        res = float(np.linalg.norm(fy))
        if res < best_res:
            best, best_res = y.copy(), res
        if res < tol:
            return FixedPoint(point=y, residual=res, iterations=it)
        if it == max_iter:
            break
        jac = _jacobian(field_eval, y, fy)
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularJacobianError(f"Jacobian condition number {cond:.3g} at iteration {it}")
        y = y - np.linalg.solve(jac, fy)
        fy = np.asarray(field_eval(y), dtype=float)
    raise NonConvergenceError(
        f"Newton did not reach |V| < {tol:g} in {max_iter} iterations (best {best_res:.3g})",
        best=best,
    )


# CSV export ----------------------------------------------------------------


def write_orbit(path, orbit: Orbit) -> None:
    d = orbit.states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"y_{i + 1}" for i in range(d)])
        for t, s in zip(orbit.times, orbit.states):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in s])


def read_orbit(path) -> Orbit:
    from .errors import ParseError

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "t":
        raise ParseError("orbit file must start with a 't,y_1,...' header", line=1)
    width = len(rows[0])
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} columns, got {len(row)}", line=lineno)
        try:
            data.append([float(x) for x in row])
        except ValueError:
            raise ParseError("non-numeric value", line=lineno)
    if not data:
        raise ParseError("orbit file has no samples", line=2)
    arr = np.array(data)
    return Orbit(times=arr[:, 0], states=arr[:, 1:])


def write_comparison(path, comparison: OrbitComparison) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        has_defect = comparison.manifold_defect_series is not None
        w.writerow(["t", "err"] + (["manifold_defect"] if has_defect else []))
        for n, t in enumerate(comparison.times):
            row = [repr(float(t)), repr(float(comparison.error_series[n]))]
            if has_defect:
                row.append(repr(float(comparison.manifold_defect_series[n])))
            w.writerow(row)
