"""Shared fixtures: reference-parameter fits are expensive, so they are cached per session."""

from __future__ import annotations

import math
import time
from types import SimpleNamespace

import numpy as np
import pytest

from secfield.datasets import (
    CircleField,
    CircleSystem,
    TorusField,
    TorusSystem,
    generate_circle,
    generate_torus,
)
from secfield.diffusion import fit_diffusion_basis
from secfield.frame import ResolutionParams
from secfield.pipeline import fit, fit_with_basis, sample_normals

CIRCLE_N = 800
CIRCLE_EPS = 0.2
TORUS_DESK_N = 60
TORUS_DESK_EPS = 0.0966 * 150 / TORUS_DESK_N


@pytest.fixture(scope="session")
def circle_params():
    return ResolutionParams.circle_defaults()


@pytest.fixture(scope="session")
def circle_fits(circle_params):
    """Full fits of the three circle systems at the reference parameters."""
    out = {}
    for kind in CircleField:
        system = CircleSystem(kind)
        ts = generate_circle(system, CIRCLE_N)
        res = fit(ts, CIRCLE_EPS, circle_params, normals=sample_normals(system, ts))
        out[kind] = SimpleNamespace(system=system, training=ts, result=res)
    return out


@pytest.fixture(scope="session")
def circle_uniform(circle_fits):
    return circle_fits[CircleField.UNIFORM]


@pytest.fixture(scope="session")
def circle_arc(circle_fits):
    return circle_fits[CircleField.ARC]


@pytest.fixture(scope="session")
def circle200_basis():
    """Small circle basis (N=200) used by the coefficient oracles."""
    ts = generate_circle(CircleSystem(), 200)
    return fit_diffusion_basis(ts.points, CIRCLE_EPS, 1, 40)


class _TorusCache:
    """Desk-scale torus fits, computed on first use.

    Only the field, metrics and volume are kept: the coefficient tensor of a
    torus fit is several hundred megabytes.
    """

    def __init__(self):
        self._fits = {}
        self._basis = None
        self.basis_seconds = None

    def basis(self, ts):
        # the sample points, hence the basis, are shared by every torus field
        if self._basis is None:
            t0 = time.perf_counter()
            self._basis = fit_diffusion_basis(ts.points, TORUS_DESK_EPS, 2,
                                              ResolutionParams.torus_defaults().n_eigs)
            self.basis_seconds = time.perf_counter() - t0
        return self._basis

    def __call__(self, kind: TorusField):
        if kind not in self._fits:
            system = TorusSystem(kind)
            ts = generate_torus(system, TORUS_DESK_N, TORUS_DESK_N)
            res = fit_with_basis(self.basis(ts), ts, ResolutionParams.torus_defaults(),
                                 normals=sample_normals(system, ts))
            self._fits[kind] = SimpleNamespace(
                system=system,
                training=ts,
                field=res.field,
                metrics=res.metrics,
                volume=res.basis.volume,
                gram_rank=res.solution.gram_rank,
            )
            del res
        return self._fits[kind]


@pytest.fixture(scope="session")
def torus_desk():
    return _TorusCache()


def angle_of(y) -> float:
    return float(np.mod(math.atan2(y[1], y[0]), 2 * math.pi))
