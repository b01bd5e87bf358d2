"""Command-line entry point: ``secfield <verb> ...``.

Verbs: gen, fit, eval, orbit, compare, fixedpoint, sweep, reproduce.
Exit codes: 0 success, 2 usage/config error, 3 numeric error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import datetime
import itertools
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import (
    CircleSystem,
    TorusSystem,
    generate_circle,
    generate_torus,
    parse_system,
    read_training_set,
    write_training_set,
)
from .diffusion import fit_diffusion_basis
from .dynamics import (
    compare_orbits,
    integrate,
    newton_fixed_point,
    read_orbit,
    true_orbit,
    write_comparison,
    write_orbit,
)
from .errors import ConfigError, InvalidArgumentError, ParseError, SecFieldError
from .field import box_grid, compute_metrics, evaluate, load_model, save_model, write_quiver
from .frame import ResolutionParams
from .pipeline import fit, fit_with_basis, sample_normals

log = logging.getLogger("secfield")

DEFAULT_EPSILON = {"circle": 0.2, "torus": 0.0966}
TORUS_FULL_GRID = 150
TORUS_DESK_GRID = 60


@dataclass
class ExperimentConfig:
    dataset: str | dict | None = None
    kernel: dict = field(default_factory=dict)
    resolution: dict = field(default_factory=dict)
    seed: int = 0
    outputs: str | None = None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc.msg}", line=exc.lineno) from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(raw) - {"dataset", "kernel", "resolution", "seed", "outputs"}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**raw)

    def epsilon(self, family: str | None) -> float:
        eps = self.kernel.get("epsilon")
        if eps is None:
            if family not in DEFAULT_EPSILON:
                raise ConfigError("kernel.epsilon is required for file datasets")
            eps = DEFAULT_EPSILON[family]
        eps = float(eps)
        if not (math.isfinite(eps) and eps > 0):
            raise ConfigError(f"epsilon must be positive, got {eps}")
        return eps

    def params(self, family: str | None) -> ResolutionParams:
        if family == "torus":
            base = ResolutionParams.torus_defaults().to_dict()
        else:
            base = ResolutionParams.circle_defaults().to_dict()
        unknown = set(self.resolution) - set(base)
        if unknown:
            raise ConfigError(f"unknown resolution keys: {', '.join(sorted(unknown))}")
        base.update({k: v for k, v in self.resolution.items() if v is not None})
        return ResolutionParams(**base)


# Helpers -------------------------------------------------------------------


def _floats(text: str, name: str) -> np.ndarray:
    try:
        values = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise InvalidArgumentError(f"{name} must be comma-separated numbers, got {text!r}")
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError(f"{name} must be finite")
    return values


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _out_path(args, value, default) -> Path:
    path = Path(value) if value else Path(args.out) / default
    if not path.is_absolute() and value is None:
        path = Path(args.out) / default
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _resolve_dataset(args, cfg: ExperimentConfig):
    """Return ``(training_set, system_or_None, family_or_None)``."""
    data = getattr(args, "data", None)
    system_spec = getattr(args, "system", None)
    if data is None and system_spec is None:
        ds = cfg.dataset
        if isinstance(ds, str):
            data = ds
        elif isinstance(ds, dict):
            system_spec = ds.get("system")
            for key in ("n", "n1", "n2"):
                if getattr(args, key, None) is None and ds.get(key) is not None:
                    setattr(args, key, ds[key])
        if data is None and system_spec is None:
            raise ConfigError("no dataset: pass --data FILE or --system SPEC")
    if data is not None:
        ts = read_training_set(data)
        return ts, None, None
    system = parse_system(system_spec)
    if isinstance(system, CircleSystem):
        ts = generate_circle(system, args.n if args.n is not None else 800)
        return ts, system, "circle"
    n1 = args.n1 if args.n1 is not None else TORUS_DESK_GRID
    n2 = args.n2 if args.n2 is not None else n1
    return generate_torus(system, n1, n2), system, "torus"


def _resolution_overrides(args, cfg: ExperimentConfig) -> ExperimentConfig:
    res = dict(cfg.resolution)
    for key, attr in (("J", "J"), ("L", "L"), ("L1", "L1"), ("L2", "L2"), ("L_D", "LD"), ("eta", "eta")):
        value = getattr(args, attr, None)
        if value is not None:
            res[key] = value
    kernel = dict(cfg.kernel)
    if getattr(args, "epsilon", None) is not None:
        kernel["epsilon"] = args.epsilon
    return replace(cfg, resolution=res, kernel=kernel)


def _embedding_for(dim: int, spec: str | None):
    if spec:
        return parse_system(spec)
    if dim == 2:
        return CircleSystem()
    if dim == 3:
        return TorusSystem()
    raise InvalidArgumentError("--theta0 needs --system for non-builtin dimensions")


def _embed_angles(system, text: str, name: str) -> np.ndarray:
    angles = _floats(text, name)
    if angles.size != system.dim_manifold:
        raise InvalidArgumentError(f"{name} needs {system.dim_manifold} angle(s) for {system.name}")
    return np.asarray(system.embed(angles if angles.size > 1 else float(angles[0])), dtype=float)


def _metrics_text(wall_times: dict, body: dict) -> str:
    # wall times vary run to run; keep them on the first line only
    rest = json.dumps(body, indent=2, sort_keys=True)
    return '{"wall_times": ' + json.dumps(wall_times, sort_keys=True) + ",\n" + rest[2:] + "\n"


# Commands ------------------------------------------------------------------


def cmd_gen(args, cfg):
    system = parse_system(args.system)
    if isinstance(system, CircleSystem):
        if args.n is None:
            raise InvalidArgumentError("circle systems need --n")
        ts = generate_circle(system, args.n)
    else:
        if args.n1 is None:
            raise InvalidArgumentError("torus systems need --n1 (and optionally --n2)")
        ts = generate_torus(system, args.n1, args.n2 if args.n2 is not None else args.n1)
    path = _out_path(args, args.output, f"{system.name.replace(':', '_')}.csv")
    write_training_set(ts, path)
    print(f"wrote {ts.n_samples} samples to {path}")
    return 0


def cmd_fit(args, cfg):
    cfg = _resolution_overrides(args, cfg)
    ts, system, family = _resolve_dataset(args, cfg)
    eps = cfg.epsilon(family)
    params = cfg.params(family)
    if params.n_eigs > ts.n_samples:
        raise ConfigError(f"resolution needs {params.n_eigs} eigenpairs but only {ts.n_samples} samples")
    result = fit(ts, eps, params, normals=sample_normals(system, ts))
    stem = args.name or (system.name.replace(":", "_") if system else Path(args.data).stem)
    model_path = _out_path(args, args.model, f"{stem}.model.json")
    metrics_path = model_path.with_name(model_path.name.replace(".model.json", "") + ".metrics.json")
    if metrics_path == model_path:
        metrics_path = model_path.with_suffix(".metrics.json")
    save_model(model_path, result.field, result.solution, result.tensors)
    _atomic_write_text(metrics_path, _metrics_text(result.wall_times, result.summary()))
    print(f"R^2 = {result.metrics.r_squared:.6f}  gram_rank = {result.solution.gram_rank}  "
          f"volume = {result.basis.volume:.6g}")
    print(f"model: {model_path}\nmetrics: {metrics_path}")
    return 0


def _read_points(path) -> np.ndarray:
    text = Path(path).read_text()
    if text.startswith("#"):
        return np.asarray(read_training_set(path).points)
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            if not rows and lineno == 1:
                continue  # header row
            raise ParseError("non-numeric value", line=lineno)
    if not rows:
        raise InvalidArgumentError(f"no points in {path}")
    if len({len(r) for r in rows}) != 1:
        raise ParseError("ragged rows in point file")
    return np.array(rows)


def cmd_eval(args, cfg):
    fld = load_model(args.model)
    vtrue = None
    if args.training:
        ts = read_training_set(args.training)
        pts, vtrue = np.asarray(ts.points), np.asarray(ts.arrows)
    elif args.points:
        pts = _read_points(args.points)
    elif args.grid:
        bounds = []
        for part in args.grid.split(","):
            lo, sep, hi = part.partition(":")
            if not sep:
                raise InvalidArgumentError("--grid expects lo:hi per axis, comma separated")
            bounds.append((float(lo), float(hi)))
        res = [int(x) for x in args.resolution.split(",")] if args.resolution else [21] * len(bounds)
        if len(res) == 1:
            res = res * len(bounds)
        if len(bounds) != fld.dim or len(res) != fld.dim or min(res) < 1:
            raise InvalidArgumentError(f"grid needs {fld.dim} axes with positive resolution")
        pts = box_grid(bounds, res)
    else:
        raise InvalidArgumentError("eval needs --points, --grid or --training")
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidArgumentError("empty point list")
    if pts.shape[1] != fld.dim:
        raise InvalidArgumentError(f"points have {pts.shape[1]} columns, model expects {fld.dim}")
    values = evaluate(fld, pts)
    path = _out_path(args, args.output, "quiver.csv")
    write_quiver(path, pts, values, vtrue)
    if vtrue is not None:
        m = compute_metrics(fld, pts, vtrue)
        print(f"R^2 = {m.r_squared!r}")
    print(f"wrote {pts.shape[0]} rows to {path}")
    return 0


def cmd_orbit(args, cfg):
    if (args.model is None) == (args.true is None):
        raise InvalidArgumentError("orbit needs exactly one of --model or --true")
    if args.true is not None:
        system = parse_system(args.true)
        if args.theta0 is None:
            raise InvalidArgumentError("--true orbits need --theta0")
        orbit = true_orbit(system, _floats(args.theta0, "--theta0"), args.dt, args.t)
    else:
        fld = load_model(args.model)
        if args.y0 is not None:
            y0 = _floats(args.y0, "--y0")
        elif args.theta0 is not None:
            y0 = _embed_angles(_embedding_for(fld.dim, args.system), args.theta0, "--theta0")
        else:
            raise InvalidArgumentError("model orbits need --y0 or --theta0")
        if y0.shape != (fld.dim,):
            raise InvalidArgumentError(f"initial condition must have {fld.dim} coordinates")
        orbit = integrate(fld, y0, args.dt, args.t)
    path = _out_path(args, args.output, "orbit.csv")
    write_orbit(path, orbit)
    print(f"wrote {orbit.times.size} states to {path}")
    return 0


def cmd_compare(args, cfg):
    a, b = read_orbit(args.a), read_orbit(args.b)
    system = parse_system(args.system) if args.system else None
    cmp = compare_orbits(a, b, system)
    path = _out_path(args, args.output, "comparison.csv")
    write_comparison(path, cmp)
    print(f"max error = {cmp.max_error:.6g}")
    if args.until is not None:
        print(f"max error on [0, {args.until:g}] = {cmp.max_error_until(args.until):.6g}")
    return 0


def cmd_fixedpoint(args, cfg):
    fld = load_model(args.model)
    if args.init is not None:
        y0 = _floats(args.init, "--init")
    elif args.init_angle is not None:
        y0 = _embed_angles(_embedding_for(fld.dim, args.system), args.init_angle, "--init-angle")
    else:
        raise InvalidArgumentError("fixedpoint needs --init or --init-angle")
    fp = newton_fixed_point(fld, y0, tol=args.tol, max_iter=args.max_iter)
    report = {"point": fp.point.tolist(), "residual": fp.residual, "iterations": fp.iterations}
    if fld.dim == 2:
        report["angle"] = float(np.mod(np.arctan2(fp.point[1], fp.point[0]), 2 * np.pi))
    text = json.dumps(report, indent=2) + "\n"
    if args.output:
        _atomic_write_text(_out_path(args, args.output, "fixedpoint.json"), text)
    sys.stdout.write(text)
    return 0


def _parse_sweep_grid(text: str) -> dict:
    grid = {}
    for item in text.split():
        key, sep, values = item.partition("=")
        if not sep or key not in {"J", "L", "L1", "L2", "L_D", "eta"}:
            raise InvalidArgumentError(f"bad sweep axis {item!r}; use e.g. 'J=5,10 eta=0.01,0.001'")
        cast = float if key == "eta" else int
        grid[key] = [cast(v) for v in values.split(",")]
    if not grid:
        raise InvalidArgumentError("empty sweep grid")
    return grid


def cmd_sweep(args, cfg):
    cfg = _resolution_overrides(args, cfg)
    ts, system, family = _resolve_dataset(args, cfg)
    eps = cfg.epsilon(family)
    base = cfg.params(family).to_dict()
    grid = _parse_sweep_grid(args.grid)
    keys = list(grid)
    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        values = dict(base, **dict(zip(keys, combo)))
        cells.append(ResolutionParams(**values))  # validates every cell up front
    n_eigs = max(p.n_eigs for p in cells)
    if n_eigs > ts.n_samples:
        raise ConfigError(f"sweep needs {n_eigs} eigenpairs but only {ts.n_samples} samples")
    basis = fit_diffusion_basis(ts.points, eps, ts.dim_manifold, n_eigs)
    normals = sample_normals(system, ts)
    lines = ["J,L,L1,L2,L_D,eta,r_squared,gram_rank,status"]
    for p in cells:
        try:
            res = fit_with_basis(basis, ts, p, normals=normals)
            lines.append(f"{p.J},{p.L},{p.L1},{p.L2},{p.L_D},{p.eta!r},"
                         f"{res.metrics.r_squared!r},{res.solution.gram_rank},ok")
        except ConfigError as exc:
            lines.append(f"{p.J},{p.L},{p.L1},{p.L2},{p.L_D},{p.eta!r},,,{str(exc).replace(',', ';')}")
    path = _out_path(args, args.output, "sweep.csv")
    _atomic_write_text(path, "\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


# Reproduction presets ------------------------------------------------------

PRESETS = {
    "circle-v1": ("circle:uniform", 0.999731, 0.0),
    "circle-v2": ("circle:arc", 0.999220, 0.0),
    "circle-v3": ("circle:variable", 0.999632, 0.0),
    "torus-v1": ("torus:rational", 0.999975, (0.0, 0.0)),
    "torus-v2": ("torus:irrational", 0.999945, (0.0, 0.0)),
    "torus-v3": ("torus:stepanoff", 0.999855, (math.pi + 0.3, math.pi + 0.5)),
}


def preset_setup(preset: str, scale: str = "desk"):
    """Training set, system, epsilon, params and thresholds of a named preset."""
    if preset not in PRESETS:
        raise InvalidArgumentError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    spec, published_r2, theta0 = PRESETS[preset]
    system = parse_system(spec)
    if isinstance(system, CircleSystem):
        ts = generate_circle(system, 800)
        return dict(system=system, training=ts, epsilon=0.2, params=ResolutionParams.circle_defaults(),
                    published_r2=published_r2, threshold=0.995, theta0=theta0, t_end=20.0,
                    note="reference parameters")
    n = TORUS_FULL_GRID if scale == "full" else TORUS_DESK_GRID
    eps = DEFAULT_EPSILON["torus"] * TORUS_FULL_GRID / n
    note = (f"{n}x{n} grid, epsilon = 0.0966 * {TORUS_FULL_GRID}/{n} = {eps:.6g}"
            + (" (desk-scale substitution for the 150x150 experiment)" if scale != "full" else ""))
    return dict(system=system, training=generate_torus(system, n, n), epsilon=eps,
                params=ResolutionParams.torus_defaults(), published_r2=published_r2, threshold=0.99,
                theta0=np.array(theta0), t_end=10.0, note=note)


def cmd_reproduce(args, cfg):
    setup = preset_setup(args.preset, args.scale)
    system, ts = setup["system"], setup["training"]
    outdir = Path(args.out) / f"{args.preset}-{args.scale if ts.dim_ambient == 3 else 'full'}"
    result = fit(ts, setup["epsilon"], setup["params"], normals=sample_normals(system, ts))
    r2 = result.metrics.r_squared
    dt = args.dt
    t_end = args.t if args.t is not None else setup["t_end"]
    y0 = system.embed(setup["theta0"])
    truth = true_orbit(system, setup["theta0"], dt, t_end)
    model_orbit = integrate(result.field, y0, dt, t_end)
    cmp = compare_orbits(truth, model_orbit, system)

    outdir.mkdir(parents=True, exist_ok=True)
    save_model(outdir / "model.json", result.field, result.solution, result.tensors)
    _atomic_write_text(outdir / "metrics.json", _metrics_text(result.wall_times, result.summary()))
    write_orbit(outdir / "orbit_true.csv", truth)
    write_orbit(outdir / "orbit_model.csv", model_orbit)
    write_comparison(outdir / "comparison.csv", cmp)
    write_quiver(outdir / "quiver.csv", ts.points, result.field.at_samples(), ts.arrows)

    ok = r2 >= setup["threshold"]
    stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    lines = [
        f"<!-- generated {stamp} by secfield {__version__} -->",
        f"# {args.preset}",
        "",
        f"- system: `{system.name}`, N = {ts.n_samples}, {setup['note']}",
        f"- epsilon = {setup['epsilon']!r}, resolution = {setup['params'].to_dict()}",
        "",
        "| quantity | achieved | reference | threshold | status |",
        "|---|---|---|---|---|",
        f"| R^2 | {r2:.6f} | {setup['published_r2']} (published, full scale) | >= {setup['threshold']} | "
        f"{'PASS' if ok else 'FAIL'} |",
        f"| volume | {result.basis.volume:.6f} | {_true_volume(system):.6f} | | |",
        f"| gram rank | {result.solution.gram_rank} | | | |",
        f"| max orbit error on [0, {t_end:g}] | {cmp.max_error:.6f} | | | |",
        f"| max orbit error on [0, 1.5] | {cmp.max_error_until(1.5):.6f} | | | |",
        f"| max distance of model orbit to manifold | {float(np.max(cmp.manifold_defect_series)):.3g} | | | |",
    ]
    if isinstance(system, CircleSystem) and system.fixed_points():
        for guess, root in zip((2.2, 4.1), system.fixed_points()):
            try:
                fp = newton_fixed_point(result.field, system.embed(guess))
                ang = float(np.mod(np.arctan2(fp.point[1], fp.point[0]), 2 * np.pi))
                lines.append(f"| fixed point from angle {guess} | {ang:.4f} rad (|V| = {fp.residual:.1e}) "
                             f"| {root:.4f} rad | 0.05 rad | {'PASS' if abs(ang - root) < 0.05 else 'FAIL'} |")
            except SecFieldError as exc:
                lines.append(f"| fixed point from angle {guess} | failed: {exc} | {root:.4f} rad | | FAIL |")
    lines += ["", "Artifacts: model.json, metrics.json, orbit_true.csv, orbit_model.csv, "
              "comparison.csv, quiver.csv", ""]
    _atomic_write_text(outdir / "report.md", "\n".join(lines))
    print("\n".join(lines[1:]))
    return 0 if ok else 3


def _true_volume(system) -> float:
    return 2 * math.pi if isinstance(system, CircleSystem) else system.volume()


# Parser --------------------------------------------------------------------


def _add_resolution_flags(p):
    p.add_argument("--epsilon", type=float, help="kernel bandwidth")
    p.add_argument("--J", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--L1", type=int)
    p.add_argument("--L2", type=int)
    p.add_argument("--LD", type=int, help="c/g contraction truncation L_D")
    p.add_argument("--eta", type=float, help="Gram spectral floor")


def _add_dataset_flags(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="training-set CSV")
    src.add_argument("--system", help="builtin system, e.g. circle:arc or torus:stepanoff")
    p.add_argument("--n", type=int, help="circle sample count")
    p.add_argument("--n1", type=int, help="torus grid size along theta1")
    p.add_argument("--n2", type=int, help="torus grid size along theta2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="secfield", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, help="cap on BLAS worker threads")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic training set")
    p.add_argument("--system", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", help="fit a model and write model + metrics JSON")
    _add_dataset_flags(p)
    _add_resolution_flags(p)
    p.add_argument("--model", help="model output path")
    p.add_argument("--name", help="output file stem")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="evaluate a model, write quiver CSV")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--points", help="CSV of query points (or a training-set file)")
    src.add_argument("--grid", help="box bounds lo:hi per axis, e.g. -5:5,-5:5")
    src.add_argument("--training", help="training-set file; adds vtrue columns and R^2")
    p.add_argument("--resolution", help="grid points per axis, e.g. 21,21")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("orbit", help="integrate a true or reconstructed orbit")
    p.add_argument("--model")
    p.add_argument("--true", help="builtin system for the reference orbit")
    p.add_argument("--system", help="embedding used to map --theta0 for model orbits")
    p.add_argument("--theta0", help="initial angle(s), comma separated")
    p.add_argument("--y0", help="initial point in data space, comma separated")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t", type=float, default=20.0, help="integration horizon")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("compare", help="compare two orbit files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--system", help="builtin system for the manifold-defect column")
    p.add_argument("--until", type=float, help="also report the max error on [0, UNTIL]")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("fixedpoint", help="Newton search for a zero of a model field")
    p.add_argument("--model", required=True)
    p.add_argument("--init", help="initial point in data space")
    p.add_argument("--init-angle", help="initial angle(s) mapped through the builtin embedding")
    p.add_argument("--system", help="embedding for --init-angle")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_fixedpoint)

    p = sub.add_parser("sweep", help="R^2 over a grid of resolution parameters")
    _add_dataset_flags(p)
    _add_resolution_flags(p)
    p.add_argument("--grid", required=True, help="axes like 'J=5,10 L=10,20 eta=0.01,0.001'")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", help="run a named experiment preset")
    p.add_argument("preset", help=", ".join(PRESETS))
    p.add_argument("--scale", choices=["desk", "full"], default="desk")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t", type=float, help="orbit horizon (default 20 circle, 10 torus)")
    p.set_defaults(func=cmd_reproduce)
    return parser


@contextlib.contextmanager
def _thread_limit(n):
    if n is None:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=n):
        yield


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
        if cfg.outputs and args.out == ".":
            args.out = cfg.outputs
        if args.threads is not None and args.threads < 1:
            raise InvalidArgumentError("--threads must be positive")
        with _thread_limit(args.threads):
            return args.func(args, cfg)
    except SecFieldError as exc:
        print(f"secfield {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, TypeError) as exc:
        print(f"secfield {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"secfield {args.command}: I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
