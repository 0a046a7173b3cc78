"""Batch front-end: parse INI run configurations, execute pipelines, emit
meshes, JSON reports and plot-ready tables.

Exit codes: 0 success, 1 configuration error, 3 total-curvature gate
refusal, 2 numerical failure (including a solve that ran out of iterations,
whose diagnostics are still written).  All file writes are atomic
(write-temp-then-rename) and, with a fixed seed, byte-identical across runs;
a timestamp is added to the report metadata only when the config opts in.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import curve as curve_mod
from .analysis import (
    detect_branch_points,
    gauss_bonnet_check,
    isoperimetric_check,
    sauvigny_bound_check,
    total_gauss_curvature,
)
from .convergence import (
    ConvergenceOptions,
    equicontinuity_diagnostic,
    monotone_lift,
    run_sequence,
)
from .disc_harmonic import (
    DiscMesh,
    DiscSurface,
    build_mesh,
    complex_derivative,
    conformality_residual,
    dirichlet_energy,
    save_surface_obj,
)
from .errors import (
    AnalysisError,
    ConfigError,
    EvaluationError,
    GenericityError,
    HypothesisError,
    MeshError,
    ParameterError,
    SolverError,
)
from .plateau_solver import SolverOptions, boundary_trace, solve
from .polyapprox import (
    inscribe,
    load_polygon,
    perturb_to_generic,
    polygon_total_curvature,
    save_polygon,
    verify_approximation,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_HYPOTHESIS = 3


@dataclass
class RunConfig:
    """Validated run configuration."""

    seed: int
    out_dir: Path
    curve_family: str
    curve_params: dict
    schedule: list
    epsilon: float
    solver: SolverOptions
    radial_levels: int
    min_radial_levels: int
    delta: float
    anchors: list | None
    theta_tol: float
    volume_tol: float
    branch_tol: float
    emit_timestamp: bool

    def __post_init__(self):
        if self.schedule and any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ConfigError("[schedule] stages must be strictly increasing")
        for name in ("epsilon", "delta", "theta_tol", "volume_tol", "branch_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"tolerance {name} must be positive")

    def build_curve(self):
        fam = self.curve_family
        p = dict(self.curve_params)
        try:
            if fam == "circle":
                return curve_mod.circle(p.pop("radius", 1.0))
            if fam == "ellipse":
                return curve_mod.ellipse(p.pop("a"), p.pop("b"))
            if fam == "perturbed_circle":
                return curve_mod.perturbed_circle(
                    p.pop("amplitude", 0.1), int(p.pop("frequency", 3))
                )
            if fam == "polygon":
                return curve_mod.polygon_curve(p.pop("vertices"))
            if fam == "fourier":
                return curve_mod.fourier_curve(p.pop("a0"), p.pop("cos"), p.pop("sin"))
        except KeyError as exc:
            raise ConfigError(f"[curve] family {fam!r} is missing parameter {exc}") from None
        raise ConfigError(f"[curve] unknown family {fam!r}")

    def convergence_options(self):
        return ConvergenceOptions(
            anchors=self.anchors,
            delta=self.delta,
            radial_levels=self.radial_levels,
            min_radial_levels=self.min_radial_levels,
            solver=self.solver,
            seed=self.seed,
            branch_tol=self.branch_tol,
        )


def _get(cp, section, key, conv, default=None, required=False):
    try:
        raw = cp.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError):
        if required:
            raise ConfigError(f"[{section}] missing required field {key!r}") from None
        return default
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def _bool(raw):
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _float_list(raw):
    return [float(x) for x in raw.replace(",", " ").split()]


def _int_list(raw):
    return [int(x) for x in raw.replace(",", " ").split()]


def _vector_rows(raw):
    rows = [r.strip() for r in raw.split(";") if r.strip()]
    return np.array([[float(x) for x in r.split()] for r in rows])


def load_config(path):
    """Parse and validate an INI run configuration."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    seed = _get(cp, "run", "seed", int, required=True)
    out_dir = Path(_get(cp, "run", "out", str, default="runs/out"))
    emit_timestamp = _get(cp, "run", "emit_timestamp", _bool, default=False)

    family = _get(cp, "curve", "family", str, required=True)
    known = {"family"}
    params = {}
    if cp.has_section("curve"):
        for key in cp.options("curve"):
            if key in known:
                continue
            raw = cp.get("curve", key)
            if key in ("vertices", "cos", "sin"):
                params[key] = _vector_rows(raw)
            elif key == "a0":
                params[key] = np.array(_float_list(raw))
            elif key == "frequency":
                params[key] = _get(cp, "curve", key, int)
            else:
                params[key] = _get(cp, "curve", key, float)

    schedule = _get(cp, "schedule", "stages", _int_list, default=[])
    epsilon = _get(cp, "schedule", "epsilon", float, default=0.1)

    solver = SolverOptions(
        tol_energy=_get(cp, "solver", "tol_energy", float, default=1e-10),
        max_iters=_get(cp, "solver", "max_iters", int, default=5000),
    )
    radial_levels = _get(cp, "solver", "radial_levels", int, default=0)
    min_radial_levels = _get(cp, "solver", "min_radial_levels", int, default=12)

    anchors = _get(cp, "approx", "anchors", _float_list, default=None)
    delta = _get(cp, "approx", "delta", float, default=1e-4)
    theta_tol = _get(cp, "approx", "theta_tol", float, default=1e-6)
    volume_tol = _get(cp, "approx", "volume_tol", float, default=1e-9)
    branch_tol = _get(cp, "analysis", "branch_tol", float, default=1e-3)

    return RunConfig(
        seed=seed,
        out_dir=out_dir,
        curve_family=family,
        curve_params=params,
        schedule=schedule,
        epsilon=epsilon,
        solver=solver,
        radial_levels=radial_levels,
        min_radial_levels=min_radial_levels,
        delta=delta,
        anchors=anchors,
        theta_tol=theta_tol,
        volume_tol=volume_tol,
        branch_tol=branch_tol,
        emit_timestamp=emit_timestamp,
    )


# -- serialization helpers ----------------------------------------------------


def _plain(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _plain(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path, payload):
    atomic_write_text(path, json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n")


def _meta(config):
    meta = {"seed": config.seed, "epsilon": config.epsilon, "schedule": config.schedule}
    if config.emit_timestamp:
        meta["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return meta


def _branch_payload(br):
    return {
        "interior_candidates": [
            {
                "location": [c.location.real, c.location.imag],
                "order": c.order,
                "min_modulus": c.min_modulus,
            }
            for c in br.interior_candidates
        ],
        "boundary_candidates": [
            {
                "location": [c.location.real, c.location.imag],
                "order": c.order,
                "min_modulus": c.min_modulus,
            }
            for c in br.boundary_candidates
        ],
        "boundary_vertex_orders": [_plain(v) for v in br.boundary_vertex_orders],
        "total_order": br.total_order(),
        "resolved": br.resolved,
        "mean_metric": br.mean_metric,
    }


def _solution_payload(sol, branch_tol, epsilon):
    surf = sol.surface
    field_ = complex_derivative(surf)
    br = detect_branch_points(surf, field_, branch_tol, solution=sol)
    curv = gauss_bonnet_check(sol, br)
    return {
        "energy": sol.diagnostics.final_energy,
        "iterations": sol.diagnostics.iterations,
        "converged": sol.diagnostics.converged,
        "conformality_residual": sol.diagnostics.conformality,
        "energies_non_increasing": bool(
            np.all(np.diff(sol.diagnostics.energies) <= 1e-10 * (1 + np.abs(sol.diagnostics.energies[:-1])))
        ),
        "polygon_length": sol.polygon.length,
        "vertex_preimages": sol.vertex_preimages,
        "lift_total_increase": sol.lift.total_increase(),
        "lift_monotonicity_defect": sol.lift.monotonicity_defect(),
        "curvature": _plain(curv),
        "branches": _branch_payload(br),
        "isoperimetric_margin": isoperimetric_check(sol),
        "sauvigny_pass": sauvigny_bound_check(curv, epsilon),
    }, curv, br


# -- subcommands ---------------------------------------------------------------


def cmd_approximate(config):
    """Inscribe, perturb and verify one polygon per schedule entry."""
    if not config.schedule:
        raise ConfigError("[schedule] stages required for approximate")
    curve = config.build_curve()
    anchors = config.anchors
    if anchors is None:
        anchors = (curve.t_start + curve.period * np.array([0.0, 1.0, 2.0]) / 3.0).tolist()
    out = config.out_dir
    report = {"meta": _meta(config), "stages": []}
    for n in config.schedule:
        polygon = inscribe(curve, n, anchors)
        seed_n = int(np.random.SeedSequence((config.seed, n)).generate_state(1)[0])
        polygon = perturb_to_generic(
            polygon, config.delta, seed=seed_n, theta_tol=config.theta_tol, v_tol=config.volume_tol
        )
        ver = verify_approximation(
            curve, polygon, config.epsilon, config.theta_tol, config.volume_tol
        )
        pfile = out / f"polygon_{n:04d}.txt"
        out.mkdir(parents=True, exist_ok=True)
        save_polygon(polygon, pfile, seed=seed_n)
        report["stages"].append(
            {"n": n, "polygon_file": pfile.name, "verification": _plain(ver)}
        )
        print(f"approximate n={n}: length_gap={ver.length_gap:+.3e} "
              f"curvature_gap={ver.curvature_gap:+.3e} pass={ver.passes}")
    write_json(out / "approximation_report.json", report)
    return EXIT_OK


def cmd_solve(config, polygon_file):
    """Solve one polygon file; write OBJ surface + JSON diagnostics."""
    polygon = load_polygon(polygon_file)
    levels = config.radial_levels or max(
        config.min_radial_levels, math.ceil(polygon.num_vertices / 2)
    )
    mesh = build_mesh(levels)
    sol = solve(polygon, mesh, config.solver)
    payload, curv, br = _solution_payload(sol, config.branch_tol, config.epsilon)
    payload["radial_levels"] = levels
    out = config.out_dir
    stem = Path(polygon_file).stem
    save_obj_atomic(sol.surface, out / f"{stem}_surface.obj")
    write_json(out / f"{stem}_diagnostics.json", {"meta": _meta(config), "solve": payload})
    print(f"solve {stem}: energy={payload['energy']:.6f} converged={payload['converged']} "
          f"total|K|E={curv.total_abs_curvature:.4f} sauvigny_margin={curv.sauvigny_margin:.4f}")
    return EXIT_OK if payload["converged"] else EXIT_NUMERICAL


def save_obj_atomic(surface, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".obj.tmp")
    save_surface_obj(surface, tmp)
    os.replace(tmp, path)


def cmd_converge(config):
    """Full refinement pipeline; JSON report, per-stage OBJ, CSV table."""
    if not config.schedule:
        raise ConfigError("[schedule] stages required for converge")
    curve = config.build_curve()
    report = run_sequence(curve, config.schedule, config.epsilon, config.convergence_options())

    out = config.out_dir
    payload = {
        "meta": _meta(config),
        "curve_total_curvature": report.curve_total_curvature,
        "trace_distances": report.trace_distances,
        "stages": [],
        "limit": {
            k: (_plain(v) if k != "interior_branch_candidates" else len(v))
            for k, v in report.limit_checks.items()
        },
    }
    csv_rows = ["stage,n,energy,polygon_total_curvature,total_abs_curvature,trace_distance"]
    for i, st in enumerate(report.stages):
        d = st.solution.diagnostics
        stage_payload = {
            "n": st.n,
            "radial_levels": st.radial_levels,
            "verification": _plain(st.approximation),
            "energy": d.final_energy,
            "iterations": d.iterations,
            "converged": d.converged,
            "conformality_residual": d.conformality,
            "curvature": _plain(st.curvature),
            "branches": _branch_payload(st.branches),
            "lift_total_increase": st.lift.total_increase(),
            "lift_monotonicity_defect": st.lift.monotonicity_defect(),
        }
        payload["stages"].append(stage_payload)
        save_obj_atomic(st.normalized_surface, out / f"stage_{st.n:04d}_surface.obj")
        dist = "" if i == 0 else f"{report.trace_distances[i - 1]:.12g}"
        csv_rows.append(
            f"{i},{st.n},{d.final_energy:.12g},{polygon_total_curvature(st.polygon):.12g},"
            f"{st.curvature.total_abs_curvature:.12g},{dist}"
        )
        print(f"stage n={st.n}: energy={d.final_energy:.6f} "
              f"|K|E={st.curvature.total_abs_curvature:.4f} converged={d.converged}")
    final = report.stages[-1]
    payload["equicontinuity_final_stage"] = _plain(
        equicontinuity_diagnostic(final.trace, final.solution.diagnostics.final_energy)
    )
    write_json(out / "convergence_report.json", payload)
    atomic_write_text(out / "stages.csv", "\n".join(csv_rows) + "\n")
    print(f"trace distances: {[round(d, 6) for d in report.trace_distances]}")
    return EXIT_OK


def cmd_analyze(config, surface_obj, polygon_file, diagnostics_json):
    """Re-run analysis on an exported surface OBJ + its polygon and sidecar."""
    with open(diagnostics_json) as fh:
        sidecar = json.load(fh)
    levels = sidecar.get("solve", {}).get("radial_levels")
    if levels is None:
        raise ConfigError(f"{diagnostics_json}: missing solve.radial_levels")
    mesh = build_mesh(int(levels))
    values = _read_obj_vertices(surface_obj)
    if len(values) != mesh.nv:
        raise ConfigError(
            f"{surface_obj}: vertex count {len(values)} does not match mesh ({mesh.nv})"
        )
    surface = DiscSurface(mesh, values, is_harmonic=False)
    polygon = load_polygon(polygon_file)

    trace = boundary_trace(surface)
    lift = monotone_lift(trace, polygon)
    field_ = complex_derivative(surface)
    br = detect_branch_points(surface, field_, config.branch_tol)
    payload = {
        "meta": _meta(config),
        "dirichlet_energy": dirichlet_energy(surface),
        "conformality_residual": conformality_residual(surface),
        "total_abs_curvature": total_gauss_curvature(surface),
        "lift_total_increase": lift.total_increase(),
        "lift_monotonicity_defect": lift.monotonicity_defect(),
        "branches": _branch_payload(br),
    }
    out = config.out_dir
    write_json(out / (Path(surface_obj).stem + "_analysis.json"), payload)
    print(f"analyze {Path(surface_obj).name}: energy={payload['dirichlet_energy']:.6f} "
          f"|K|E={payload['total_abs_curvature']:.4f}")
    return EXIT_OK


def _read_obj_vertices(path):
    verts = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("v "):
                verts.append([float(x) for x in line.split()[1:4]])
    return np.asarray(verts)


# -- entry point ---------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(
        prog="polyplateau",
        description="Polygonal-approximation pipeline for disc-type minimal surfaces",
    )
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", help="override output directory")
    ap.add_argument("--seed", type=int, help="override config seed")
    ap.add_argument("--stages", help="override schedule, e.g. 8,16,32")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("approximate", help="write polygon files + verification report")
    sp = sub.add_parser("solve", help="solve one polygon file")
    sp.add_argument("polygon", help="polygon text file")
    sub.add_parser("converge", help="full refinement pipeline")
    an = sub.add_parser("analyze", help="re-run analysis on an exported surface")
    an.add_argument("surface", help="surface OBJ file")
    an.add_argument("polygon", help="polygon text file")
    an.add_argument("diagnostics", help="sidecar diagnostics JSON from solve")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.out:
            config.out_dir = Path(args.out)
        if args.seed is not None:
            config.seed = args.seed
        if args.stages:
            config.schedule = _int_list(args.stages)
            if any(b <= a for a, b in zip(config.schedule, config.schedule[1:])):
                raise ConfigError("--stages must be strictly increasing")

        if args.command == "approximate":
            return cmd_approximate(config)
        if args.command == "solve":
            return cmd_solve(config, args.polygon)
        if args.command == "converge":
            return cmd_converge(config)
        if args.command == "analyze":
            return cmd_analyze(config, args.surface, args.polygon, args.diagnostics)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (SolverError, AnalysisError, EvaluationError, MeshError, GenericityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
