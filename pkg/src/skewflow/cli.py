"""Batch front-end: configure a geometry and a flow, run, write CSV/JSON.

Subcommands
-----------
simulate   integrate the flow, write per-output diagnostics (and optional
           node snapshots)
verify     evaluate one named residual, write a report JSON plus the
           per-node residual CSV
converge   run a residual across several resolutions, write the
           convergence table JSON/CSV

Configuration is a JSON file (--config) with optional flag overrides; the
README documents the schema with one example per geometry kind.  Exit codes:
0 success, 1 invalid usage or configuration, 2 runtime degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import DegenerateImmersionError, SkewflowError
from .flow import FlowConfig, fitted_torus_radii, run, stable_dt
from .geometry import (
    Immersion,
    fundamental_forms,
    load_immersion_csv,
    make_circle,
    make_perturbed_torus,
    make_product_torus,
    save_immersion_csv,
    tangent_data,
    volume,
)
from .verify import (
    PROBLEMS,
    Report,
    convergence_study,
    report_to_dict,
    residual_codazzi,
    residual_identify,
    residual_theorem1,
    save_json,
    save_residual_csv,
    save_table_csv,
    table_to_dict,
    theorem2_suite,
)

GEOMETRY_KINDS = ("circle", "product_torus", "perturbed_torus", "file")
TASKS = ("simulate", "verify", "converge")
VERIFY_NAMES = ("theorem1", "theorem1_mcf", "codazzi", "identify", "theorem2", "conservation")


class ConfigError(SkewflowError):
    pass


def _require(config: dict, fields: list[str], where: str):
    missing = [f for f in fields if f not in config]
    if missing:
        raise ConfigError(f"{where}: missing fields {missing}")


def load_config(path: str, overrides: argparse.Namespace) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config root must be a JSON object")

    flow = config.setdefault("flow", {})
    if overrides.dt is not None:
        flow["dt"] = overrides.dt
    if overrides.t_end is not None:
        flow["t_end"] = overrides.t_end
    if overrides.seed is not None:
        flow["seed"] = overrides.seed
        config.setdefault("geometry", {})["seed"] = overrides.seed
    if overrides.n is not None:
        grid_cfg = config.setdefault("grid", {})
        dims = len(grid_cfg.get("sizes", []))
        if dims == 0:
            dims = 1 if config.get("geometry", {}).get("kind") == "circle" else 2
        grid_cfg["sizes"] = [overrides.n] * dims
    if overrides.out is not None:
        config["output_dir"] = overrides.out
    if getattr(overrides, "verify_name", None):
        config["verify_name"] = overrides.verify_name
    if getattr(overrides, "snapshots", False):
        config["snapshots"] = True
    return config


def build_immersion(config: dict) -> Immersion:
    _require(config, ["geometry", "grid"], "config")
    geometry = config["geometry"]
    grid_cfg = config["grid"]
    _require(geometry, ["kind"], "geometry")
    _require(grid_cfg, ["sizes"], "grid")
    kind = geometry["kind"]
    sizes = [int(s) for s in grid_cfg["sizes"]]
    if kind not in GEOMETRY_KINDS:
        raise ConfigError(f"geometry: unknown kind {kind!r}, expected one of {GEOMETRY_KINDS}")
    if kind == "circle":
        if len(sizes) != 1:
            raise ConfigError("geometry: circle needs a 1-axis grid")
        _require(geometry, ["r"], "geometry(circle)")
        return make_circle(float(geometry["r"]), sizes[0])
    if kind in ("product_torus", "perturbed_torus"):
        if len(sizes) != 2:
            raise ConfigError(f"geometry: {kind} needs a 2-axis grid")
        _require(geometry, ["a", "b"], f"geometry({kind})")
        if kind == "product_torus":
            return make_product_torus(float(geometry["a"]), float(geometry["b"]), sizes[0], sizes[1])
        _require(geometry, ["eps", "seed"], "geometry(perturbed_torus)")
        return make_perturbed_torus(
            float(geometry["a"]), float(geometry["b"]), float(geometry["eps"]),
            int(geometry["seed"]), sizes[0], sizes[1],
        )
    _require(geometry, ["path"], "geometry(file)")
    return load_immersion_csv(geometry["path"], sizes, grid_cfg.get("periods"))


def build_flow_config(config: dict, imm: Immersion) -> FlowConfig:
    flow = dict(config.get("flow", {}))
    flow.setdefault("dt", stable_dt(imm))
    try:
        return FlowConfig(
            flow_kind=flow.get("flow_kind", "SMCF"),
            dt=float(flow["dt"]),
            t_end=float(flow.get("t_end", 0.1)),
            scheme=flow.get("scheme", "RK4"),
            output_every=int(flow.get("output_every", 1)),
            seed=int(flow.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"flow: {exc}") from exc


def _worker_count() -> int:
    raw = os.environ.get("SKEWFLOW_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SKEWFLOW_THREADS must be an integer, got {raw!r}")


def _is_torus(config: dict) -> bool:
    return config["geometry"]["kind"] in ("product_torus", "perturbed_torus")


def task_simulate(config: dict, out_dir: Path) -> int:
    imm = build_immersion(config)
    flow_config = build_flow_config(config, imm)
    traj = run(imm, flow_config)
    torus = _is_torus(config)
    diag_path = out_dir / "diagnostics.csv"
    with open(diag_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["t", "volume", "min_sv"] + (["a_fit", "b_fit"] if torus else [])
        writer.writerow(header)
        for state in traj.states:
            _, _, _, _, sqrt_det_g, min_sv, _ = tangent_data(state.immersion)
            row = [
                repr(state.t),
                repr(float(np.sum(sqrt_det_g) * state.immersion.grid.cell_measure())),
                repr(float(np.min(min_sv))),
            ]
            if torus:
                a_fit, b_fit, _ = fitted_torus_radii(state.immersion)
                row += [repr(a_fit), repr(b_fit)]
            writer.writerow(row)
    if config.get("snapshots", False):
        for idx, state in enumerate(traj.states):
            save_immersion_csv(state.immersion, out_dir / f"snapshot_{idx:04d}.csv")
    print(f"simulate: wrote {diag_path} ({len(traj)} outputs)")
    return 0


def _conservation_report(config: dict) -> Report:
    imm = build_immersion(config)
    flow_config = build_flow_config(config, imm)
    traj = run(imm, flow_config)
    volumes = np.array([volume(s.immersion) for s in traj.states])
    drift = np.abs(volumes - volumes[0]) / volumes[0]
    return Report(
        name="conservation",
        field=drift,
        norms={"max": float(np.max(drift)), "l2": float(np.sqrt(np.mean(drift**2)))},
        grid_sizes=traj.grid.sizes,
        dt=flow_config.dt,
        metadata={"flow_kind": flow_config.flow_kind, "geometry": config["geometry"]["kind"]},
    )


def task_verify(config: dict, out_dir: Path) -> int:
    name = config.get("verify_name")
    if name not in VERIFY_NAMES:
        raise ConfigError(f"verify_name must be one of {VERIFY_NAMES}, got {name!r}")
    seed = int(config.get("flow", {}).get("seed", 0))
    if name == "theorem2":
        table = theorem2_suite(seed, config.get("h_list", [1e-2, 1e-3, 1e-4]))
        save_json(table_to_dict(table), out_dir / "convergence_table.json")
        save_table_csv(table, out_dir / "convergence_table.csv")
        print(f"verify theorem2: order={table.observed_order}, isometry_max={table.metadata['isometry_max']:.3e}")
        return 0
    if name == "conservation":
        report = _conservation_report(config)
    else:
        imm = build_immersion(config)
        meta = {"geometry": config["geometry"]["kind"], "seed": seed}
        if name in ("theorem1", "theorem1_mcf"):
            flow_config = build_flow_config(config, imm)
            # the time derivative needs consecutive states, so record every step
            flow_config = FlowConfig(
                flow_kind=flow_config.flow_kind, dt=flow_config.dt, t_end=flow_config.t_end,
                scheme=flow_config.scheme, output_every=1, seed=flow_config.seed,
            )
            traj = run(imm, flow_config)
            if len(traj) < 3:
                raise ConfigError(
                    "theorem1 verification needs t_end >= 2 * dt so a centered time difference exists"
                )
            report = residual_theorem1(traj, len(traj) // 2, use_jtilde=(name == "theorem1"), metadata=meta)
        elif name == "codazzi":
            report = residual_codazzi(fundamental_forms(imm), metadata=meta)
        else:
            report = residual_identify(fundamental_forms(imm), metadata=meta)
    save_json(report_to_dict(report), out_dir / "report.json")
    save_residual_csv(report, out_dir / "residual.csv")
    print(f"verify {name}: max={report.norms['max']:.6e} l2={report.norms['l2']:.6e}")
    return 0


def task_converge(config: dict, out_dir: Path) -> int:
    name = config.get("verify_name", "theorem1")
    if name not in PROBLEMS:
        raise ConfigError(f"converge supports {sorted(PROBLEMS)}, got {name!r}")
    resolutions = config.get("resolutions")
    if not resolutions or len(resolutions) < 2:
        raise ConfigError("converge: need 'resolutions' with at least two entries")
    geometry = config.get("geometry", {})
    kwargs = {}
    for key in ("a", "b", "eps", "seed"):
        if key in geometry:
            kwargs[key] = geometry[key]
    workers = _worker_count()
    if workers > 1:
        # resolution jobs are independent; collect in input order
        runner = PROBLEMS[name]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(runner, int(size), **kwargs) for size in resolutions]
            reports = [f.result() for f in futures]

        def replay(size, **_):
            return reports[[int(r) for r in resolutions].index(int(size))]

        table = convergence_study(replay, resolutions)
        table.name = name
        table.metadata.update(kwargs)
    else:
        table = convergence_study(name, resolutions, **kwargs)
    save_json(table_to_dict(table), out_dir / "convergence_table.json")
    save_table_csv(table, out_dir / "convergence_table.csv")
    print(f"converge {name}: observed_order={table.observed_order}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skewflow", description=__doc__)
    sub = parser.add_subparsers(dest="task")
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--config", required=True, help="path to a JSON configuration file")
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--t-end", dest="t_end", type=float, default=None)
        p.add_argument("--n", type=int, default=None, help="override grid size (all axes)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--verify-name", dest="verify_name", default=None)
        p.add_argument("--snapshots", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.task not in TASKS:
        parser.print_usage(sys.stderr)
        print(f"error: task must be one of {TASKS}", file=sys.stderr)
        return 1
    try:
        config = load_config(args.config, args)
        out_dir = Path(config.get("output_dir", "out"))
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.task == "simulate":
            return task_simulate(config, out_dir)
        if args.task == "verify":
            return task_verify(config, out_dir)
        return task_converge(config, out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DegenerateImmersionError as exc:
        print(f"degenerate immersion: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
