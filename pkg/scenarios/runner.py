"""Scenario orchestration: FE runs, point drives, convergence studies and sweeps.

Every entry point takes a validated ``ScenarioConfig`` and an output directory and returns a
plain summary mapping; the CLI persists the summaries.
"""

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from mechanics.elastic_materials import MaterialPoint
from mechanics.errors import UndefinedErrorSignal, UnsupportedStudyError
from mechanics.fe_solver import Dirichlet, DofMap, ShellProblem, SolverSettings, TimeStepper, run
from mechanics.maxwell import membrane_traction
from mechanics.shell_element import LoadSpec
from mechanics.surface_kinematics import evaluate_point, split_quantities
from scenarios.config import apply_overrides, with_parameter
from scenarios.mesh_io import write_mesh
from scenarios.meshes import build_mesh
from scenarios.output import write_rows
from verification.analytical_oracles import (
    BalloonParams,
    PureBendParams,
    SphereParams,
    balloon_pressure,
    error_metrics,
    fit_order,
    local_orders,
    pure_bend_solution,
    sphere_pressure,
)
from verification.point_driver import (
    BalloonStretch,
    CreepTraction,
    Cyclic,
    PureDilatation,
    PureShear,
    SphereStretchBend,
    drive,
    frequency_sweep,
    point_record,
)

logger = logging.getLogger(__name__)

PLATEAU_ORDER = 0.5


# --- Builders ---

def build_material(config):
    return config.material.build()


def _selected_nodes(mesh, spec):
    if spec.edge is not None:
        return mesh.boundary_nodes(spec.edge)
    if spec.corner is not None:
        a, b = spec.corner
        return np.intersect1d(mesh.boundary_nodes(a), mesh.boundary_nodes(b))
    if spec.all_nodes:
        return np.arange(mesh.n_cp)
    return np.unique(np.concatenate([mesh.boundary_nodes(e) for e in mesh.EDGES]))


def _stretch_value(schedule, coordinate):
    return lambda t: (schedule(t) - 1.0) * coordinate


def build_dofs(config, mesh):
    """DofMap from the boundary specs, applied in order (later specs win on shared dofs)."""
    conditions = []
    for spec in config.boundary:
        nodes = _selected_nodes(mesh, spec)
        for component in spec.components:
            if spec.mode == "displacement":
                conditions.append(Dirichlet(nodes, component, spec.value))
                continue
            for node in nodes:
                X = float(mesh.control_points[node, component])
                conditions.append(Dirichlet(np.array([node]), component, _stretch_value(spec.value, X)))
    return DofMap(mesh.n_cp, conditions)


def _vector(schedules):
    return lambda t: np.array([s(t) for s in schedules])


def build_loads(config):
    spec = config.loads
    return LoadSpec(
        pressure=spec.pressure,
        tangential=_vector(spec.tangential) if spec.tangential else None,
        dead=_vector(spec.dead) if spec.dead else None,
        edge_tractions={edge: _vector(s) for edge, s in spec.edge_tractions.items()},
        edge_moments=dict(spec.edge_moments),
    )


def build_problem(config):
    mesh = build_mesh(config.geometry)
    solver = config.solver
    return ShellProblem(
        mesh=mesh,
        material=build_material(config),
        dofs=build_dofs(config, mesh),
        stepper=TimeStepper(config.time.t_end, config.time.dt),
        loads=build_loads(config),
        settings=SolverSettings(
            rtol=solver.rtol, dx_tol=solver.dx_tol, max_iterations=solver.max_iterations,
            threads=solver.threads,
        ),
    )


def build_program(config):
    spec, t_end = config.program, config.time.t_end
    if spec.kind == "PureShear":
        return PureShear(displacement=spec.displacement)
    if spec.kind == "PureDilatation":
        return PureDilatation(displacement=spec.displacement)
    if spec.kind == "CreepTraction":
        return CreepTraction(traction=spec.traction)
    if spec.kind == "Cyclic":
        return Cyclic(amplitude=spec.amplitude, omega=spec.omega, cycles=spec.cycles)
    tau = t_end / math.log(spec.lambda_end)
    cls = BalloonStretch if spec.kind == "BalloonStretch" else SphereStretchBend
    return cls(tau_lambda=tau, R=spec.R, theta=spec.theta)


# --- FE sampling ---

def _material_point(qp, x_e):
    return MaterialPoint.from_states(qp.ref, evaluate_point(qp.basis, x_e))


def sample_row(problem, config, t):
    """Sample-point record at the quadrature point closest to the configured parametric point."""
    xi, eta = config.outputs.sample
    mesh = problem.mesh
    element = mesh.find_element(xi, eta)
    ws = problem.workspaces[element.index]
    k = int(np.argmin([(qp.xi - xi) ** 2 + (qp.eta - eta) ** 2 for qp in ws.points]))
    qp, histories = ws.points[k], ws.committed[k]
    mp = _material_point(qp, problem.x[ws.connectivity])
    response = problem.material.stresses(mp, histories)
    record = point_record(t, 0.0, problem.material, mp, histories, response)

    radius = config.outputs.pressure_radius
    if radius is not None:
        traction = membrane_traction(response, mp)
        tension = 0.5 * float(np.trace(traction @ mp.a_co))
        record.pressure = 2.0 * tension / (radius * math.sqrt(mp.J))

    u = mesh.evaluate(xi, eta, problem.x) - mesh.evaluate(xi, eta, problem.X)
    row = record.row()
    row.pop("load")
    row.update(u_x=u[0], u_y=u[1], u_z=u[2])
    return row


def _worst(defects, key, residual):
    defects[key] = max(defects[key], float(np.max(np.abs(residual))))


def field_summary(problem):
    """Patch-wide curvature means, stretch deviation and split defects (J, strain, curvature)."""
    kappa, kappa_in, stretch_dev = [], [], 0.0
    defects = {"split_defect": 0.0, "strain_split_defect": 0.0, "curvature_split_defect": 0.0}
    branches = problem.material.branches
    lead_membrane = next((i for i, b in enumerate(branches) if b.has_membrane), None)
    lead_bending = next((i for i, b in enumerate(branches) if b.has_bending), None)
    lead = lead_membrane if lead_membrane is not None else lead_bending
    for ws in problem.workspaces:
        x_e = problem.x[ws.connectivity]
        for qp, histories in zip(ws.points, ws.committed):
            mp = _material_point(qp, x_e)
            kappa.append(mp.a_con[1, 1] * mp.b_co[1, 1])
            stretches = np.sqrt(np.linalg.eigvals(mp.A_con @ mp.a_co).real)
            stretch_dev = max(stretch_dev, float(np.max(np.abs(stretches - 1.0))))
            if lead_bending is not None:
                kappa_in.append(mp.A_con[1, 1] * histories[lead_bending].bhat_co[1, 1])
            if lead is not None:
                h = histories[lead]
                split = split_quantities(mp.a_co, mp.A_co, h.ahat_con, mp.b_co, mp.B_co, h.bhat_co)
                _worst(defects, "split_defect", split.J - split.J_el * split.J_in)
                _worst(defects, "strain_split_defect", split.eps - split.eps_el - split.eps_in)
                _worst(defects, "curvature_split_defect", split.kappa - split.kappa_el - split.kappa_in)
    return {
        "kappa2": float(np.mean(kappa)),
        "kappa_in": float(np.mean(kappa_in)) if kappa_in else np.nan,
        "stretch_deviation": stretch_dev,
        **defects,
    }


def simulate(config):
    """FE time history as a list of output rows (t = 0 included)."""
    problem = build_problem(config)
    rows = [{**sample_row(problem, config, 0.0), **field_summary(problem), "iterations": 0,
             "dissipation_total": 0.0}]
    every = config.outputs.every

    def on_step(prob, record):
        if record.step % every and record.step != prob.stepper.n_steps:
            return
        rows.append({
            **sample_row(prob, config, record.t),
            **field_summary(prob),
            "iterations": record.iterations,
            "dissipation_total": record.dissipation,
        })

    run(problem, on_step)
    return problem, rows


def point_rows(config):
    program = build_program(config)
    material = build_material(config)
    records = drive(program, material, config.time.dt, config.time.t_end)
    every = config.outputs.every
    return [r.row() for i, r in enumerate(records) if i % every == 0 or i == len(records) - 1]


# --- Entry points ---

def _summary(config, kind, out_dir, rows, started, **extra):
    last = rows[-1] if rows else {}
    summary = {
        "name": config.name,
        "command": kind,
        "dt": config.time.dt,
        "t_end": config.time.t_end,
        "rows": len(rows),
        "final": {k: v for k, v in last.items() if isinstance(v, (int, float))},
        "elapsed": time.monotonic() - started,
        "out_dir": out_dir,
        **extra,
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, default=float)
    return summary


def run_case(config, out_dir):
    """Run one scenario and write ``<name>.csv``, ``<name>.mesh`` and ``summary.json``."""
    started = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    logger.info("run %s (%s driver)", config.name, config.driver)
    if config.driver == "point":
        rows = point_rows(config)
    else:
        problem, rows = simulate(config)
        if config.outputs.write_mesh:
            write_mesh(os.path.join(out_dir, f"{config.name}.mesh"), problem.mesh)
    write_rows(os.path.join(out_dir, f"{config.name}.csv"), rows)
    return {**_summary(config, "run", out_dir, rows, started), "series": rows}


def point_drive(config, out_dir):
    """Point-driver run regardless of the configured driver."""
    if config.program is None:
        raise UnsupportedStudyError(f"{config.name} has no point program")
    started = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    rows = point_rows(config)
    write_rows(os.path.join(out_dir, f"{config.name}_point.csv"), rows)
    return {**_summary(config, "point", out_dir, rows, started), "series": rows}


# --- Convergence ---

def oracle_values(study, t):
    """Oracle quantities at time t for a study, keyed like the output rows."""
    if study.oracle == "balloon":
        return {"pressure": balloon_pressure(BalloonParams(**study.params), t).p_total}
    if study.oracle == "sphere":
        return {"pressure": sphere_pressure(SphereParams(**study.params), t).p_total}
    if study.oracle == "pure_bend":
        state = pure_bend_solution(PureBendParams(**study.params), t)
        return {"kappa2": state.kappa, "kappa_in": state.kappa_in}
    raise UnsupportedStudyError(f"no oracle for {study.oracle!r}")


def _final_row(config):
    if config.driver == "point":
        return point_rows(config)[-1]
    return simulate(config)[1][-1]


def _with_elements(config, elements):
    data = json.loads(config.model_dump_json())
    data["geometry"]["elements"] = list(elements)
    if config.study.mesh_dt is not None:
        data["time"]["dt"] = config.study.mesh_dt
    return type(config).model_validate(data)


@dataclass
class ConvergenceResult:
    rows: list = field(default_factory=list)
    orders: dict = field(default_factory=dict)    # (sweep, quantity) -> fitted order


def _tabulate(result, sweep, parameters, finals, oracle):
    errors = {}
    for parameter, final in zip(parameters, finals):
        for quantity, error in error_metrics(final, oracle).items():
            errors.setdefault(quantity, []).append((parameter, error))
            result.rows.append({
                "sweep": sweep,
                "parameter": parameter,
                "quantity": quantity,
                "value": float(final[quantity]),
                "oracle": float(oracle[quantity]),
                "error": error,
            })
    for quantity, pairs in errors.items():
        params, errs = zip(*pairs)
        try:
            order = fit_order(params, errs)
        except UndefinedErrorSignal as exc:
            logger.warning("%s against %s: %s", quantity, sweep, exc)
            order = float("nan")
        result.orders[(sweep, quantity)] = order
        if not order >= PLATEAU_ORDER:
            logger.warning("%s against %s plateaus (order %.3g)", quantity, sweep, order)
        orders = local_orders(params, errs) if len(params) > 1 else []
        for row, local in zip(
            [r for r in result.rows if r["sweep"] == sweep and r["quantity"] == quantity][1:], orders
        ):
            row["local_order"] = float(local)


def convergence_study(config, out_dir, threads=1):
    """Errors against the closed-form solution over the configured dt and mesh lists."""
    study = config.study
    if study is None:
        raise UnsupportedStudyError(f"{config.name} defines no study")
    if study.meshes and config.driver != "fe":
        raise UnsupportedStudyError("mesh sweeps need the fe driver")
    started = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    oracle = oracle_values(study, config.time.t_end)
    result = ConvergenceResult()

    def fan_out(configs):
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(_final_row, configs))
        return [_final_row(c) for c in configs]

    if study.dts:
        dts = sorted(study.dts, reverse=True)
        finals = fan_out([apply_overrides(config, dt=dt) for dt in dts])
        _tabulate(result, "dt", dts, finals, oracle)
    if study.meshes:
        meshes = [tuple(m) for m in study.meshes]
        finals = fan_out([_with_elements(config, m) for m in meshes])
        _tabulate(result, "inverse_elements", [1.0 / (a * b) for a, b in meshes], finals, oracle)

    write_rows(os.path.join(out_dir, f"{config.name}_convergence.csv"), result.rows, first="sweep")
    write_rows(
        os.path.join(out_dir, f"{config.name}_orders.csv"),
        [{"sweep": s, "quantity": q, "order": o} for (s, q), o in result.orders.items()],
        first="sweep",
    )
    summary = _summary(
        config, "converge", out_dir, result.rows, started,
        orders={f"{s}:{q}": o for (s, q), o in result.orders.items()},
    )
    return {**summary, "convergence": result}


# --- Sweeps ---

def _dissipation_rows(material, sweep, threads, **extra):
    points = frequency_sweep(
        material, sweep.omegas, sweep.amplitude, sweep.cycles, sweep.steps_per_cycle, threads
    )
    return [{**extra, "omega": p.omega, "dissipation": p.dissipation} for p in points]


def sweep(config, out_dir, threads=1):
    """Frequency sweep, parameter scan, or a frequency sweep per parameter value."""
    spec = config.sweep
    if spec is None:
        raise UnsupportedStudyError(f"{config.name} defines no sweep")
    started = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)

    if spec.parameter is None:
        rows = _dissipation_rows(build_material(config), spec, threads)
        first = "omega"
    else:
        variants = [with_parameter(config, spec.parameter, v) for v in spec.values]

        def one(pair):
            value, variant = pair
            if spec.omegas:
                return _dissipation_rows(build_material(variant), spec, 1, value=value)
            series = point_rows(variant) if variant.driver == "point" else simulate(variant)[1]
            return [{"value": value, **row} for row in series]

        pairs = list(zip(spec.values, variants))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(one, pairs))
        else:
            chunks = [one(p) for p in pairs]
        rows = [row for chunk in chunks for row in chunk]
        first = "value"

    write_rows(os.path.join(out_dir, f"{config.name}_sweep.csv"), rows, first=first)
    return {**_summary(config, "sweep", out_dir, rows, started), "series": rows}
