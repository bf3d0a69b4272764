"""Global assembly, Dirichlet elimination and the Newton-Raphson time loop."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from mechanics.errors import DivergenceError, ShellError, SolverError, StepFailure
from mechanics.shell_element import LoadSpec, build_workspace, evaluate_element, f_ext

logger = logging.getLogger(__name__)


def _zero(t):
    return 0.0


@dataclass
class Dirichlet:
    """Prescribed displacement of one coordinate on a set of control points."""

    nodes: np.ndarray
    component: int
    value: object = _zero   # t -> displacement


class DofMap:
    def __init__(self, n_cp, conditions=()):
        self.n_cp = n_cp
        self.n_dof = 3 * n_cp
        self._prescribed = {}
        for cond in conditions:
            if cond.component not in (0, 1, 2):
                raise ValueError(f"component must be 0, 1 or 2, got {cond.component}")
            for node in np.atleast_1d(cond.nodes):
                dof = 3 * int(node) + cond.component
                if dof in self._prescribed:
                    logger.debug("dof %d prescribed twice, last condition wins", dof)
                self._prescribed[dof] = cond.value
        self.prescribed = np.array(sorted(self._prescribed), dtype=int)
        mask = np.ones(self.n_dof, dtype=bool)
        mask[self.prescribed] = False
        self.free = np.flatnonzero(mask)

    def prescribed_values(self, t):
        return np.array([self._prescribed[d](t) for d in self.prescribed], dtype=float)

    def apply(self, x, X, t):
        """Set prescribed coordinates of x to reference plus prescribed displacement."""
        flat = x.reshape(-1)
        flat[self.prescribed] = X.reshape(-1)[self.prescribed] + self.prescribed_values(t)
        return x


class TimeStepper:
    """Constant step size; n_steps * dt == t_end."""

    def __init__(self, t_end, dt=None, n_steps=None):
        if t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if n_steps is None:
            if dt is None or dt <= 0.0:
                raise ValueError("either a positive dt or n_steps is required")
            n_steps = max(1, int(round(t_end / dt)))
            if abs(n_steps * dt - t_end) > 1e-9 * t_end:
                logger.warning("dt = %g does not divide t_end = %g; using %d steps", dt, t_end, n_steps)
        self.t_end = float(t_end)
        self.n_steps = int(n_steps)
        self.dt = self.t_end / self.n_steps

    def steps(self):
        for n in range(1, self.n_steps + 1):
            yield n, n * self.dt, self.dt


@dataclass
class SolverSettings:
    rtol: float = 1e-9
    dx_tol: float = 1e-10
    max_iterations: int = 30
    divergence_window: int = 5
    threads: int = 1


@dataclass
class ShellProblem:
    mesh: object
    material: object
    dofs: DofMap
    stepper: TimeStepper
    loads: LoadSpec = field(default_factory=LoadSpec)
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        self.workspaces = [build_workspace(self.mesh, e, self.material) for e in self.mesh.elements]
        self.X = self.mesh.control_points.copy()
        self.x = self.X.copy()
        self.t = 0.0

    def dissipation(self):
        return sum(ws.dissipation() for ws in self.workspaces)


@dataclass
class Assembly:
    residual: np.ndarray      # full f_int - f_ext
    tangent: object           # csr matrix or None
    trial: list
    f_ext_norm: float


def _element_dofs(conn):
    return (3 * np.asarray(conn)[:, None] + np.arange(3)).reshape(-1)


def assemble(problem, x, load_values, dt, need_stiffness=True):
    """Global residual and sparse tangent of f(x) = f_int - f_ext."""

    def one(ws):
        x_e = x[ws.connectivity]
        res = evaluate_element(ws, x_e, problem.material, dt, need_stiffness)
        fe, ke = f_ext(ws, x_e, load_values, need_stiffness)
        k = None if not need_stiffness else res.k_int - ke
        return res.f_int, fe, k, res.trial

    threads = problem.settings.threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, problem.workspaces))
    else:
        results = [one(ws) for ws in problem.workspaces]

    n_dof = problem.dofs.n_dof
    f_int_g = np.zeros(n_dof)
    f_ext_g = np.zeros(n_dof)
    rows, cols, vals, trial = [], [], [], []
    for ws, (fi, fe, k, tr) in zip(problem.workspaces, results):
        dofs = _element_dofs(ws.connectivity)
        np.add.at(f_int_g, dofs, fi)
        np.add.at(f_ext_g, dofs, fe)
        trial.append(tr)
        if k is not None:
            rows.append(np.repeat(dofs, len(dofs)))
            cols.append(np.tile(dofs, len(dofs)))
            vals.append(k.ravel())
    tangent = None
    if need_stiffness:
        tangent = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_dof, n_dof)
        ).tocsr()
    free = problem.dofs.free
    return Assembly(f_int_g - f_ext_g, tangent, trial, float(np.linalg.norm(f_ext_g[free])))


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_norms: list = field(default_factory=list)
    correction_norms: list = field(default_factory=list)


class NewtonSystem:
    """Reduced system of one time step: fixed loads, prescribed values and step size."""

    def __init__(self, problem, t, dt):
        self.problem = problem
        self.t = t
        self.dt = dt
        self.loads = problem.loads.at(t)
        self.free = problem.dofs.free

    def evaluate(self, x, need_stiffness=True):
        return assemble(self.problem, x, self.loads, self.dt, need_stiffness)

    def tolerance(self, assembly):
        return self.problem.settings.rtol * max(1.0, assembly.f_ext_norm)


def newton_step(system, x, assembly):
    """One correction on the free dofs from an evaluated assembly."""
    free = system.free
    k_ff = assembly.tangent[free][:, free].tocsc()
    dx = spla.spsolve(k_ff, -assembly.residual[free])
    if not np.all(np.isfinite(dx)):
        raise SolverError("singular global tangent")
    x_new = x.copy()
    x_new.reshape(-1)[free] += dx
    return x_new, float(np.linalg.norm(dx))


def _diverging(norms, window):
    if len(norms) <= window:
        return False
    tail = norms[-window - 1:]
    return all(b > a for a, b in zip(tail, tail[1:]))


def newton_solve(system, x):
    settings = system.problem.settings
    report = NewtonReport()
    for _ in range(settings.max_iterations + 1):
        assembly = system.evaluate(x)
        r_norm = float(np.linalg.norm(assembly.residual[system.free]))
        report.residual_norms.append(r_norm)
        if r_norm <= system.tolerance(assembly):
            return x, assembly, report
        if _diverging(report.residual_norms, settings.divergence_window):
            raise DivergenceError(
                f"residual grew over {settings.divergence_window} iterations: {r_norm:.3e}"
            )
        if report.iterations == settings.max_iterations:
            break
        x, dx_norm = newton_step(system, x, assembly)
        report.iterations += 1
        report.correction_norms.append(dx_norm)
        logger.debug("t=%g iter %d |r|=%.3e |dx|=%.3e", system.t, report.iterations, r_norm, dx_norm)
        if dx_norm <= settings.dx_tol:
            assembly = system.evaluate(x, need_stiffness=False)
            report.residual_norms.append(float(np.linalg.norm(assembly.residual[system.free])))
            return x, assembly, report
    raise DivergenceError(
        f"no convergence in {settings.max_iterations} iterations, |r| = {report.residual_norms[-1]:.3e}"
    )


@dataclass
class StepRecord:
    step: int
    t: float
    iterations: int
    residual_norms: list
    dissipation: float


def solve_step(problem, step, t, dt):
    """Advance one step from the committed state; histories are committed on success."""
    x = problem.dofs.apply(problem.x.copy(), problem.X, t)
    system = NewtonSystem(problem, t, dt)
    try:
        x, assembly, report = newton_solve(system, x)
    except ShellError as exc:
        raise StepFailure(step, exc) from exc
    for ws, trial in zip(problem.workspaces, assembly.trial):
        ws.trial = trial
        ws.commit()
    problem.x = x
    problem.t = t
    return StepRecord(step, t, report.iterations, report.residual_norms, problem.dissipation())


def run(problem, on_step=None):
    """Whole time history; ``on_step(problem, record)`` is called after every commit."""
    records = []
    logger.info(
        "running %d steps of dt=%g on %d elements", problem.stepper.n_steps, problem.stepper.dt,
        len(problem.workspaces),
    )
    for step, t, dt in problem.stepper.steps():
        record = solve_step(problem, step, t, dt)
        records.append(record)
        logger.info(
            "step %d t=%g converged in %d iterations, |r| = %.3e", step, t, record.iterations,
            record.residual_norms[-1],
        )
        if on_step is not None:
            on_step(problem, record)
    return records
