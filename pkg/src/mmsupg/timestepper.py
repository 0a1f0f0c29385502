"""Theta-scheme time integration and the alternating mesh/solution loop."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import metric as mm
from .assembly import apply_dirichlet, assemble
from .errors import AdaptationFailure, InvalidArgumentError, MmsupgError
from .mesh import generate_uniform
from .sparse import matvec, solve

log = logging.getLogger(__name__)

METHODS = ("FM-FEM", "FM-SUPG", "MM-FEM", "MM-SUPG")


def normalize_method(name):
    m = str(name).upper().replace("_", "-")
    if m not in METHODS:
        raise InvalidArgumentError(f"unknown method {name!r}; expected one of {METHODS}")
    return m


@dataclass
class RunConfig:
    method: str = "MM-SUPG"
    n: int = 16
    dt: float = 1e-3
    T: float = 0.5
    theta: float = 0.5
    mmpde: mm.MmpdeConfig = field(default_factory=mm.MmpdeConfig)
    output_every: int = 0
    init_adapt_cycles: int = 5

    def __post_init__(self):
        self.method = normalize_method(self.method)
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidArgumentError("theta must lie in [0, 1]")
        if self.dt <= 0.0:
            raise InvalidArgumentError("dt must be positive")
        if self.T < self.dt:
            raise InvalidArgumentError("T must be at least dt")
        if self.n < 1:
            raise InvalidArgumentError("n must be >= 1")
        if self.init_adapt_cycles < 0:
            raise InvalidArgumentError("init_adapt_cycles must be non-negative")

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    @property
    def moving(self):
        return self.method.startswith("MM")

    @property
    def supg(self):
        return self.method.endswith("SUPG")


@dataclass
class SolutionState:
    mesh: object
    u: np.ndarray
    t: float
    step: int = 0


@dataclass
class RunResult:
    history: List[SolutionState]
    mmpde_stats: list
    max_abs: float
    steps: int
    rank_deficient: int = 0

    @property
    def final(self):
        return self.history[-1]


def theta_rhs(mass, a_m, f_m, f_mp1, u_m, dt, theta):
    """theta f^{m+1} + (1 - theta) f^m + (M/dt - (1 - theta) A^m) u^m."""
    r = matvec(mass, u_m) / dt
    if theta != 1.0:
        r = r - (1.0 - theta) * matvec(a_m, u_m) + (1.0 - theta) * np.asarray(f_m)
    return r + theta * np.asarray(f_mp1)


def theta_matrix(mass, a_mp1, dt, theta):
    return mass * (1.0 / dt) + a_mp1 * theta


def theta_step(mass, a_m, a_mp1, f_m, f_mp1, u_m, dt, theta, bc=None):
    """Solve (M/dt + theta A^{m+1}) u^{m+1} = theta f^{m+1} + (1-theta) f^m
    + (M/dt - (1-theta) A^m) u^m.

    ``bc`` is an assembled system whose Dirichlet data are imposed on the
    combined matrix before solving; pass None when there are no constraints.
    """
    lhs = theta_matrix(mass, a_mp1, dt, theta)
    rhs = theta_rhs(mass, a_m, f_m, f_mp1, u_m, dt, theta)
    if bc is not None:
        lhs, rhs = apply_dirichlet(bc, lhs, rhs)
    return solve(lhs, rhs)


def _nodal(fn, mesh):
    return np.asarray(fn(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float) * np.ones(mesh.n_vertices)


def adapt_mesh(mesh, u, cfg, stats_list=None, rank=None):
    """One alternating adaptation: metric from ``u`` then MMPDE sub-steps."""
    metric = mm.build_metric(mesh, u, rank)
    stats = mm.StepStats()
    new = mm.mmpde_step(mesh, metric, cfg, stats)
    stats.min_area = float(new.areas().min())
    if stats_list is not None:
        stats_list.append(stats)
    return new


def initial_mesh(problem, cfg, stats_list=None, rank=None):
    """Uniform mesh, adapted to the analytic initial condition for MM methods."""
    mesh = generate_uniform(cfg.n)
    if cfg.moving:
        for _ in range(cfg.init_adapt_cycles):
            mesh = adapt_mesh(mesh, _nodal(problem.u0, mesh), cfg.mmpde, stats_list, rank)
    return mesh


def run_simulation(problem, cfg, observer: Optional[Callable] = None):
    """Integrate from t = 0 to T and return the recorded states.

    States are kept at t = 0, every ``cfg.output_every`` steps (when > 0)
    and at the final time. ``observer(state)`` is called for each of them.
    """
    stats_list, rank = [], {}
    mesh = initial_mesh(problem, cfg, stats_list, rank)
    u = _nodal(problem.u0, mesh)
    history = []

    def record(state):
        history.append(state)
        if observer is not None:
            observer(state)

    record(SolutionState(mesh, u.copy(), 0.0, 0))
    max_abs = float(np.abs(u).max())
    nsteps = cfg.n_steps
    sys_next = None
    for m in range(nsteps):
        t_m, t_mp1 = m * cfg.dt, (m + 1) * cfg.dt
        if cfg.moving:
            try:
                new_mesh = adapt_mesh(mesh, u, cfg.mmpde, stats_list, rank)
            except AdaptationFailure as exc:
                exc.step = m
                raise
            except MmsupgError as exc:
                raise AdaptationFailure(str(exc), step=m) from exc
            u = mm.interpolate(mesh, u, new_mesh)
            mesh = new_mesh
            sys_m = assemble(mesh, problem, t_m, cfg.supg)
        else:
            sys_m = sys_next if sys_next is not None else assemble(mesh, problem, t_m, cfg.supg)
        sys_mp1 = assemble(mesh, problem, t_mp1, cfg.supg)
        u = theta_step(sys_mp1.mass, sys_m.operator, sys_mp1.operator, sys_m.load,
                       sys_mp1.load, u, cfg.dt, cfg.theta, bc=sys_mp1)
        sys_next = sys_mp1
        max_abs = max(max_abs, float(np.abs(u).max()))
        last = m == nsteps - 1
        if last or (cfg.output_every and (m + 1) % cfg.output_every == 0):
            record(SolutionState(mesh, u.copy(), t_mp1, m + 1))
    return RunResult(history, stats_list, max_abs, nsteps, rank.get("rank_deficient", 0))
