"""Adaptive Runge-Kutta integration of the master equation."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, RK45
from scipy.sparse.linalg import expm_multiply

from ..hilbert import (
    CompositeSpace,
    cavity_annihilation,
    DensityMatrix,
    InvariantError,
    Operator,
)
from .model import ModelParams, generator

log = logging.getLogger(__name__)

# Output-state bounds enforced during evolution.
TRACE_TOL = 1e-8
HERM_TOL = 1e-9
POS_TOL = 1e-8
# Cavity truncation monitor: summed population of the two highest Fock levels.
TRUNCATION_WARN = 1e-6


class IntegrationError(RuntimeError):
    """The adaptive integrator failed; carries the time of failure."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time


class TruncationWarning(UserWarning):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    states: list[DensityMatrix] | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")


def standard_observables(space: CompositeSpace) -> dict[str, np.ndarray]:
    """Diagonal weights for n1, n1^2, a^dag a and the lowering operator."""
    n1 = np.repeat(np.arange(space.atom_dim, dtype=float), space.cav_dim)
    na = np.tile(np.arange(space.cav_dim, dtype=float), space.atom_dim)
    return {
        "n1": np.diag(n1),
        "n1_sq": np.diag(n1 ** 2),
        "n_cav": np.diag(na),
        "a": cavity_annihilation(space).matrix,
    }


def _expect(rho: np.ndarray, op: np.ndarray) -> complex:
    return complex(np.sum(rho.T * op))


def _top_level_population(rho: np.ndarray, space: CompositeSpace) -> float:
    if space.cav_dim < 3:
        # every level counts as "top" for tiny cutoffs; nothing to monitor
        return 0.0
    diag = np.real(np.diag(rho)).reshape(space.atom_dim, space.cav_dim)
    return float(diag[:, -2:].sum())


class StateRecorder:
    """Evaluates observables and invariant bounds on each output state."""

    def __init__(self, space: CompositeSpace, observables: dict | None, store_states: bool,
                 check: bool = True):
        self.space = space
        ops = standard_observables(space)
        for name, op in (observables or {}).items():
            ops[name] = op.matrix if isinstance(op, Operator) else np.asarray(op)
        self.ops = ops
        self.values = {k: [] for k in ops}
        self.store_states = store_states
        self.check = check
        self.states: list[DensityMatrix] = []
        self.worst = {"trace_error": 0.0, "hermiticity_error": 0.0, "min_eigenvalue": np.inf}
        self.max_top_population = 0.0

    def record(self, t: float, rho: np.ndarray):
        if self.check:
            dm = DensityMatrix(self.space, rho, validate=False)
            d = dm.diagnostics()
            self.worst["trace_error"] = max(self.worst["trace_error"], d["trace_error"])
            self.worst["hermiticity_error"] = max(self.worst["hermiticity_error"], d["hermiticity_error"])
            self.worst["min_eigenvalue"] = min(self.worst["min_eigenvalue"], d["min_eigenvalue"])
            bad = dm.violations(TRACE_TOL, HERM_TOL, POS_TOL)
            if bad:
                raise InvariantError(f"at t = {t:.6g}: " + "; ".join(bad))
        for name, op in self.ops.items():
            self.values[name].append(_expect(rho, op))
        self.max_top_population = max(self.max_top_population, _top_level_population(rho, self.space))
        if self.store_states:
            self.states.append(DensityMatrix(self.space, rho.copy(), validate=False))

    def finish(self, times) -> Trajectory:
        obs = {}
        for name, vals in self.values.items():
            arr = np.array(vals)
            obs[name] = arr if name == "a" or np.any(np.abs(arr.imag) > 1e-10) else arr.real
        diagnostics = {
            "invariants": dict(self.worst) if self.check else None,
            "max_top_fock_population": self.max_top_population,
            "truncation_flag": self.max_top_population > TRUNCATION_WARN,
        }
        if diagnostics["truncation_flag"]:
            warnings.warn(
                f"population of the two highest Fock levels reached {self.max_top_population:.2e}; "
                f"raise cav_cutoff",
                TruncationWarning,
                stacklevel=3,
            )
        return Trajectory(times, obs, self.states if self.store_states else None, diagnostics)


_METHODS = {"DOP853": DOP853, "RK45": RK45}
METHODS = (*_METHODS, "expm")


def evolve_master(
    rho0: DensityMatrix,
    t_grid,
    params: ModelParams,
    driven: bool = False,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    method: str = "DOP853",
    store_states: bool = True,
    observables: dict | None = None,
    check: bool = True,
) -> Trajectory:
    """Integrate the master equation and sample it on ``t_grid``.

    The first grid time is the initial time.  Output states are checked
    against trace, Hermiticity and positivity bounds as they are produced
    (``check=False`` skips the eigenvalue work), and an
    :class:`InvariantError` aborts the run at the offending time.

    Parameters
    ----------
    rho0 : DensityMatrix
        Initial joint state.
    t_grid : array_like
        Strictly increasing output times.
    params : ModelParams
    driven : bool
        Use the pump-frame generator with ``eta`` and ``delta_c``.
    rtol, atol : float
        Integrator tolerances on the vectorised density matrix.
    method : {"DOP853", "RK45", "expm"}
        ``"expm"`` skips Runge-Kutta and applies ``exp(L dt)`` to the
        vectorised state with :func:`scipy.sparse.linalg.expm_multiply`;
        exact up to rounding for these time-independent generators and
        several times faster on large spaces.  ``rtol``/``atol`` are unused.
    store_states : bool
        Keep every output state (memory ``len(t_grid) * dim**2``).
    observables : dict, optional
        Extra ``name -> Operator`` expectations on top of ``n1``, ``n1_sq``,
        ``n_cav`` and ``a``.

    Returns
    -------
    Trajectory
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a non-empty strictly increasing 1-D sequence")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    space = rho0.space
    gen = generator(space, params, bool(driven))
    d = space.total_dim
    rec = StateRecorder(space, observables, store_states, check)

    rho_init = np.array(rho0.matrix, dtype=complex)
    rec.record(t_grid[0], rho_init)
    nfev = 0
    nsteps = 0
    if t_grid.size > 1 and method == "expm":
        nsteps = _propagate_expm(gen, rho_init.reshape(-1), t_grid, rec)
    elif t_grid.size > 1:
        def rhs(t, y):
            return gen.apply(y.reshape(d, d), hermitian=True).reshape(-1)

        # Restart at every output time instead of using dense output: the
        # interpolant is far less accurate than the steps and breaks
        # positivity of nearly pure states.
        y = rho_init.reshape(-1)
        h_next = None
        for k in range(1, t_grid.size):
            solver = _METHODS[method](rhs, t_grid[k - 1], y, t_grid[k], rtol=rtol, atol=atol,
                                      first_step=h_next)
            h_max = 0.0
            while solver.status == "running":
                msg = solver.step()
                nsteps += 1
                if solver.status == "failed":
                    raise IntegrationError(f"integrator failure: {msg}", solver.t)
                if solver.status == "running":
                    h_max = max(h_max, solver.step_size)
            nfev += solver.nfev
            if h_max > 0:
                h_next = min(h_max, t_grid[min(k + 1, t_grid.size - 1)] - t_grid[k] or h_max)
            y = solver.y
            rec.record(t_grid[k], y.reshape(d, d))
    traj = rec.finish(t_grid)
    traj.diagnostics.update({"nfev": int(nfev), "nsteps": int(nsteps), "rtol": rtol,
                             "atol": atol, "method": method, "driven": bool(driven)})
    log.debug("master equation: %d steps, %d rhs evaluations", nsteps, nfev)
    return traj


def _propagate_expm(gen, y, t_grid, rec) -> int:
    """Record ``exp(L (t - t0)) y`` on ``t_grid``; returns the number of propagation calls."""
    s = gen.superoperator()
    d = gen.dim
    dt = np.diff(t_grid)
    if np.allclose(dt, dt[0], rtol=1e-12, atol=0.0):
        ys = expm_multiply(s, y, start=t_grid[0], stop=t_grid[-1], num=t_grid.size, endpoint=True)
        for t, yk in zip(t_grid[1:], ys[1:]):
            rec.record(t, yk.reshape(d, d))
        return 1
    for t, h in zip(t_grid[1:], dt):
        y = expm_multiply(s * h, y)
        rec.record(t, y.reshape(d, d))
    return dt.size
