"""Monte-Carlo wave-function (quantum jump) unravelling of the master equation.

Between jumps each trajectory follows ``exp(-i K t)`` with the non-Hermitian
``K`` of :class:`~bjjprobe.dynamics.model.Generator`; the generator is
time-independent in both frames, so the no-jump evolution is exact and only
the jump times are found numerically (root of ``|psi(t)|^2 = r``).

Trajectory ``j`` draws from its own stream ``SeedSequence(seed).spawn(n)[j]``,
so results do not depend on chunking or on how many trajectories are run
after it.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import eig, expm
from scipy.optimize import brentq

from ..hilbert import CompositeSpace, DensityMatrix
from .master import IntegrationError, StateRecorder, Trajectory
from .model import ModelParams, generator

log = logging.getLogger(__name__)

NORM_FLOOR = 1e-280


class _NoJumpPropagator:
    """``exp(-i K tau)`` for arbitrary ``tau``; eigenbasis when well conditioned."""

    def __init__(self, k: np.ndarray):
        self.k = k
        self._cache: dict[float, np.ndarray] = {}
        self.eigen = None
        w, v = eig(k)
        if np.linalg.cond(v) < 1e6:
            vinv = np.linalg.inv(v)
            if np.allclose(v @ np.diag(w) @ vinv, k, atol=1e-10 * max(1.0, np.abs(k).max())):
                self.eigen = (w, v, vinv)

    def matrix(self, tau: float) -> np.ndarray:
        key = float(tau)
        if key not in self._cache:
            if self.eigen is not None:
                w, v, vinv = self.eigen
                self._cache[key] = (v * np.exp(-1j * w * tau)) @ vinv
            else:
                self._cache[key] = expm(-1j * self.k * tau)
            if len(self._cache) > 64:
                self._cache.pop(next(iter(self._cache)))
        return self._cache[key]

    def apply(self, tau: float, psi: np.ndarray) -> np.ndarray:
        if tau == 0:
            return psi.copy()
        if self.eigen is not None:
            w, v, vinv = self.eigen
            return v @ (np.exp(-1j * w * tau) * (vinv @ psi))
        return expm(-1j * self.k * tau) @ psi


class _Trajectory:
    __slots__ = ("rng", "threshold", "jumps")

    def __init__(self, seq: np.random.SeedSequence):
        self.rng = np.random.Generator(np.random.PCG64(seq))
        self.threshold = self.draw()
        self.jumps = 0

    def draw(self) -> float:
        # (0, 1]: a zero threshold would never trigger
        return 1.0 - self.rng.random()


def _apply_jump(psi, jump_ops, traj: _Trajectory):
    weights = np.array([rate * np.vdot(l @ psi, l @ psi).real for rate, l in jump_ops])
    total = weights.sum()
    if total <= 0:
        raise IntegrationError("norm crossed the jump threshold with zero jump rate", np.nan)
    idx = int(np.searchsorted(np.cumsum(weights) / total, traj.rng.random(), side="right"))
    idx = min(idx, len(jump_ops) - 1)
    out = jump_ops[idx][1] @ psi
    traj.jumps += 1
    traj.threshold = traj.draw()
    return out / np.linalg.norm(out)


def _resolve_interval(prop, jump_ops, psi, dt, traj: _Trajectory, t_start: float):
    """Propagate one column across ``dt`` resolving every jump inside it."""
    remaining = dt
    while True:
        end = prop.apply(remaining, psi)
        n_end = np.vdot(end, end).real
        if n_end >= traj.threshold:
            return end
        n_start = np.vdot(psi, psi).real
        if n_start < NORM_FLOOR:
            raise IntegrationError("norm underflow between jumps", t_start + dt - remaining)
        r = traj.threshold

        def f(tau):
            x = prop.apply(tau, psi)
            return np.vdot(x, x).real - r

        if n_start <= r:
            tau = 0.0
        else:
            tau = brentq(f, 0.0, remaining, xtol=1e-13 * max(1.0, remaining), rtol=1e-12)
        psi = _apply_jump(prop.apply(tau, psi), jump_ops, traj)
        remaining -= tau


def quantum_jump_evolve(
    psi0,
    t_grid,
    params: ModelParams,
    space: CompositeSpace,
    driven: bool = False,
    n_traj: int = 100,
    seed: int = 0,
    chunk: int = 500,
    store_states: bool = True,
    observables: dict | None = None,
    checkpoints=(),
) -> Trajectory:
    """Ensemble-averaged quantum-jump evolution.

    ``checkpoints`` lists trajectory counts ``n < n_traj`` at which the partial
    ensemble average is also kept (``diagnostics["partial_states"][n]``); the
    first ``n`` trajectories are exactly those of a run with ``n_traj=n``.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a non-empty strictly increasing 1-D sequence")
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    if psi0.size != space.total_dim:
        raise ValueError("psi0 does not match the space dimension")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("psi0 must be normalised")

    gen = generator(space, params, bool(driven))
    prop = _NoJumpPropagator(gen.k_dense)
    jump_ops = [(rate, l.toarray()) for rate, l, _ in gen.jumps]
    d, nt = space.total_dim, t_grid.size
    seqs = np.random.SeedSequence(seed).spawn(n_traj)
    checkpoints = sorted({int(c) for c in checkpoints if 0 < int(c) < n_traj})

    bounds = sorted(set(range(0, n_traj, chunk)) | set(checkpoints) | {n_traj})
    acc = np.zeros((nt, d, d), dtype=complex)
    partial = {}
    total_jumps = 0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        trajs = [_Trajectory(s) for s in seqs[lo:hi]]
        psi = np.repeat(psi0[:, None], hi - lo, axis=1)
        phi = psi / np.linalg.norm(psi, axis=0)
        acc[0] += phi @ phi.conj().T
        for k in range(1, nt):
            dt = t_grid[k] - t_grid[k - 1]
            new = prop.matrix(dt) @ psi
            norms = np.einsum("ij,ij->j", new.conj(), new).real
            thresholds = np.array([tr.threshold for tr in trajs])
            for j in np.flatnonzero(norms < thresholds):
                new[:, j] = _resolve_interval(prop, jump_ops, psi[:, j], dt, trajs[j], t_grid[k - 1])
            norms = np.linalg.norm(new, axis=0)
            if np.any(norms**2 < NORM_FLOOR):
                raise IntegrationError("norm underflow between jumps", t_grid[k])
            psi = new
            phi = psi / norms
            acc[k] += phi @ phi.conj().T
        total_jumps += sum(tr.jumps for tr in trajs)
        if hi in checkpoints:
            partial[hi] = [m / hi for m in acc]

    rec = StateRecorder(space, observables, store_states, check=True)
    for k in range(nt):
        rec.record(t_grid[k], acc[k] / n_traj)
    traj = rec.finish(t_grid)
    traj.diagnostics.update({
        "n_traj": n_traj,
        "seed": seed,
        "n_jumps": int(total_jumps),
        "propagator": "eigen" if prop.eigen is not None else "expm",
        "partial_states": partial,
        "driven": bool(driven),
    })
    return traj
