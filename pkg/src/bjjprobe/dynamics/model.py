"""Model parameters, Hamiltonians and the Lindblad generator."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.sparse.linalg import spsolve

from ..hilbert import (
    CompositeSpace,
    DensityMatrix,
    Operator,
    _atomic_hop,
    _atomic_onsite,
    _cavity_lowering,
    cavity_annihilation,
    cavity_number,
    identity,
    number_op_well1,
    onsite_interaction_op,
    tunneling_op,
)


@dataclass(frozen=True)
class ModelParams:
    """Physical rates in units of a user-chosen reference rate.

    ``e0`` is the single-atom well energy (figure captions call it
    ``omega_a``).  ``omega_c`` only enters lab-frame bookkeeping; the
    generators are written in the cavity frame (undriven) or the pump frame
    (driven), where only ``delta_c = omega_c - omega_p`` appears.
    """

    e0: float = 0.0
    kappa: float = 0.0
    r_tun: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0
    delta_c: float = 0.0
    omega_c: float = 0.0
    omega_p: float = 0.0
    n_thermal: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise TypeError(f"{f.name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v}")
            object.__setattr__(self, f.name, float(v))
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.n_thermal < 0:
            raise ValueError(f"n_thermal must be non-negative, got {self.n_thermal}")

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def hamiltonian_atomic(space: CompositeSpace, params: ModelParams) -> Operator:
    """``E0 N + kappa (n1(n1-1) + n2(n2-1)) + R (c1^dag c2 + h.c.)`` on the N-atom sector."""
    return (params.e0 * space.n_atoms) * identity(space) \
        + params.kappa * onsite_interaction_op(space) \
        + params.r_tun * tunneling_op(space)


def hamiltonian_interaction(space: CompositeSpace, params: ModelParams) -> Operator:
    return params.beta * (number_op_well1(space) @ cavity_number(space))


def hamiltonian(space: CompositeSpace, params: ModelParams, driven: bool) -> Operator:
    """Full coherent part of the generator.

    Undriven: cavity frame, ``H_A + H_I``.  Driven: pump frame,
    ``H_A + H_I + delta_c a^dag a + eta (a^dag + a)``.
    """
    h = hamiltonian_atomic(space, params) + hamiltonian_interaction(space, params)
    if driven:
        a = cavity_annihilation(space)
        h = h + params.delta_c * cavity_number(space) + params.eta * (a + a.dag())
    return h


def jump_operators(space: CompositeSpace, params: ModelParams) -> list[tuple[float, Operator]]:
    """``(rate, L)`` pairs: ``gamma (1+N_c)`` with ``a`` and ``gamma N_c`` with ``a^dag``."""
    a = cavity_annihilation(space)
    out = []
    if params.gamma > 0:
        out.append((params.gamma * (1.0 + params.n_thermal), a))
        if params.n_thermal > 0:
            out.append((params.gamma * params.n_thermal, a.dag()))
    return out


class Generator:
    """Lindblad generator of the junction-cavity model.

    Written as ``-i(K rho - rho K^dag) + sum_k g_k L_k rho L_k^dag`` with the
    non-Hermitian ``K = H - (i/2) sum_k g_k L_k^dag L_k``.  :meth:`apply`
    works on the ``(atom, cavity, atom, cavity)`` tensor view of ``rho``:
    everything diagonal in the number basis collapses into one elementwise
    factor, and the off-diagonal pieces (tunnelling, pump, jumps) are
    index shifts.  :meth:`superoperator` and :attr:`k` give the same map as
    sparse matrices for solvers and cross-checks.
    """

    def __init__(self, space: CompositeSpace, params: ModelParams, driven: bool):
        self.space = space
        self.params = params
        self.driven = driven
        self.dim = space.total_dim
        h = _sparse_hamiltonian(space, params, driven)
        k = h.astype(complex)
        self.jumps = []
        for rate, op in jump_operators(space, params):
            l = sp.csr_matrix(op.matrix)
            k = k - 0.5j * rate * (l.conj().T @ l)
            self.jumps.append((rate, l, l.conj().tocsr()))
        self.k = sp.csr_matrix(k)
        self.k_conj = sp.csr_matrix(k.conj())
        self._super = None
        self._build_structured()

    def _build_structured(self):
        p, space = self.params, self.space
        na, nc = space.dims
        n1 = np.arange(na, dtype=float)[:, None]
        nphot = np.arange(nc, dtype=float)
        # diagonal of a a^dag in the truncated space (zero on the top level)
        aad = np.append(nphot[1:], 0.0)
        energy = p.kappa * _atomic_onsite(space.n_atoms)[:, None] + p.beta * n1 * nphot[None, :] \
            + p.e0 * space.n_atoms + (p.delta_c * nphot[None, :] if self.driven else 0.0)
        loss = 0.5 * p.gamma * ((1.0 + p.n_thermal) * nphot + p.n_thermal * aad)
        kdiag = energy - 1j * loss[None, :]
        self._diag_factor = np.ascontiguousarray(
            -1j * kdiag[:, :, None, None] + 1j * kdiag.conj()[None, None, :, :])
        k = np.arange(na - 1, dtype=float)
        self._hop = p.r_tun * np.sqrt((k + 1.0) * (space.n_atoms - k))
        self._pump = p.eta if self.driven else 0.0
        s = np.sqrt(np.arange(1, nc, dtype=float))
        self._sqrt_n = s
        self._down = p.gamma * (1.0 + p.n_thermal) * np.outer(s, s)
        self._up = p.gamma * p.n_thermal * np.outer(s, s)

    @property
    def k_dense(self) -> np.ndarray:
        return self.k.toarray()

    def apply(self, rho: np.ndarray, hermitian: bool = False) -> np.ndarray:
        """Generator acting on the dense square matrix ``rho``.

        ``hermitian`` is accepted for call-site clarity only; the fused kernel
        handles arbitrary matrices.
        """
        na, nc = self.space.dims
        r = np.ascontiguousarray(rho, dtype=complex).reshape(na, nc, na, nc)
        out = np.empty_like(r)
        _apply_kernel(r, out, self._diag_factor, self._hop, complex(self._pump),
                      self._sqrt_n, self._down, self._up)
        return out.reshape(rho.shape)

    def apply_sparse(self, rho: np.ndarray) -> np.ndarray:
        """Reference evaluation with the sparse ``K`` and jump matrices."""
        out = -1j * (self.k @ rho - (self.k_conj @ rho.T).T)
        for rate, l, l_conj in self.jumps:
            out += rate * (l_conj @ (l @ rho).T).T
        return out

    def superoperator(self) -> sp.csr_matrix:
        """Row-major vectorised generator: ``vec(A rho B) = (A kron B^T) vec(rho)``."""
        if self._super is None:
            self._super = self._build_superoperator()
        return self._super

    def _build_superoperator(self) -> sp.csr_matrix:
        eye = sp.identity(self.dim, format="csr", dtype=complex)
        s = -1j * (sp.kron(self.k, eye) - sp.kron(eye, self.k_conj))
        for rate, l, l_conj in self.jumps:
            s = s + rate * sp.kron(l, l_conj)
        return sp.csr_matrix(s)


def _sparse_hamiltonian(space: CompositeSpace, params: ModelParams, driven: bool) -> sp.csr_matrix:
    na, nc = space.dims
    n1 = np.arange(na, dtype=float)
    nphot = np.arange(nc, dtype=float)
    ia, ic = sp.identity(na, format="csr"), sp.identity(nc, format="csr")
    h_atom = sp.csr_matrix(params.kappa * np.diag(_atomic_onsite(space.n_atoms))
                           + params.r_tun * _atomic_hop(space.n_atoms)
                           + params.e0 * space.n_atoms * np.eye(na))
    diag = params.beta * np.kron(n1, nphot)
    h = sp.kron(h_atom, ic) + sp.diags(diag)
    if driven:
        a = _cavity_lowering(space.cav_cutoff)
        h_cav = params.delta_c * np.diag(nphot) + params.eta * (a + a.T)
        h = h + sp.kron(ia, sp.csr_matrix(h_cav))
    return sp.csr_matrix(h, dtype=complex)


@njit(cache=True)
def _apply_kernel(r, out, diag, hop, pump, sq, down, up):
    na, nc = r.shape[0], r.shape[1]
    for i in range(na):
        for c in range(nc):
            for j in range(na):
                for d in range(nc):
                    v = diag[i, c, j, d] * r[i, c, j, d]
                    # -i [R hop (x) 1, rho]
                    comm = 0j
                    if i > 0:
                        comm += hop[i - 1] * r[i - 1, c, j, d]
                    if i < na - 1:
                        comm += hop[i] * r[i + 1, c, j, d]
                    if j > 0:
                        comm -= hop[j - 1] * r[i, c, j - 1, d]
                    if j < na - 1:
                        comm -= hop[j] * r[i, c, j + 1, d]
                    # -i [eta (a + a^dag), rho]
                    if pump != 0:
                        if c > 0:
                            comm += pump * sq[c - 1] * r[i, c - 1, j, d]
                        if c < nc - 1:
                            comm += pump * sq[c] * r[i, c + 1, j, d]
                        if d > 0:
                            comm -= pump * sq[d - 1] * r[i, c, j, d - 1]
                        if d < nc - 1:
                            comm -= pump * sq[d] * r[i, c, j, d + 1]
                    v += -1j * comm
                    # g(1+N_c) a rho a^dag and g N_c a^dag rho a
                    if c < nc - 1 and d < nc - 1:
                        v += down[c, d] * r[i, c + 1, j, d + 1]
                    if c > 0 and d > 0:
                        v += up[c - 1, d - 1] * r[i, c - 1, j, d - 1]
                    out[i, c, j, d] = v


@lru_cache(maxsize=64)
def generator(space: CompositeSpace, params: ModelParams, driven: bool) -> Generator:
    return Generator(space, params, driven)


def lindblad_rhs(rho: DensityMatrix | np.ndarray, params: ModelParams, driven: bool = False,
                 space: CompositeSpace | None = None) -> np.ndarray:
    """``d rho / dt`` for the undriven (cavity-frame) or driven (pump-frame) model."""
    if isinstance(rho, DensityMatrix):
        if space is not None and space != rho.space:
            raise ValueError("space argument disagrees with the density matrix")
        space, m = rho.space, rho.matrix
    else:
        if space is None:
            raise ValueError("a bare matrix needs an explicit space")
        m = np.asarray(rho, dtype=complex)
    if m.shape != (space.total_dim, space.total_dim):
        raise ValueError(f"rho has shape {m.shape}, space needs {space.total_dim}")
    return generator(space, params, bool(driven)).apply(m)


def expectation(rho: DensityMatrix, op: Operator) -> complex:
    """``Tr[rho O]``."""
    if rho.space != op.space:
        raise ValueError("state and operator live on different spaces")
    return rho.expect(op)


def steady_state(space: CompositeSpace, params: ModelParams, driven: bool = True) -> DensityMatrix:
    """Unique stationary state from the generator's null space (trace-1 row replaced)."""
    d = space.total_dim
    s = generator(space, params, bool(driven)).superoperator().tolil(copy=True)
    b = np.zeros(d * d, dtype=complex)
    # replace the first equation by Tr rho = 1
    s[0, :] = 0
    s[0, np.arange(d) * (d + 1)] = 1.0
    b[0] = 1.0
    rho = spsolve(sp.csc_matrix(s), b).reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(space, rho / np.trace(rho).real)
