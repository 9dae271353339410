"""Composite Hilbert space of the fixed-N two-mode junction and the cavity mode.

Basis states are ``|n1, N - n1, n_a>`` ordered atomic-major:
``index = n1 * cav_dim + n_a``.  Only the N-atom sector of the junction is
represented, so single-mode ladder operators never appear on their own.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

__all__ = [
    "CompositeSpace",
    "Operator",
    "DensityMatrix",
    "InvariantError",
    "build_space",
    "number_op_well1",
    "tunneling_op",
    "onsite_interaction_op",
    "cavity_annihilation",
    "cavity_number",
    "embed",
    "identity",
    "fock_state",
    "coherent_amplitudes",
    "product_state",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


class InvariantError(ValueError):
    """A density matrix violated trace, Hermiticity or positivity bounds."""


@dataclass(frozen=True)
class CompositeSpace:
    n_atoms: int
    cav_cutoff: int

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or int(self.cav_cutoff) != self.cav_cutoff:
            raise TypeError("n_atoms and cav_cutoff must be integers")
        if self.n_atoms < 0 or self.cav_cutoff < 0:
            raise ValueError(
                f"n_atoms and cav_cutoff must be non-negative, got "
                f"({self.n_atoms}, {self.cav_cutoff})"
            )

    @property
    def atom_dim(self) -> int:
        return self.n_atoms + 1

    @property
    def cav_dim(self) -> int:
        return self.cav_cutoff + 1

    @property
    def total_dim(self) -> int:
        return self.atom_dim * self.cav_dim

    @property
    def dims(self) -> tuple[int, int]:
        return self.atom_dim, self.cav_dim

    def index(self, n1: int, n_a: int) -> int:
        """Basis index of ``|n1, N - n1, n_a>``."""
        if not (0 <= n1 <= self.n_atoms and 0 <= n_a <= self.cav_cutoff):
            raise IndexError(f"label ({n1}, {n_a}) outside the space")
        return n1 * self.cav_dim + n_a

    def label(self, index: int) -> tuple[int, int]:
        """Inverse of :meth:`index`: returns ``(n1, n_a)``."""
        if not 0 <= index < self.total_dim:
            raise IndexError(f"index {index} outside the space")
        return divmod(index, self.cav_dim)

    def cavity_space(self) -> "CompositeSpace":
        """The bare-cavity space (empty junction) with the same cutoff."""
        return CompositeSpace(0, self.cav_cutoff)


def build_space(n_atoms: int, cav_cutoff: int) -> CompositeSpace:
    return CompositeSpace(n_atoms, cav_cutoff)


def _as_square(matrix, dim: int) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"matrix shape {m.shape} does not match space dimension {dim}")
    return m


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on a :class:`CompositeSpace`."""

    space: CompositeSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _as_square(self.matrix, self.space.total_dim)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise ValueError("operators live on different spaces")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return Operator(self.space, scalar * self.matrix)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other)

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def commutator(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix @ other.matrix - other.matrix @ self.matrix)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density matrix with checked invariants.

    Construction runs :meth:`violations` and raises :class:`InvariantError` when any
    bound is exceeded; pass ``validate=False`` to skip (for intermediate
    objects such as finite-difference stencils).
    """

    space: CompositeSpace
    matrix: np.ndarray = field(repr=False)
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = _as_square(self.matrix, self.space.total_dim)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.validate:
            problems = self.violations()
            if problems:
                raise InvariantError("; ".join(problems))

    @classmethod
    def from_ket(cls, space: CompositeSpace, ket) -> "DensityMatrix":
        psi = np.asarray(ket, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(space, np.outer(psi, psi.conj()))

    def diagnostics(self) -> dict:
        m = self.matrix
        herm = float(np.max(np.abs(m - m.conj().T), initial=0.0))
        evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        return {
            "trace_error": float(abs(np.trace(m) - 1.0)),
            "hermiticity_error": herm,
            "min_eigenvalue": float(evals[0]) if evals.size else 0.0,
        }

    def violations(self, trace_tol=TRACE_TOL, herm_tol=HERMITICITY_TOL,
                   pos_tol=POSITIVITY_TOL) -> list[str]:
        d = self.diagnostics()
        out = []
        if d["trace_error"] > trace_tol:
            out.append(f"trace deviates from 1 by {d['trace_error']:.3e}")
        if d["hermiticity_error"] > herm_tol:
            out.append(f"Hermiticity error {d['hermiticity_error']:.3e}")
        if d["min_eigenvalue"] < -pos_tol:
            out.append(f"minimum eigenvalue {d['min_eigenvalue']:.3e}")
        return out

    def expect(self, op) -> complex:
        m = op.matrix if isinstance(op, Operator) else np.asarray(op)
        return complex(np.sum(self.matrix.T * m))

    def purity(self) -> float:
        return float(np.real(np.sum(self.matrix * self.matrix.T)))


# -- atomic factor (dimension N+1) -------------------------------------------

def _atomic_n1(n_atoms: int) -> np.ndarray:
    return np.arange(n_atoms + 1, dtype=float)


def _atomic_hop(n_atoms: int) -> np.ndarray:
    """c1^dag c2 + c2^dag c1 on the fixed-N sector, indexed by n1."""
    n1 = np.arange(n_atoms, dtype=float)
    amp = np.sqrt((n1 + 1.0) * (n_atoms - n1))
    return np.diag(amp, -1) + np.diag(amp, 1)


def _atomic_onsite(n_atoms: int) -> np.ndarray:
    n1 = _atomic_n1(n_atoms)
    n2 = n_atoms - n1
    return n1 * (n1 - 1.0) + n2 * (n2 - 1.0)


def _cavity_lowering(cav_cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cav_cutoff + 1, dtype=float)), 1)


def embed(op, space: CompositeSpace, factor: str) -> Operator:
    """Lift a single-factor operator to the composite space.

    ``factor="atom"`` gives ``op (x) 1`` and ``factor="cavity"`` gives
    ``1 (x) op`` in the atomic-major index convention.
    """
    m = np.asarray(op, dtype=complex)
    if factor == "atom":
        if m.shape != (space.atom_dim, space.atom_dim):
            raise ValueError(f"atomic operator must be {space.atom_dim}x{space.atom_dim}, got {m.shape}")
        return Operator(space, np.kron(m, np.eye(space.cav_dim)))
    if factor == "cavity":
        if m.shape != (space.cav_dim, space.cav_dim):
            raise ValueError(f"cavity operator must be {space.cav_dim}x{space.cav_dim}, got {m.shape}")
        return Operator(space, np.kron(np.eye(space.atom_dim), m))
    raise ValueError(f"factor must be 'atom' or 'cavity', got {factor!r}")


def identity(space: CompositeSpace) -> Operator:
    return Operator(space, np.eye(space.total_dim))


def number_op_well1(space: CompositeSpace) -> Operator:
    return embed(np.diag(_atomic_n1(space.n_atoms)), space, "atom")


def tunneling_op(space: CompositeSpace) -> Operator:
    """Dimensionless hop operator ``c1^dag c2 + c2^dag c1`` (R applied later)."""
    return embed(_atomic_hop(space.n_atoms), space, "atom")


def onsite_interaction_op(space: CompositeSpace) -> Operator:
    return embed(np.diag(_atomic_onsite(space.n_atoms)), space, "atom")


def cavity_annihilation(space: CompositeSpace) -> Operator:
    """Truncated cavity lowering operator; ``[a, a^dag]`` fails only on the top level."""
    return embed(_cavity_lowering(space.cav_cutoff), space, "cavity")


def cavity_number(space: CompositeSpace) -> Operator:
    return embed(np.diag(np.arange(space.cav_dim, dtype=float)), space, "cavity")


# -- state constructors --------------------------------------------------------

def fock_state(dim: int, n: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise ValueError(f"Fock label {n} outside a {dim}-dimensional space")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def coherent_amplitudes(alpha: complex, cav_cutoff: int, normalize: bool = True) -> np.ndarray:
    """Fock amplitudes of ``|alpha>`` truncated at ``cav_cutoff``, renormalised by default."""
    n = np.arange(cav_cutoff + 1)
    if alpha == 0:
        v = fock_state(cav_cutoff + 1, 0)
    else:
        # log-space: factorials overflow for large cutoffs
        log_mag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - 0.5 * abs(alpha) ** 2
        v = np.exp(log_mag) * np.exp(1j * np.angle(alpha) * n)
    if normalize:
        v = v / np.linalg.norm(v)
    return v.astype(complex)


def coherent_tail(alpha: complex, cav_cutoff: int) -> float:
    """Probability of a coherent state above the cutoff."""
    v = coherent_amplitudes(alpha, cav_cutoff, normalize=False)
    return float(max(0.0, 1.0 - np.vdot(v, v).real))


def product_state(space: CompositeSpace, atom_ket, cav_ket) -> np.ndarray:
    a = np.asarray(atom_ket, dtype=complex).reshape(-1)
    c = np.asarray(cav_ket, dtype=complex).reshape(-1)
    if a.size != space.atom_dim or c.size != space.cav_dim:
        raise ValueError("factor kets do not match the space dimensions")
    return np.kron(a, c)
