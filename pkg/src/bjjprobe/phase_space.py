"""Reduced cavity state and its Wigner function.

Quadratures follow ``X = (a + a^dag)/sqrt(2)``, ``P = (a - a^dag)/(i sqrt(2))``
so the vacuum has variance 1/2 and ``W_vac(x, p) = exp(-x^2 - p^2)/pi``.  A
coherent amplitude ``alpha`` sits at ``(x, p) = sqrt(2) (Re alpha, Im alpha)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import eval_genlaguerre, gammaln

from .hilbert import CompositeSpace, DensityMatrix

NORMALIZATION_WARN = 0.05


class WignerNormalizationWarning(UserWarning):
    """The grid quadrature of W drifted from 1; the grid is too coarse or small."""


@dataclass(frozen=True)
class PhaseGrid:
    x_values: np.ndarray
    p_values: np.ndarray

    def __post_init__(self):
        for name in ("x_values", "p_values"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.ndim != 1 or v.size < 2 or np.any(np.diff(v) <= 0):
                raise ValueError(f"{name} must be a strictly increasing axis with at least 2 points")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def symmetric(cls, extent: float, points: int = 201) -> "PhaseGrid":
        """Square grid on ``[-extent, extent]^2``."""
        if extent <= 0 or points < 2:
            raise ValueError("extent must be positive and points >= 2")
        axis = np.linspace(-extent, extent, points)
        return cls(axis, axis.copy())

    @classmethod
    def for_state(cls, rho_c: DensityMatrix, points: int = 201) -> "PhaseGrid":
        """Default grid: four times the largest displacement, at least ``[-4, 4]``."""
        nbar = rho_c.expect(np.diag(np.arange(rho_c.space.cav_dim, dtype=float))).real
        return cls.symmetric(max(4.0, 4.0 * np.sqrt(2.0 * nbar + 0.5)), points)

    @property
    def dx(self) -> float:
        return float(self.x_values[1] - self.x_values[0])

    @property
    def dp(self) -> float:
        return float(self.p_values[1] - self.p_values[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.x_values.size, self.p_values.size

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_values, self.p_values, indexing="ij")


@dataclass(frozen=True)
class WignerMap:
    """``values[i, j] = W(x_values[i], p_values[j])``."""

    grid: PhaseGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            if np.max(np.abs(v.imag), initial=0.0) > 1e-10:
                raise ValueError("Wigner values must be real")
            v = v.real
        v = np.array(v, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.grid.p_values, axis=1),
                                  self.grid.x_values))

    def purity(self) -> float:
        """``2 pi int W^2``; equals Tr rho^2 up to grid error."""
        w2 = self.values ** 2
        return float(2 * np.pi * np.trapezoid(np.trapezoid(w2, self.grid.p_values, axis=1),
                                              self.grid.x_values))

    def interpolator(self) -> RegularGridInterpolator:
        return RegularGridInterpolator((self.grid.x_values, self.grid.p_values), self.values,
                                       bounds_error=False, fill_value=0.0)

    def triples(self) -> np.ndarray:
        """``(x, p, W)`` rows, x-major."""
        xx, pp = self.grid.mesh()
        return np.column_stack([xx.ravel(), pp.ravel(), self.values.ravel()])


def _cavity_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        if rho.space.n_atoms != 0:
            raise ValueError("expected a cavity state; call reduce_to_cavity first")
        return rho.matrix
    m = np.asarray(rho, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square cavity density matrix")
    return m


def reduce_to_cavity(rho: DensityMatrix) -> DensityMatrix:
    """Partial trace over the junction."""
    na, nc = rho.space.dims
    m = rho.matrix.reshape(na, nc, na, nc)
    rc = np.einsum("icid->cd", m)
    return DensityMatrix(CompositeSpace(0, rho.space.cav_cutoff), rc, validate=False)


def to_lab_frame(rho_c: DensityMatrix, omega_p: float, t: float) -> DensityMatrix:
    """Restore the pump-frame rotation: element ``(n, m)`` gains ``exp(-i (n - m) omega_p t)``.

    In phase space this turns W clockwise by ``omega_p t``.
    """
    m = _cavity_matrix(rho_c)
    n = np.arange(m.shape[0])
    phase = np.exp(-1j * omega_p * t * (n[:, None] - n[None, :]))
    return DensityMatrix(CompositeSpace(0, m.shape[0] - 1), m * phase, validate=False)


def wigner(rho_c, grid: PhaseGrid | None = None, warn: bool = True) -> WignerMap:
    """Wigner function from the Fock-basis Laguerre kernel.

    With ``alpha = (x + i p)/sqrt(2)`` and ``r2 = 4 |alpha|^2``,
    ``|m><n|`` (``n = m + k``) contributes
    ``(-1)^m sqrt(m!/n!) (2 alpha)^k L_m^k(r2) exp(-r2/2) / pi``;
    the ``k > 0`` terms appear with their Hermitian partners as twice the
    real part.
    """
    m = _cavity_matrix(rho_c)
    if grid is None:
        dm = rho_c if isinstance(rho_c, DensityMatrix) else DensityMatrix(
            CompositeSpace(0, m.shape[0] - 1), m, validate=False)
        grid = PhaseGrid.for_state(dm)
    xx, pp = grid.mesh()
    alpha = (xx + 1j * pp) / np.sqrt(2.0)
    r2 = 4.0 * np.abs(alpha) ** 2
    dim = m.shape[0]
    total = np.zeros(xx.shape, dtype=complex)
    two_a = 2.0 * alpha
    power = np.ones_like(alpha)
    for k in range(dim):
        acc = np.zeros(xx.shape)
        acc_c = np.zeros(xx.shape, dtype=complex)
        for mm in range(dim - k):
            coeff = m[mm, mm + k]
            if coeff == 0:
                continue
            scale = (-1) ** mm * np.exp(0.5 * (gammaln(mm + 1) - gammaln(mm + k + 1)))
            lag = eval_genlaguerre(mm, k, r2)
            if k == 0:
                acc += (coeff.real * scale) * lag
            else:
                acc_c += (coeff * scale) * lag
        total += acc if k == 0 else 2.0 * (acc_c * power).real
        power = power * two_a
    values = (total.real * np.exp(-0.5 * r2)) / np.pi
    wmap = WignerMap(grid, values)
    if warn:
        norm = wmap.integral()
        if abs(norm - 1.0) > NORMALIZATION_WARN:
            warnings.warn(f"Wigner grid integral is {norm:.4f}; enlarge or refine the grid",
                          WignerNormalizationWarning, stacklevel=2)
    return wmap


def _polar_samples(wmap: WignerMap, radii, n_theta: int) -> np.ndarray:
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    rr, tt = np.meshgrid(radii, theta, indexing="ij")
    pts = np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])
    return wmap.interpolator()(pts).reshape(rr.shape)


def ring_radius_diagnostic(wmap: WignerMap, n_radii: int = 400, n_theta: int = 360) -> float:
    """Radius where the angular average of W peaks (parabolic refinement).

    For a phase-averaged coherent state of amplitude ``alpha`` this lies at
    ``sqrt(2)|alpha| I1(z)/I0(z)`` with ``z = 4|alpha|^2`` (about 6% inside
    ``sqrt(2)|alpha|`` at ``alpha = 1.5``); a single coherent state gives the
    same value.
    """
    if not np.any(wmap.values):
        raise ValueError("Wigner map is identically zero")
    r_max = min(abs(wmap.grid.x_values[[0, -1]]).min(), abs(wmap.grid.p_values[[0, -1]]).min())
    radii = np.linspace(0.0, r_max, n_radii)
    profile = _polar_samples(wmap, radii, n_theta).mean(axis=1)
    i = int(np.argmax(profile))
    if 0 < i < n_radii - 1:
        y0, y1, y2 = profile[i - 1: i + 2]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        return float(radii[i] + shift * (radii[1] - radii[0]))
    return float(radii[i])


def angular_spread(wmap: WignerMap, radius: float, n_theta: int = 360) -> float:
    """Coefficient of variation of W around the circle of the given radius.

    Zero for a perfectly rotation-symmetric map; large for a single
    displaced Gaussian.
    """
    ring = _polar_samples(wmap, np.array([radius]), n_theta)[0]
    mean = ring.mean()
    if mean <= 0:
        raise ValueError("W has no positive weight on that circle")
    return float(ring.std() / mean)
