"""Symmetric logarithmic derivatives, quantum and classical Fisher information.

States are differentiated by central finite differences of re-integrated
models.  A *model* is any callable ``params -> DensityMatrix``;
:class:`CavityStateModel` builds the standard one (driven junction-cavity
evolution to a fixed time, reduced to the cavity, lab-frame phases
restored).  Models that also provide ``series(params, times)`` let
:func:`lambda_scan` reuse one integration for many evaluation times.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dynamics import ModelParams, evolve_master
from .hilbert import CompositeSpace, DensityMatrix, Operator
from .phase_space import reduce_to_cavity, to_lab_frame

log = logging.getLogger(__name__)

RANK_EPS = 1e-10
DEGENERACY_GAP = 1e-8
SPLIT_RTOL = 1e-3
RICHARDSON_TOL = 1e-4
PSD_TOL = 1e-8


class FiniteDifferenceWarning(UserWarning):
    """Step-halving changed the state derivative by more than the tolerance."""


# -- models ------------------------------------------------------------------------

class CavityStateModel:
    """``params -> rho_C(t)``: evolve the joint state, trace out the atoms, undo the pump frame.

    ``joint=True`` returns the full junction-cavity state instead (an upper
    bound on every cavity-only Fisher information).
    """

    def __init__(self, rho0: DensityMatrix, t: float, driven: bool = True, lab_frame: bool = True,
                 joint: bool = False, rtol: float = 1e-11, atol: float = 1e-13):
        if t <= 0:
            raise ValueError("evaluation time must be positive")
        self.rho0 = rho0
        self.t = float(t)
        self.driven = driven
        self.lab_frame = lab_frame
        self.joint = joint
        self.rtol = rtol
        self.atol = atol

    def _post(self, rho: DensityMatrix, params: ModelParams, t: float) -> DensityMatrix:
        if self.joint:
            return rho
        rc = reduce_to_cavity(rho)
        return to_lab_frame(rc, params.omega_p, t) if self.lab_frame else rc

    def series(self, params: ModelParams, times) -> list[DensityMatrix]:
        times = np.asarray(times, dtype=float)
        grid = np.concatenate([[0.0], times]) if times[0] > 0 else times
        traj = evolve_master(self.rho0, grid, params, driven=self.driven,
                             rtol=self.rtol, atol=self.atol)
        states = traj.states[-times.size:]
        return [self._post(s, params, t) for s, t in zip(states, times)]

    def __call__(self, params: ModelParams) -> DensityMatrix:
        return self.series(params, [self.t])[0]

    def settings(self) -> dict:
        return {"t": self.t, "driven": self.driven, "lab_frame": self.lab_frame,
                "joint": self.joint, "rtol": self.rtol, "atol": self.atol}


# -- spectral tools ----------------------------------------------------------------

@dataclass
class SpectralDecomposition:
    """Eigenpairs of ``rho`` above ``eps`` plus an orthonormal basis of the rest."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    eps: float
    truncated_weight: float
    complement: np.ndarray
    complement_values: np.ndarray

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    @property
    def dim(self) -> int:
        return self.eigenvectors.shape[0]

    def full_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """All eigenvalues (complement counted as zero) and the matching unitary."""
        vals = np.concatenate([self.eigenvalues, np.zeros(self.complement_values.size)])
        return vals, np.hstack([self.eigenvectors, self.complement])


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, (DensityMatrix, Operator)) else np.asarray(rho, dtype=complex)


def spectral_decompose(rho, eps: float = RANK_EPS) -> SpectralDecomposition:
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = _matrix(rho)
    try:
        w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    keep = w > eps
    return SpectralDecomposition(
        eigenvalues=w[keep],
        eigenvectors=v[:, keep],
        eps=eps,
        truncated_weight=float(np.clip(w[~keep], 0.0, None).sum()),
        complement=v[:, ~keep],
        complement_values=w[~keep],
    )


def _space_for(dim: int, rho) -> CompositeSpace:
    if isinstance(rho, (DensityMatrix, Operator)):
        return rho.space
    return CompositeSpace(0, dim - 1)


def sld(decomp: SpectralDecomposition, drho, space: CompositeSpace | None = None) -> Operator:
    """Symmetric logarithmic derivative on the support of ``rho``.

    Matrix elements between eigenvectors with ``rho_n + rho_m <= eps`` are
    set to zero; support-kernel pairs are kept, so ``(L rho + rho L)/2``
    reproduces every block of ``d rho`` except kernel-kernel.
    """
    if decomp.rank == 0:
        raise ValueError("empty decomposition")
    d = _matrix(drho)
    vals, basis = decomp.full_basis()
    dd = basis.conj().T @ d @ basis
    denom = vals[:, None] + vals[None, :]
    lk = np.where(denom > decomp.eps, 2.0 * dd / np.where(denom > decomp.eps, denom, 1.0), 0.0)
    lmat = basis @ lk @ basis.conj().T
    lmat = 0.5 * (lmat + lmat.conj().T)
    return Operator(space or _space_for(d.shape[0], drho), lmat)


# -- finite differences ------------------------------------------------------------

def default_step(params: ModelParams, mu_name: str) -> float:
    return 1e-4 * max(abs(getattr(params, mu_name)), abs(params.beta), 1e-12)


def _shifted(params: ModelParams, name: str, delta: float) -> ModelParams:
    return params.replace(**{name: getattr(params, name) + delta})


def central_difference(rho_minus, rho_plus, h: float) -> np.ndarray:
    d = (_matrix(rho_plus) - _matrix(rho_minus)) / (2.0 * h)
    return 0.5 * (d + d.conj().T)


def richardson_error(d_h: np.ndarray, d_half: np.ndarray) -> float:
    den = np.linalg.norm(d_half)
    num = np.linalg.norm(d_h - d_half)
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return float(num / den)


def state_derivative(model, params: ModelParams, mu_name: str, h: float | None = None,
                     check: bool = True) -> tuple[np.ndarray, dict]:
    """Central difference ``[rho(mu+h) - rho(mu-h)]/(2h)`` with a step-halving check."""
    h = default_step(params, mu_name) if h is None else h
    if h <= 0:
        raise ValueError("h must be positive")
    d = central_difference(model(_shifted(params, mu_name, -h)), model(_shifted(params, mu_name, h)), h)
    info = {"h": h, "richardson_error": None}
    if check:
        d2 = central_difference(model(_shifted(params, mu_name, -h / 2)),
                                model(_shifted(params, mu_name, h / 2)), h / 2)
        info["richardson_error"] = richardson_error(d, d2)
        if info["richardson_error"] > RICHARDSON_TOL:
            warnings.warn(f"finite-difference step {h:.3g} for {mu_name} fails the halving check "
                          f"({info['richardson_error']:.2e})", FiniteDifferenceWarning, stacklevel=2)
    return d, info


# -- QFI -----------------------------------------------------------------------------

@dataclass
class QfiReport:
    parameters: list[str]
    values: dict[str, float]
    qfi: float | list
    h_classical: float | None = None
    h_quantum: float | None = None
    split_available: bool = True
    split_consistent: bool | None = None
    degenerate: bool = False
    fd_step: dict = field(default_factory=dict)
    richardson_error: dict = field(default_factory=dict)
    eps: float = RANK_EPS
    trace_inverse: float | None = None
    singular: bool = False
    settings: dict = field(default_factory=dict)

    def cramer_rao(self, m_measurements: int = 1) -> float:
        return cramer_rao(np.asarray(self.qfi), m_measurements)

    def to_json(self, **kwargs) -> str:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return str(x)
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            return x
        return json.dumps(clean(asdict(self)), sort_keys=True, **kwargs)


def _align(reference: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Reorder and rephase ``vectors`` columns to best match ``reference``."""
    overlap = reference.conj().T @ vectors
    rows, cols = linear_sum_assignment(-np.abs(overlap))
    out = vectors[:, cols[np.argsort(rows)]]
    phases = np.diag(reference.conj().T @ out)
    return out * np.exp(-1j * np.angle(np.where(phases == 0, 1.0, phases)))


def qfi_split(rho, rho_minus, rho_plus, h: float, eps: float = RANK_EPS) -> dict:
    """Spectral split into a classical (eigenvalue) and a quantum (eigenvector) part.

    ``H_C = sum_p (d rho_p)^2 / rho_p`` and
    ``H_Q = 2 sum_{n != m} (rho_n - rho_m)^2/(rho_n + rho_m) |<psi_m|d psi_n>|^2``,
    the sum running over the retained eigenvectors ``n`` and every ``m``
    (kernel partners contribute ``4 rho_n |P_ker d psi_n|^2``).  Eigenpairs
    at ``mu +- h`` are matched to ``mu`` by maximal overlap.
    """
    dec = spectral_decompose(rho, eps)
    r = dec.rank
    vals = dec.eigenvalues
    gaps = -np.diff(vals)
    degenerate = bool(gaps.size and gaps.min() < DEGENERACY_GAP)
    _, basis = dec.full_basis()
    pairs = []
    for other in (rho_minus, rho_plus):
        m = _matrix(other)
        w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
        v = _align(basis, v)
        w = np.real(np.einsum("ij,jk,ki->i", v.conj().T, m, v))
        pairs.append((w, v))
    (wm, vm), (wp, vp) = pairs
    dvals = (wp[:r] - wm[:r]) / (2 * h)
    dvecs = (vp[:, :r] - vm[:, :r]) / (2 * h)
    h_c = float(np.sum(dvals ** 2 / vals))
    amp = dec.eigenvectors.conj().T @ dvecs          # <psi_m | d psi_n>, m, n in support
    weight = (vals[:, None] - vals[None, :]) ** 2 / (vals[:, None] + vals[None, :])
    off = ~np.eye(r, dtype=bool)
    h_q = 2.0 * float(np.sum(weight[off] * np.abs(amp[off]) ** 2))
    ker = np.sum(np.abs(dvecs) ** 2, axis=0) - np.sum(np.abs(amp) ** 2, axis=0)
    h_q += 4.0 * float(np.sum(vals * np.clip(ker, 0.0, None)))
    return {"h_classical": h_c, "h_quantum": h_q, "degenerate": degenerate}


def qfi_from_states(rho, rho_minus, rho_plus, h: float, eps: float = RANK_EPS) -> tuple[float, Operator]:
    """``Tr[rho L^2]`` from a central-difference stencil."""
    dec = spectral_decompose(rho, eps)
    lop = sld(dec, central_difference(rho_minus, rho_plus, h), getattr(rho, "space", None))
    val = float(np.real(np.sum(_matrix(rho).T * (lop.matrix @ lop.matrix))))
    return max(val, 0.0) if val > -PSD_TOL else val, lop


def qfi_single(model, params: ModelParams, mu_name: str, h: float | None = None,
               eps: float = RANK_EPS, check_step: bool = True) -> QfiReport:
    h = default_step(params, mu_name) if h is None else h
    rho = model(params)
    rm, rp = model(_shifted(params, mu_name, -h)), model(_shifted(params, mu_name, h))
    value, _ = qfi_from_states(rho, rm, rp, h, eps)
    rich = None
    if check_step:
        d2 = central_difference(model(_shifted(params, mu_name, -h / 2)),
                                model(_shifted(params, mu_name, h / 2)), h / 2)
        rich = richardson_error(central_difference(rm, rp, h), d2)
        if rich > RICHARDSON_TOL:
            warnings.warn(f"finite-difference step for {mu_name} fails the halving check ({rich:.2e})",
                          FiniteDifferenceWarning, stacklevel=2)
    return _single_report(mu_name, params, value, qfi_split(rho, rm, rp, h, eps), h, rich, eps,
                          getattr(model, "settings", dict)())


def _single_report(mu_name, params, value, split, h, rich, eps, settings) -> QfiReport:
    total = split["h_classical"] + split["h_quantum"]
    consistent = abs(total - value) <= SPLIT_RTOL * max(abs(value), 1e-300)
    available = not split["degenerate"]
    if not consistent and available:
        log.warning("QFI split disagrees with Tr[rho L^2] for %s (%.6g vs %.6g): eigen-derivative "
                    "pairing fault", mu_name, total, value)
    return QfiReport(
        parameters=[mu_name],
        values={mu_name: getattr(params, mu_name)},
        qfi=value,
        h_classical=split["h_classical"] if available else None,
        h_quantum=split["h_quantum"] if available else None,
        split_available=available,
        split_consistent=bool(consistent) if available else None,
        degenerate=split["degenerate"],
        fd_step={mu_name: h},
        richardson_error={mu_name: rich},
        eps=eps,
        settings=settings,
    )


def qfi_matrix_from_states(rho, stencils: dict, eps: float = RANK_EPS) -> np.ndarray:
    """``H_np = Re Tr[rho L_n L_p]`` for ``stencils[name] = (rho_minus, rho_plus, h)``."""
    dec = spectral_decompose(rho, eps)
    ls = [sld(dec, central_difference(rm, rp, h), getattr(rho, "space", None)).matrix
          for rm, rp, h in stencils.values()]
    m = _matrix(rho)
    k = len(ls)
    out = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            out[i, j] = out[j, i] = np.real(np.sum(m.T * (ls[i] @ ls[j])))
    return out


def _inverse_info(hmat: np.ndarray) -> tuple[np.ndarray | None, bool]:
    evals = np.linalg.eigvalsh(hmat)
    scale = max(abs(evals).max(), 1e-300)
    if evals[0] < -PSD_TOL * scale:
        raise ArithmeticError(f"QFI matrix is not positive semidefinite (eigenvalue {evals[0]:.3e})")
    if evals[0] <= 1e-12 * scale:
        return None, True
    inv = np.linalg.inv(hmat)
    for i in range(hmat.shape[0]):
        if inv[i, i] * hmat[i, i] < 1 - 1e-8:
            raise ArithmeticError("inverse QFI diagonal below the reciprocal bound")
    return inv, False


def qfi_matrix(model, params: ModelParams, mu_names=("r_tun", "kappa"), h: dict | None = None,
               eps: float = RANK_EPS, check_step: bool = True) -> QfiReport:
    h = dict(h or {})
    rho = model(params)
    stencils, rich = {}, {}
    for name in mu_names:
        step = h.setdefault(name, default_step(params, name))
        rm, rp = model(_shifted(params, name, -step)), model(_shifted(params, name, step))
        stencils[name] = (rm, rp, step)
        if check_step:
            d2 = central_difference(model(_shifted(params, name, -step / 2)),
                                    model(_shifted(params, name, step / 2)), step / 2)
            rich[name] = richardson_error(central_difference(rm, rp, step), d2)
    hmat = qfi_matrix_from_states(rho, stencils, eps)
    inv, singular = _inverse_info(hmat)
    return QfiReport(
        parameters=list(mu_names),
        values={n: getattr(params, n) for n in mu_names},
        qfi=hmat.tolist(),
        split_available=False,
        fd_step=h,
        richardson_error=rich,
        eps=eps,
        trace_inverse=math.inf if singular else float(np.trace(inv)),
        singular=singular,
        settings=getattr(model, "settings", dict)(),
    )


# -- classical Fisher information ---------------------------------------------------

def validate_povm(povm, dim: int | None = None) -> list[np.ndarray]:
    elems = [np.asarray(_matrix(p), dtype=complex) for p in povm]
    if not elems:
        raise ValueError("empty POVM")
    dim = elems[0].shape[0] if dim is None else dim
    total = np.zeros((dim, dim), dtype=complex)
    for e in elems:
        if e.shape != (dim, dim):
            raise ValueError("POVM element has the wrong dimension")
        if np.max(np.abs(e - e.conj().T)) > 1e-10:
            raise ValueError("POVM element is not Hermitian")
        if np.linalg.eigvalsh(e)[0] < -1e-10:
            raise ValueError("POVM element is not positive")
        total += e
    if np.linalg.norm(total - np.eye(dim), 2) > 1e-8:
        raise ValueError("POVM elements do not sum to the identity")
    return elems


def classical_fisher(rho_family, h: float, povm, min_prob: float = 1e-12,
                     return_leakage: bool = False):
    """``F = sum_j (d p_j)^2 / p_j`` with ``p_j`` differentiated centrally.

    ``rho_family = (rho(mu - h), rho(mu), rho(mu + h))``.  Outcomes with
    ``p_j < min_prob`` are skipped and their probability reported as leakage.
    """
    rm, r0, rp = (_matrix(x) for x in rho_family)
    elems = validate_povm(povm, r0.shape[0])

    def probs(m):
        return np.array([np.real(np.sum(m.T * e)) for e in elems])

    p0, pm, pp = probs(r0), probs(rm), probs(rp)
    dp = (pp - pm) / (2 * h)
    keep = p0 >= min_prob
    f = float(np.sum(dp[keep] ** 2 / p0[keep]))
    if return_leakage:
        return f, float(p0[~keep].sum())
    return f


def photon_number_povm(dim: int) -> list[np.ndarray]:
    out = []
    for n in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[n, n] = 1.0
        out.append(e)
    return out


def quadrature_povm(dim: int, edges=None, theta: float = 0.0, n_nodes: int = 160) -> list[np.ndarray]:
    """Binned homodyne POVM for ``X_theta`` in the truncated Fock space.

    Default: 8 bins with interior edges ``-3, -2, ..., 3``.  Elements are the
    Fock matrix elements of the bin projectors, integrated with
    Gauss-Legendre on ``[-L, L]`` (``L`` well beyond the largest Hermite
    function); the last bin absorbs the rounding so completeness is exact.
    """
    from scipy.special import roots_legendre

    edges = np.arange(-3.0, 4.0) if edges is None else np.asarray(edges, dtype=float)
    span = max(12.0, 2.5 * np.sqrt(2 * dim + 1))
    bounds = np.concatenate([[-span], edges, [span]])
    nodes, weights = roots_legendre(n_nodes)
    n = np.arange(dim)
    rot = np.exp(1j * theta * n)
    out = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        x = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * weights
        phi = _hermite_functions(dim, x) * rot[:, None]
        out.append((phi * w) @ phi.conj().T)
    out[-1] = np.eye(dim) - sum(out[:-1])
    return [0.5 * (e + e.conj().T) for e in out]


def _hermite_functions(dim: int, x: np.ndarray) -> np.ndarray:
    """Normalised oscillator eigenfunctions ``phi_n(x)``, rows ``n``, by stable recurrence."""
    out = np.empty((dim, x.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x ** 2)
    if dim > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(2, dim):
        out[k] = np.sqrt(2.0 / k) * x * out[k - 1] - np.sqrt((k - 1) / k) * out[k - 2]
    return out


def sld_eigenbasis_povm(lop) -> list[np.ndarray]:
    m = _matrix(lop)
    _, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return [np.outer(v[:, k], v[:, k].conj()) for k in range(v.shape[1])]


# -- bounds and figures of merit ----------------------------------------------------

def cramer_rao(qfi, m_measurements: int) -> float:
    """``1/(M H)`` or ``Tr[H^-1]/M``; zero or singular information gives ``inf``."""
    if m_measurements < 1:
        raise ValueError("M must be at least 1")
    q = np.asarray(qfi, dtype=float)
    if q.ndim == 0:
        if q < 0:
            raise ValueError("QFI must be non-negative")
        return math.inf if q == 0 else float(1.0 / (m_measurements * q))
    inv, singular = _inverse_info(q)
    return math.inf if singular else float(np.trace(inv) / m_measurements)


def lambda_figures(qfi_r: float, qfi_kappa: float, qfi_mat, beta: float) -> dict:
    """``Lambda(R)``, ``Lambda(kappa)``, and the joint/sequential figures of merit.

    ``lambda_mp`` uses the diagonal of ``H^-1``; ``lambda_mp_reciprocal``
    uses ``1/H_RR + 1/H_kk`` (the other reading of the same expression).
    """
    if qfi_r <= 0 or qfi_kappa <= 0 or beta == 0:
        raise ValueError("lambda figures need positive QFI values and beta != 0")
    b2 = beta ** 2
    hmat = np.asarray(qfi_mat, dtype=float)
    inv, singular = _inverse_info(hmat)
    recip = 1.0 / hmat[0, 0] + 1.0 / hmat[1, 1]
    return {
        "lambda_R": math.log(1.0 / qfi_r / b2),
        "lambda_kappa": math.log(1.0 / qfi_kappa / b2),
        "lambda_se": math.log((1.0 / qfi_r + 1.0 / qfi_kappa) / b2),
        "lambda_mp": math.inf if singular else math.log((inv[0, 0] + inv[1, 1]) / (2 * b2)),
        "lambda_mp_reciprocal": math.log(recip / (2 * b2)),
    }


@dataclass
class LambdaTable:
    scan: str
    rows: list[dict]
    averages: dict

    def columns(self) -> list[str]:
        return list(self.rows[0].keys()) if self.rows else []


def lambda_scan(base_params: ModelParams, rho0: DensityMatrix, scan: str, mu_grid, times,
                eps: float = RANK_EPS, rtol: float = 1e-11, atol: float = 1e-13,
                lab_frame: bool = True) -> LambdaTable:
    """Lambda figures over ``mu_grid`` (values of ``scan``) and evaluation ``times``.

    For every grid point the single-parameter QFIs of ``R`` and ``kappa``
    and their 2x2 matrix are formed from one stencil of integrations.
    ``averages`` holds the scan-range means of ``lambda_se`` and
    ``lambda_mp`` per time (keys ``"t=<value>"``).
    """
    if scan not in ("r_tun", "kappa"):
        raise ValueError("scan must be 'r_tun' or 'kappa'")
    times = np.asarray(times, dtype=float)
    model = CavityStateModel(rho0, float(times[-1]), driven=True, lab_frame=lab_frame,
                             rtol=rtol, atol=atol)
    rows = []
    for mu in np.asarray(mu_grid, dtype=float):
        p = base_params.replace(**{scan: float(mu)})
        centre = model.series(p, times)
        stencil, rich = {}, {}
        for name in ("r_tun", "kappa"):
            h = default_step(p, name)
            minus = model.series(_shifted(p, name, -h), times)
            plus = model.series(_shifted(p, name, h), times)
            minus2 = model.series(_shifted(p, name, -h / 2), times)
            plus2 = model.series(_shifted(p, name, h / 2), times)
            stencil[name] = (minus, plus, h)
            rich[name] = [richardson_error(central_difference(a, b, h),
                                           central_difference(c, d, h / 2))
                          for a, b, c, d in zip(minus, plus, minus2, plus2)]
        for k, t in enumerate(times):
            st = {n: (stencil[n][0][k], stencil[n][1][k], stencil[n][2]) for n in stencil}
            hmat = qfi_matrix_from_states(centre[k], st, eps)
            row = {"t": float(t), scan: float(mu), "H_RR": hmat[0, 0], "H_Rk": hmat[0, 1],
                   "H_kk": hmat[1, 1]}
            row.update(lambda_figures(hmat[0, 0], hmat[1, 1], hmat, p.beta))
            row["richardson_R"] = rich["r_tun"][k]
            row["richardson_kappa"] = rich["kappa"][k]
            rows.append(row)
    averages = {}
    for t in times:
        sel = [r for r in rows if r["t"] == float(t)]
        averages[f"t={float(t):g}"] = {
            "lambda_se": float(np.mean([r["lambda_se"] for r in sel])),
            "lambda_mp": float(np.mean([r["lambda_mp"] for r in sel])),
        }
    return LambdaTable(scan, rows, averages)
