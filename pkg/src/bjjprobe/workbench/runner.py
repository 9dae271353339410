"""Pipelines behind each experiment kind, and deterministic result writers."""
from __future__ import annotations

import contextlib
import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .. import estimation as est
from .. import phase_space as ps
from .. import probe_mapping as pm
from ..dynamics import IntegrationError, ModelParams, evolve_master, quantum_jump_evolve
from ..hilbert import (
    CompositeSpace,
    DensityMatrix,
    InvariantError,
    build_space,
    coherent_amplitudes,
    coherent_tail,
    fock_state,
    product_state,
)
from . import config as cfgmod

log = logging.getLogger(__name__)

RUNTIME_FILE = "runtime.json"
CONFIG_FILE = "resolved_config.json"
NUMERICAL_ERRORS = (InvariantError, IntegrationError, ArithmeticError, FloatingPointError)


class PipelineError(RuntimeError):
    """A failure inside a pipeline; ``module`` names the stage that raised."""

    def __init__(self, module: str, cause: BaseException):
        super().__init__(f"[{module}] {type(cause).__name__}: {cause}")
        self.module = module
        self.cause = cause
        self.numerical = isinstance(cause, NUMERICAL_ERRORS)


@contextlib.contextmanager
def _stage(module: str):
    try:
        yield
    except (PipelineError, cfgmod.ConfigError, OSError):
        raise
    except Exception as exc:
        raise PipelineError(module, exc) from exc


@dataclass
class ResultBundle:
    config: dict
    payloads: dict[str, str]
    metadata: dict = field(default_factory=dict)

    def write(self, out_dir) -> list[str]:
        """Write the resolved config, every payload and the runtime metadata."""
        os.makedirs(out_dir, exist_ok=True)
        files = {CONFIG_FILE: cfgmod.dumps(self.config), **self.payloads,
                 RUNTIME_FILE: cfgmod.dumps(_jsonable(self.metadata))}
        for name, text in files.items():
            with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return sorted(files)


# -- serialisation ---------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def to_json(obj) -> str:
    return cfgmod.dumps(_jsonable(obj))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def to_csv(columns: dict[str, np.ndarray | list]) -> str:
    """Header row plus one row per sample; floats at full repr precision."""
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("CSV columns must have equal length")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(n):
        w.writerow([_fmt(c[i]) for c in cols])
    return buf.getvalue()


def _gnuplot_blocks(wmap: ps.WignerMap) -> str:
    """``x p W`` rows with a blank line after each x block (splot layout)."""
    lines = []
    for i, x in enumerate(wmap.grid.x_values):
        lines.extend(f"{x!r} {p!r} {w!r}" for p, w in zip(wmap.grid.p_values.tolist(),
                                                         wmap.values[i].tolist()))
        lines.append("")
    return "\n".join(lines) + "\n"


# -- building blocks from the config ---------------------------------------------------------

def grid_values(grid: dict) -> np.ndarray:
    if "values" in grid:
        return np.asarray(grid["values"], dtype=float)
    return np.linspace(grid["start"], grid["stop"], grid["points"])


def model_params(cfg: dict) -> ModelParams:
    return ModelParams(**cfg["params"])


def space_of(cfg: dict) -> CompositeSpace:
    return build_space(cfg["space"]["n_atoms"], cfg["space"]["cav_cutoff"])


def atom_ket(cfg: dict, space: CompositeSpace) -> np.ndarray:
    st = cfg["initial_state"]["atoms"]
    if "fock" in st:
        return fock_state(space.atom_dim, st["fock"])
    if "amplitudes" in st:
        a = np.array([complex(re, im) for re, im in st["amplitudes"]])
        norm = np.linalg.norm(a)
        if norm == 0:
            raise ValueError("atomic amplitudes are all zero")
        return a / norm
    k = st["random"]
    return pm.random_initial_state(space.n_atoms, np.random.SeedSequence(cfg["seed"]).spawn(k + 1)[k])


def cavity_ket(cfg: dict, space: CompositeSpace) -> np.ndarray:
    st = cfg["initial_state"]["cavity"]
    if "fock" in st:
        return fock_state(space.cav_dim, st["fock"])
    return coherent_amplitudes(complex(*st["coherent"]), space.cav_cutoff)


def initial_state(cfg: dict, space: CompositeSpace | None = None) -> DensityMatrix:
    space = space or space_of(cfg)
    return DensityMatrix.from_ket(space, product_state(space, atom_ket(cfg, space),
                                                       cavity_ket(cfg, space)))


def _invariants(diag: dict) -> dict:
    inv = diag.get("invariants") or {}
    return {**inv, "max_top_fock_population": diag.get("max_top_fock_population"),
            "truncation_flag": diag.get("truncation_flag")}


# -- pipelines -------------------------------------------------------------------------------

def _run_wigner(cfg):
    params, space = model_params(cfg), space_of(cfg)
    rho0 = initial_state(cfg, space)
    times = grid_values(cfg["time"])
    num = cfg["numerics"]
    with _stage("dynamics"):
        traj = evolve_master(rho0, times, params, driven=cfg["driven"], rtol=num["rtol"],
                             atol=num["atol"], method=num["method"])
    w = cfg["wigner"]
    grid = ps.PhaseGrid.symmetric(w["extent"], w["points"])
    freq = params.omega_p if cfg["driven"] else params.omega_c
    payloads, snaps = {}, []
    with _stage("phase_space"):
        for k, (t, rho) in enumerate(zip(times, traj.states)):
            rc = ps.reduce_to_cavity(rho)
            if w["frame"] == "lab":
                rc = ps.to_lab_frame(rc, freq, t)
            wmap = ps.wigner(rc, grid)
            radius = ps.ring_radius_diagnostic(wmap)
            snaps.append({"index": k, "t": float(t), "integral": wmap.integral(),
                          "purity_from_w": wmap.purity(), "purity": rc.purity(),
                          "w_min": float(wmap.values.min()), "w_max": float(wmap.values.max()),
                          "ring_radius": radius, "angular_spread": ps.angular_spread(wmap, radius)})
            tri = wmap.triples()
            payloads[f"wigner_{k:03d}.csv"] = to_csv({"x": tri[:, 0], "p": tri[:, 1], "W": tri[:, 2]})
            if cfg["output"]["gnuplot"]:
                payloads[f"wigner_{k:03d}.dat"] = _gnuplot_blocks(wmap)
    obs = traj.observables
    payloads["observables.csv"] = to_csv({
        "t": times, "n1": np.real(obs["n1"]), "n1_sq": np.real(obs["n1_sq"]),
        "n_cav": np.real(obs["n_cav"]), "a_re": np.real(obs["a"]), "a_im": np.imag(obs["a"])})
    report = {"kind": "wigner", "snapshots": snaps, "invariants": _invariants(traj.diagnostics)}
    payloads["report.json"] = to_json(report)
    return payloads, _integrator_stats(traj.diagnostics)


def _integrator_stats(diag: dict) -> dict:
    return {k: diag[k] for k in ("nfev", "nsteps", "method", "rtol", "atol") if k in diag}


def _run_track(cfg):
    params, space = model_params(cfg), space_of(cfg)
    rho0 = initial_state(cfg, space)
    times = grid_values(cfg["time"])
    num, tr = cfg["numerics"], cfg["track"]
    with _stage("probe_mapping"):
        series = pm.benchmark_run(params, rho0, times, rtol=num["rtol"], atol=num["atol"],
                                  method=num["method"])
        xi_m, xi_q = pm.discrepancy_xi(series, tr["t0"], tr["t1"])
        lag = pm.tracking_lag(series, tr["t0"], tr["t1"], tr["lag_max"])
    cols = series.columns()
    cols["n_cav"] = series.diagnostics["n_cav"]
    report = {"kind": "track", "n_atoms": space.n_atoms, "window": [tr["t0"], tr["t1"]],
              "xi_m": xi_m, "xi_q": xi_q, "lag": lag, "lag_over_inverse_gamma": lag * params.gamma,
              "regime": series.diagnostics["regime"],
              "invariants": _invariants(series.diagnostics)}
    if tr["probe_off_reference"]:
        with _stage("dynamics"):
            off = evolve_master(rho0, times, params.replace(beta=0.0), driven=True,
                                rtol=num["rtol"], atol=num["atol"], method=num["method"],
                                store_states=False)
        n1_off = np.real(off.observables["n1"])
        cols["n1_probe_off"] = n1_off
        report["probe_disturbance_max"] = float(np.max(np.abs(series.n1_exact - n1_off)))
    payloads = {"series.csv": to_csv(cols), "report.json": to_json(report)}
    return payloads, _integrator_stats(series.diagnostics)


def _run_xi(cfg):
    params, space = model_params(cfg), space_of(cfg)
    times = grid_values(cfg["time"])
    num, xi = cfg["numerics"], cfg["xi"]
    first = cfg["initial_state"]["atoms"]["random"]
    rows, batches = [], []
    for b in range(xi["batches"]):
        offset = first + b * xi["n_states"]
        with _stage("probe_mapping"):
            vals = pm.xi_histogram(params, space, xi["n_states"], cfg["seed"], times, xi["t0"],
                                   xi["t1"], rtol=num["rtol"], atol=num["atol"], first_index=offset,
                                   method=num["method"])
        batches.append(vals)
        rows.extend((b, offset + i, m, q) for i, (m, q) in enumerate(vals))
    payloads = {"xi.csv": to_csv({"batch": [r[0] for r in rows], "state": [r[1] for r in rows],
                                  "xi_m": [r[2] for r in rows], "xi_q": [r[3] for r in rows]})}
    stats = []
    for b, vals in enumerate(batches):
        n = vals.shape[0]
        se = vals.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(2, np.nan)
        stats.append({"batch": b, "n": n, "mean_m": vals[:, 0].mean(), "mean_q": vals[:, 1].mean(),
                      "se_m": se[0], "se_q": se[1], "max_m": vals[:, 0].max(), "max_q": vals[:, 1].max()})
    allv = np.vstack(batches)
    report = {"kind": "xi-scan", "n_atoms": space.n_atoms, "window": [xi["t0"], xi["t1"]],
              "batches": stats, "max_xi_m": allv[:, 0].max(), "max_xi_q": allv[:, 1].max(),
              "regime": pm.regime_check(params, initial_state(cfg, space))}
    if len(stats) >= 2:
        a, c = stats[0], stats[1]
        for key in ("m", "q"):
            pooled = math.hypot(a[f"se_{key}"], c[f"se_{key}"])
            shift = abs(a[f"mean_{key}"] - c[f"mean_{key}"])
            report[f"shift_{key}"] = shift
            report[f"shift_{key}_over_pooled_se"] = shift / pooled if pooled > 0 else math.inf
    payloads["report.json"] = to_json(report)
    return payloads, {}


def _model(cfg, t):
    num = cfg["numerics"]
    return est.CavityStateModel(initial_state(cfg), t, driven=cfg["driven"], lab_frame=True,
                                rtol=num["rtol"], atol=num["atol"])


def _run_qfi_single(cfg):
    params = model_params(cfg)
    q, num = cfg["qfi"], cfg["numerics"]
    model = _model(cfg, q["t"])
    out = {"kind": "qfi-single", "t": q["t"], "m_measurements": q["m_measurements"], "results": []}
    with _stage("estimation"):
        for name in q["parameters"]:
            rep = est.qfi_single(model, params, name, h=num["fd_step"], eps=num["eps"])
            h = rep.fd_step[name]
            rho = model(params)
            rm = model(params.replace(**{name: getattr(params, name) - h}))
            rp = model(params.replace(**{name: getattr(params, name) + h}))
            _, lop = est.qfi_from_states(rho, rm, rp, h, num["eps"])
            dim = rho.space.total_dim
            fisher = {
                "photon_number": est.classical_fisher((rm, rho, rp), h, est.photon_number_povm(dim)),
                "quadrature_8bin": est.classical_fisher((rm, rho, rp), h, est.quadrature_povm(dim)),
                "sld_eigenbasis": est.classical_fisher((rm, rho, rp), h, est.sld_eigenbasis_povm(lop)),
            }
            entry = _jsonable(json.loads(rep.to_json()))
            entry["cramer_rao"] = rep.cramer_rao(q["m_measurements"])
            entry["classical_fisher"] = fisher
            out["results"].append(entry)
    return {"report.json": to_json(out)}, {}


def _run_qfi_multi(cfg):
    params = model_params(cfg)
    q, num = cfg["qfi"], cfg["numerics"]
    model = _model(cfg, q["t"])
    h = None if num["fd_step"] is None else {n: num["fd_step"] for n in q["parameters"]}
    with _stage("estimation"):
        rep = est.qfi_matrix(model, params, tuple(q["parameters"]), h=h, eps=num["eps"])
        singles = {n: est.qfi_single(model, params, n, h=num["fd_step"], eps=num["eps"],
                                     check_step=False).qfi for n in q["parameters"]}
    out = {"kind": "qfi-multi", "t": q["t"], "m_measurements": q["m_measurements"],
           "report": json.loads(rep.to_json()), "single_parameter_qfi": singles,
           "cramer_rao_joint": rep.cramer_rao(q["m_measurements"]),
           "cramer_rao_sequential": sum(1.0 / v if v > 0 else math.inf for v in singles.values())
           / q["m_measurements"]}
    if params.beta != 0 and set(q["parameters"]) == {"r_tun", "kappa"}:
        order = [q["parameters"].index("r_tun"), q["parameters"].index("kappa")]
        hmat = np.asarray(rep.qfi)[np.ix_(order, order)]
        out["lambda"] = est.lambda_figures(singles["r_tun"], singles["kappa"], hmat, params.beta)
    return {"report.json": to_json(out)}, {}


def _run_lambda(cfg):
    params = model_params(cfg)
    sc, num = cfg["scan"], cfg["numerics"]
    rho0 = initial_state(cfg)
    mu = grid_values(sc["values"])
    second = sc.get("second_parameter")
    outer = grid_values(sc["second_values"]) if second else [None]
    rows = []
    with _stage("estimation"):
        for v in outer:
            base = params if v is None else params.replace(**{second: float(v)})
            tab = est.lambda_scan(base, rho0, sc["parameter"], mu, sc["times"], eps=num["eps"],
                                  rtol=num["rtol"], atol=num["atol"])
            for r in tab.rows:
                if second:
                    r = {second: float(v), **r}
                rows.append(r)
    names = list(rows[0])
    payloads = {"lambda.csv": to_csv({n: [r[n] for r in rows] for n in names})}
    figures = ["lambda_R", "lambda_kappa", "lambda_se", "lambda_mp", "lambda_mp_reciprocal"]
    summary = {}
    for t in sc["times"]:
        sel = [r for r in rows if r["t"] == float(t)]
        summary[f"t={float(t):g}"] = {
            f: {"mean": float(np.mean([r[f] for r in sel])), "min": float(min(r[f] for r in sel)),
                "max": float(max(r[f] for r in sel))} for f in figures}
    report = {"kind": "lambda-scan", "scan": sc["parameter"], "second": second,
              "points": len(mu), "summary": summary,
              "max_richardson": max(max(r["richardson_R"], r["richardson_kappa"]) for r in rows),
              "invariants": "every integration passed the trace, Hermiticity and positivity checks"}
    payloads["report.json"] = to_json(report)
    return payloads, {}


def trace_distance(a, b) -> float:
    m = (a.matrix if isinstance(a, DensityMatrix) else np.asarray(a)) - \
        (b.matrix if isinstance(b, DensityMatrix) else np.asarray(b))
    return float(0.5 * np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T))).sum())


def _run_jumps(cfg):
    params, space = model_params(cfg), space_of(cfg)
    times = grid_values(cfg["time"])
    num, jp = cfg["numerics"], cfg["jumps"]
    rho0 = initial_state(cfg, space)
    psi0 = product_state(space, atom_ket(cfg, space), cavity_ket(cfg, space))
    with _stage("dynamics"):
        ref = evolve_master(rho0, times, params, driven=cfg["driven"], rtol=num["rtol"],
                            atol=num["atol"], method=num["method"])
        jt = quantum_jump_evolve(psi0, times, params, space, driven=cfg["driven"],
                                 n_traj=num["n_traj"], seed=cfg["seed"], chunk=jp["chunk"],
                                 checkpoints=jp["checkpoints"])
    cols = {"t": times}
    partial = jt.diagnostics["partial_states"]
    for n in sorted(partial):
        cols[f"td_{n}"] = [trace_distance(a, b) for a, b in zip(partial[n], ref.states)]
    full = [trace_distance(a, b) for a, b in zip(jt.states, ref.states)]
    cols[f"td_{num['n_traj']}"] = full
    cols["n_cav_master"] = np.real(ref.observables["n_cav"])
    cols["n_cav_jumps"] = np.real(jt.observables["n_cav"])
    max_td = {k[3:]: float(np.max(v)) for k, v in cols.items() if k.startswith("td_")}
    counts = sorted(int(k) for k in max_td)
    report = {"kind": "jump-check", "n_traj": num["n_traj"], "n_jumps": jt.diagnostics["n_jumps"],
              "propagator": jt.diagnostics["propagator"], "max_trace_distance": max_td,
              "invariants_master": _invariants(ref.diagnostics),
              "invariants_jumps": _invariants(jt.diagnostics)}
    if len(counts) >= 2:
        # least-squares slope of log(max distance) against log(n_traj)
        x = np.log(counts)
        y = np.log([max(max_td[str(c)], 1e-300) for c in counts])
        report["scaling_slope"] = float(np.polyfit(x, y, 1)[0])
    return {"trace_distance.csv": to_csv(cols), "report.json": to_json(report)}, \
        _integrator_stats(ref.diagnostics)


_PIPELINES = {
    "wigner": _run_wigner,
    "track": _run_track,
    "xi-scan": _run_xi,
    "qfi-single": _run_qfi_single,
    "qfi-multi": _run_qfi_multi,
    "lambda-scan": _run_lambda,
    "jump-check": _run_jumps,
}


def run(config: dict, out_dir=None) -> ResultBundle:
    """Validate, execute the pipeline for ``config["kind"]`` and optionally write the results.

    Nothing is written when validation or the computation fails.
    """
    cfg = cfgmod.resolve(config)
    out_dir = out_dir if out_dir is not None else config.get("output", {}).get("dir")
    start = time.perf_counter()
    with _stage("workbench"):
        payloads, stats = _PIPELINES[cfg["kind"]](cfg)
    meta = {"wall_time_s": time.perf_counter() - start, "integrator": stats,
            "numpy": np.__version__}
    bundle = ResultBundle(cfg, payloads, meta)
    if out_dir is not None:
        bundle.write(out_dir)
    return bundle


# -- validation report ------------------------------------------------------------------------

def validate(config: dict) -> dict:
    """Schema report plus physics annotations; ``ok`` reflects the schema only."""
    try:
        cfg = cfgmod.resolve(config)
    except cfgmod.ConfigError as exc:
        return {"ok": False, "errors": exc.errors, "warnings": [], "regime": None}
    warnings_ = []
    params = model_params(cfg)
    rho0 = initial_state(cfg)
    regime = pm.regime_check(params, rho0)
    for name, status in regime["status"].items():
        if status != "satisfied":
            warnings_.append(f"regime {name} = {regime['ratios'][name]:.3g} is {status}")
    cav = cfg["initial_state"]["cavity"]
    tail = None
    if "coherent" in cav:
        tail = coherent_tail(complex(*cav["coherent"]), cfg["space"]["cav_cutoff"])
    return {"ok": True, "errors": [], "warnings": warnings_, "regime": regime,
            "coherent_tail": tail, "kind": cfg["kind"]}
