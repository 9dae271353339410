"""Acceptance suite: one PASS/FAIL line per criterion (see the terminal summary).

Runs the figure presets through the workbench, so it takes a while (about
half an hour on one core).  ``PROBE_FULL_HISTOGRAMS=1`` swaps the 2 x 10
state histogram smoke runs for the 2 x 100 state presets (about an hour more).

    python3 -m pytest tests/test_acceptance.py -v
"""
import csv
import json
import math
import os
import time

import numpy as np
import pytest

from bjjprobe.dynamics import ModelParams, evolve_master
from bjjprobe.estimation import (
    CavityStateModel,
    classical_fisher,
    photon_number_povm,
    qfi_from_states,
    qfi_single,
    quadrature_povm,
    sld_eigenbasis_povm,
)
from bjjprobe.hilbert import CompositeSpace, DensityMatrix, build_space, coherent_amplitudes, fock_state, product_state
from bjjprobe.phase_space import PhaseGrid, wigner
from bjjprobe.probe_mapping import (
    PUMP_LOCKED_PHASE,
    estimate_n1_mean,
    estimate_n1_sq,
    forward_quadratures,
    quadrature_means,
)
from bjjprobe.workbench import get_preset
from bjjprobe.workbench import runner

pytestmark = pytest.mark.slow

FULL_HISTOGRAMS = os.environ.get("PROBE_FULL_HISTOGRAMS") == "1"
HIST_PRESETS = ("fig4", "fig5") if FULL_HISTOGRAMS else ("fig4-smoke", "fig5-smoke")
PHYSICAL_PRESETS = ("fig2", "fig3a", "fig3b", "fig3c", "fig3d", "fig6a", "fig6a-text", "fig6b",
                    "fig7a", "fig7b", "fig8a", "fig8b")
ALL_PRESETS = PHYSICAL_PRESETS + HIST_PRESETS + ("bare-cavity", "fig3a-jumps")

TRACE_TOL, HERM_TOL, POS_TOL = 1e-8, 1e-9, 1e-8


class PresetCache:
    def __init__(self, root):
        self.root = root
        self.dirs = {}
        self.seconds = {}

    def __call__(self, name):
        if name not in self.dirs:
            out = self.root / name
            start = time.perf_counter()
            runner.run(get_preset(name), out)
            self.seconds[name] = time.perf_counter() - start
            self.dirs[name] = out
        return self.dirs[name]


@pytest.fixture(scope="module")
def presets(tmp_path_factory):
    return PresetCache(tmp_path_factory.mktemp("presets"))


def report_of(path):
    return json.loads((path / "report.json").read_text())


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def invariants_ok(inv):
    return (inv["trace_error"] <= TRACE_TOL and inv["hermiticity_error"] <= HERM_TOL
            and inv["min_eigenvalue"] >= -POS_TOL)


# 1 -------------------------------------------------------------------------------------------

def test_criterion_01_physicality(presets, acceptance):
    details, ok = [], True
    for name in PHYSICAL_PRESETS:
        path = presets(name)
        rep = report_of(path)
        if rep["kind"] in ("wigner", "track"):
            inv = rep["invariants"]
            good = invariants_ok(inv)
            details.append(f"{name} tr={inv['trace_error']:.1e} herm={inv['hermiticity_error']:.1e} "
                           f"min={inv['min_eigenvalue']:.1e}")
        else:
            # every integration inside a scan is checked as it runs; a violation aborts the run
            good = True
            details.append(f"{name} all scan integrations checked")
        ok &= good
    # explicit trace of the two-atom estimation state over the fig6-8 time range
    cfg = runner.cfgmod.resolve(get_preset("fig8b"))
    params = runner.model_params(cfg).replace(r_tun=0.5)
    traj = evolve_master(runner.initial_state(cfg), np.linspace(0, 10, 201), params, driven=True,
                         rtol=1e-11, atol=1e-13)
    ok &= invariants_ok(traj.diagnostics["invariants"])
    slow = {n: presets.seconds[n] for n in ("fig3a", "fig3b", "fig3c", "fig3d")}
    ok &= all(s <= 600 for s in slow.values())
    details.append("fig3 runtimes " + ", ".join(f"{n}={s:.0f}s" for n, s in slow.items()))
    acceptance(1, ok, "; ".join(details))
    assert ok


# 2 -------------------------------------------------------------------------------------------

def test_criterion_02_analytic_oracles(acceptance):
    space = build_space(0, 20)
    rho0 = DensityMatrix.from_ket(space, coherent_amplitudes(1.5, 20))
    t = np.linspace(0, 3, 31)
    traj = evolve_master(rho0, t, ModelParams(gamma=1.0), rtol=1e-10, atol=1e-12)
    n = np.real(traj.observables["n_cav"])
    n0 = n[0]
    damp = float(np.max(np.abs(n / (n0 * np.exp(-t)) - 1)))

    two = build_space(1, 0)
    rabi = evolve_master(DensityMatrix.from_ket(two, fock_state(2, 1)), np.linspace(0, 6, 61),
                         ModelParams(r_tun=0.8), rtol=1e-10, atol=1e-12)
    rabi_err = float(np.max(np.abs(rabi.observables["n1"] - np.cos(0.8 * rabi.times) ** 2)))

    origin = PhaseGrid(np.array([-0.1, 0.0, 0.1]), np.array([-0.1, 0.0, 0.1]))
    cav = CompositeSpace(0, 1)
    w_vac = wigner(DensityMatrix(cav, np.diag([1.0, 0.0])), origin, warn=False).values[1, 1]
    w_one = wigner(DensityMatrix(cav, np.diag([0.0, 1.0])), origin, warn=False).values[1, 1]

    v = coherent_amplitudes(1.5, 30)
    rho_c = np.outer(v, v.conj())
    nn = np.arange(31)

    def family(params):
        u = np.exp(-1j * params.omega_p * nn)
        return DensityMatrix(CompositeSpace(0, 30), u[:, None] * rho_c * u.conj()[None, :], validate=False)
    qfi = qfi_single(family, ModelParams(omega_p=0.2, beta=1.0), "omega_p", h=1e-4).qfi

    ok = (damp <= 1e-6 and rabi_err <= 1e-6 and abs(w_vac - 1 / math.pi) <= 1e-6
          and abs(w_one + 1 / math.pi) <= 1e-6 and abs(qfi / 9 - 1) <= 1e-4)
    acceptance(2, ok, f"damping rel {damp:.1e}; Rabi {rabi_err:.1e}; W_vac(0,0)-1/pi "
                      f"{w_vac - 1 / math.pi:.1e}; W_1(0,0)+1/pi {w_one + 1 / math.pi:.1e}; "
                      f"phase QFI {qfi:.7f} (target 9)")
    assert ok


# 3 -------------------------------------------------------------------------------------------

def test_criterion_03_jumps_vs_master(presets, acceptance):
    ok, details = True, []
    for name in ("bare-cavity", "fig3a-jumps"):
        rep = report_of(presets(name))
        td = rep["max_trace_distance"]
        slope = rep["scaling_slope"]
        good = td["4000"] <= 0.08 and abs(slope + 0.5) <= 0.25
        ok &= good
        details.append(f"{name} max TD 250/1000/4000 = {td['250']:.2e}/{td['1000']:.2e}/"
                       f"{td['4000']:.2e}, slope {slope:.2f}")
    acceptance(3, ok, "; ".join(details))
    assert ok


# 4 -------------------------------------------------------------------------------------------

def test_criterion_04_estimator_round_trip(acceptance):
    p = ModelParams(kappa=1.0, r_tun=1.0, beta=1 / 16, gamma=500.0, eta=1.0)
    n1 = np.arange(31, dtype=float)
    x, pq = forward_quadratures(n1, n1 ** 2, p)
    # machine precision of the inverse map: a few ulps of the input quadrature times |d out / d in|
    eps = np.finfo(float).eps
    coef_m = p.gamma ** 2 / (4 * math.sqrt(2) * p.beta * p.eta)
    coef_q = p.gamma ** 3 / (8 * math.sqrt(2) * p.beta ** 2 * p.eta)
    ulps_m = np.abs(estimate_n1_mean(pq, p) - n1) / (eps * np.maximum(np.abs(pq), eps) * coef_m)
    ulps_q = np.abs(estimate_n1_sq(x, p) - n1 ** 2) / (eps * np.abs(x) * coef_q)
    err_m, err_q = float(ulps_m.max()), float(ulps_q.max())

    space = build_space(2, 6)
    rho0 = DensityMatrix.from_ket(space, product_state(space, fock_state(3, 2), fock_state(7, 0)))
    ratios = np.logspace(-3, -1, 9)
    bias = []
    for r in ratios:
        q = ModelParams(beta=r, gamma=1.0, eta=0.05)
        rho = evolve_master(rho0, [0.0, 60.0], q, driven=True, method="expm").states[-1]
        bias.append(abs(estimate_n1_mean(quadrature_means(rho, PUMP_LOCKED_PHASE), q) - 2))
    slope = float(np.polyfit(np.log(ratios), np.log(bias), 1)[0])
    ok = err_m <= 8 and err_q <= 8 and abs(slope - 2.0) <= 0.1
    acceptance(4, ok, f"round trip error in input ulps x sensitivity: <n1> {err_m:.2f}, <n1^2> {err_q:.2f} "
                      f"(limit 8); "
                      f"bias slope {slope:.3f} over beta/gamma 1e-3..1e-1")
    assert ok


# 5 -------------------------------------------------------------------------------------------

def test_criterion_05_fig3_tracking(presets, acceptance):
    ok, details = True, []
    for name in ("fig3a", "fig3c"):
        rep = report_of(presets(name))
        gamma = get_preset(name)["params"]["gamma"]
        n_atoms = rep["n_atoms"]
        good = rep["xi_m"] < 0.05 * n_atoms and 1 / (3 * gamma) <= rep["lag"] <= 3 / gamma
        ok &= good
        details.append(f"{name} xi_m {rep['xi_m']:.3f} (< {0.05 * n_atoms:g}), lag {rep['lag']:.5f} "
                       f"in [{1 / (3 * gamma):.5f}, {3 / gamma:.5f}]")
    acceptance(5, ok, "; ".join(details))
    assert ok


# 6 -------------------------------------------------------------------------------------------

def test_criterion_06_histograms(presets, acceptance):
    ok, details = True, []
    total = 0.0
    for name in HIST_PRESETS:
        rep = report_of(presets(name))
        total += presets.seconds[name]
        n = rep["n_atoms"]
        good = (rep["max_xi_m"] < 0.05 * n and rep["max_xi_q"] < 0.05 * n ** 2
                and rep["shift_m_over_pooled_se"] < 2 and rep["shift_q_over_pooled_se"] < 2)
        ok &= good
        details.append(f"{name} max xi_m {rep['max_xi_m']:.3f}, max xi_q {rep['max_xi_q']:.2f}, "
                       f"batch shift/SE m {rep['shift_m_over_pooled_se']:.2f} "
                       f"q {rep['shift_q_over_pooled_se']:.2f}")
    limit = 2 * 3600 if FULL_HISTOGRAMS else 25 * 60
    ok &= total <= limit
    details.append(f"runtime {total:.0f}s (limit {limit}s)")
    acceptance(6, ok, "; ".join(details))
    assert ok


# 7 -------------------------------------------------------------------------------------------

def test_criterion_07_qfi_cross_validation(acceptance):
    space = build_space(2, 6)
    rho0 = DensityMatrix.from_ket(space, product_state(space, fock_state(3, 2), fock_state(7, 0)))
    base = ModelParams(e0=0.1, omega_c=0.1, omega_p=0.1, eta=0.1, gamma=1.0, beta=1.0)
    rng = np.random.default_rng(20240607)
    worst_split = worst_sat = 0.0
    fisher_ok = True
    tested = skipped = 0
    for _ in range(20):
        r, k, t = rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0), rng.uniform(1.0, 10.0)
        p = base.replace(r_tun=r, kappa=k)
        model = CavityStateModel(rho0, t)
        for name in ("r_tun", "kappa"):
            rep = qfi_single(model, p, name, check_step=False)
            if not rep.split_available:
                skipped += 1
                continue
            tested += 1
            h = rep.fd_step[name]
            rho = model(p)
            rm = model(p.replace(**{name: getattr(p, name) - h}))
            rp = model(p.replace(**{name: getattr(p, name) + h}))
            _, lop = qfi_from_states(rho, rm, rp, h)
            fam = (rm, rho, rp)
            worst_split = max(worst_split, abs(rep.h_classical + rep.h_quantum - rep.qfi) / rep.qfi)
            f_sld = classical_fisher(fam, h, sld_eigenbasis_povm(lop))
            worst_sat = max(worst_sat, abs(f_sld - rep.qfi) / rep.qfi)
            for povm in (photon_number_povm(7), quadrature_povm(7)):
                fisher_ok &= classical_fisher(fam, h, povm) <= rep.qfi * (1 + 1e-9)
    ok = worst_split <= 1e-3 and worst_sat <= 1e-3 and fisher_ok and tested >= 30
    acceptance(7, ok, f"{tested} (point, parameter) cases, {skipped} degenerate skipped; "
                      f"max split mismatch {worst_split:.1e}; max SLD-POVM gap {worst_sat:.1e}; "
                      f"F <= H for photon number and 8-bin quadrature: {fisher_ok}")
    assert ok


# 8 -------------------------------------------------------------------------------------------

def _by_time(table, scan, key, t):
    sel = table["t"] == t
    order = np.argsort(table[scan][sel])
    return table[key][sel][order]


def test_criterion_08_fig6_time_dependence(presets, acceptance):
    ok, details = True, []
    for name, scan, key in (("fig6a", "kappa", "lambda_kappa"), ("fig6b", "r_tun", "lambda_R"),
                            ("fig6a-text", "kappa", "lambda_kappa")):
        tab = read_csv(presets(name) / "lambda.csv")
        l1, l10 = _by_time(tab, scan, key, 1.0), _by_time(tab, scan, key, 10.0)
        drop = l1 - l10
        spread = float(np.ptp(l10))
        good = bool(np.all(drop > 0)) and spread < float(drop.min())
        ok &= good
        details.append(f"{name} all lower at t=10: {bool(np.all(drop > 0))}, range(t=10) {spread:.2f} "
                       f"vs min drop {drop.min():.2f}")
    acceptance(8, ok, "; ".join(details))
    assert ok


# 9 -------------------------------------------------------------------------------------------

def test_criterion_09_fig8_sequential_vs_joint(presets, acceptance):
    ok, details = True, []
    for name, scan in (("fig8a", "kappa"), ("fig8b", "r_tun")):
        tab = read_csv(presets(name) / "lambda.csv")
        se, mp = tab["lambda_se"].mean(), tab["lambda_mp"].mean()
        crossings = int(np.sum(np.diff(np.sign(tab["lambda_se"] - tab["lambda_mp"])) != 0))
        good = se < mp
        ok &= good
        details.append(f"{name} mean se {se:.3f} vs mp {mp:.3f} ({'se < mp' if good else 'se >= mp'}), "
                       f"{crossings} sign changes along {scan}")
    acceptance(9, ok, "; ".join(details))
    assert ok


# 10 ------------------------------------------------------------------------------------------

def test_criterion_10_determinism(presets, acceptance, tmp_path):
    mismatched = []
    for name in ALL_PRESETS:
        first = presets(name)
        again = tmp_path / name
        runner.run(get_preset(name), again)
        for fname in sorted(os.listdir(first)):
            if fname == runner.RUNTIME_FILE:
                continue
            if (first / fname).read_bytes() != (again / fname).read_bytes():
                mismatched.append(f"{name}/{fname}")
    ok = not mismatched
    acceptance(10, ok, f"{len(ALL_PRESETS)} presets re-run; "
                       + ("all payload files byte-identical" if ok else "differences: " + ", ".join(mismatched)))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
