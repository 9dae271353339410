"""Ready-made configurations for every figure of the study.

Rates are in units of the natural reference of each figure (``kappa`` for the
tracking figures, ``beta`` for the estimation figures).  Choices the figure
captions leave open are listed in each preset's ``deviations`` field.
"""
from __future__ import annotations

import copy

_TIGHT = {"rtol": 1e-11, "atol": 1e-13}

# -- Wigner snapshots ----------------------------------------------------------------

_FIG2 = {
    "kind": "wigner",
    "description": "Cavity Wigner function while the junction tunnels out of self-trapping: "
                   "N=30, beta=kappa=R, high-Q cavity, coherent field alpha=1.5.",
    "params": {"beta": 1.0, "kappa": 1.0, "r_tun": 1.0, "gamma": 0.01},
    "space": {"n_atoms": 30, "cav_cutoff": 15},
    "initial_state": {"atoms": {"fock": 20}, "cavity": {"coherent": [1.5, 0.0]}},
    "driven": False,
    "time": {"values": [0.0, 0.5, 1.0, 1.5]},
    "numerics": {"rtol": 1e-10, "atol": 1e-12, "method": "DOP853"},
    "wigner": {"extent": 5.0, "points": 201, "frame": "rotating"},
    "deviations": [
        "gamma/beta = 0.01 instead of the caption's ~1e36 ratio: a leak that slow is numerically "
        "zero over the window, 0.01 keeps a visible but small decay",
        "initial atoms |n1=20, n2=10> and coherent amplitude 1.5 are not fixed by the caption",
        "snapshot times 0, 0.5, 1.0, 1.5 (units of 1/beta) chosen to show the ring forming",
        "Wigner maps are given in the frame rotating with the cavity",
    ],
}

# -- population tracking ---------------------------------------------------------------

_FIG3_PARAMS = {"kappa": 1.0, "eta": 1.0, "gamma": 500.0, "beta": 1.0 / 16.0}
_FIG3_DEVIATIONS = [
    "initial state |n1=20, n2=10> with an empty cavity; the caption does not give it "
    "(|30, 0> is self-trapped at R/kappa=1 and shows no dynamics)",
    "cav_cutoff 3: the steady photon number (2 eta/gamma)^2 is 1.6e-5",
    "quadratures read with the local oscillator locked to the pump (phase pi/2)",
    "integrator tolerances rtol 1e-11, atol 1e-13",
]


def _fig3(r_tun: float, panel: str, probe_off: bool) -> dict:
    return {
        "kind": "track",
        "description": f"<n1> and <n1^2> against their cavity estimates, N=30, R/kappa={r_tun:g} "
                       f"(panel {panel}).",
        "params": dict(_FIG3_PARAMS, r_tun=r_tun),
        "space": {"n_atoms": 30, "cav_cutoff": 3},
        "initial_state": {"atoms": {"fock": 20}, "cavity": {"fock": 0}},
        "driven": True,
        "time": {"start": 0.0, "stop": 0.8, "points": 1601},
        "numerics": dict(_TIGHT, method="DOP853"),
        "track": {"t0": 0.07, "t1": 0.8, "lag_max": 0.05, "probe_off_reference": probe_off},
        "deviations": list(_FIG3_DEVIATIONS),
    }


def _xi(r_tun: float, n_states: int, batches: int, smoke: bool) -> dict:
    label = "smoke run, " if smoke else ""
    return {
        "kind": "xi-scan",
        "description": f"xi_m and xi_q over random initial junction states, {label}"
                       f"{batches} x {n_states} states, R/kappa={r_tun:g}, window 0.07-0.8 / kappa.",
        "params": dict(_FIG3_PARAMS, r_tun=r_tun),
        "space": {"n_atoms": 30, "cav_cutoff": 3},
        "initial_state": {"atoms": {"random": 0}, "cavity": {"fock": 0}},
        "driven": True,
        "seed": 2024,
        "time": {"start": 0.0, "stop": 0.8, "points": 161},
        "numerics": dict(_TIGHT, method="expm"),
        "xi": {"n_states": n_states, "batches": batches, "t0": 0.07, "t1": 0.8},
        "deviations": [
            "random states: normalised complex Gaussian amplitudes over the N+1 Fock states",
            "two disjoint batches from one seed to test distribution stability",
            "161-point output grid (step 0.005 / kappa) for the window averages",
            "matrix-exponential propagation instead of Runge-Kutta",
        ] + ([f"smoke size {batches} x {n_states} instead of 100 states"] if smoke else []),
    }


# -- estimation --------------------------------------------------------------------------

_EST_PARAMS = {"omega_a": 0.1, "omega_c": 0.1, "omega_p": 0.1, "eta": 0.1, "gamma": 1.0, "beta": 1.0}
_EST_SPACE = {"n_atoms": 2, "cav_cutoff": 6}
_EST_STATE = {"atoms": {"fock": 2}, "cavity": {"fock": 0}}
_SCAN_AXIS = {"start": 0.05, "stop": 1.0, "points": 20}
_EST_DEVIATIONS = [
    "scanned range 0.05-1.0 (units of beta) on a 20-point grid; the figures do not state it",
    "cav_cutoff 6",
    "states reported in the lab frame (pump rotation restored)",
    "integrator tolerances rtol 1e-11, atol 1e-13",
]
_FIG6_TIMES = [0.5 * k for k in range(1, 21)]


def _est(kind_desc: str, fixed: dict, scan: dict, extra_dev=()) -> dict:
    return {
        "kind": "lambda-scan",
        "description": kind_desc,
        "params": dict(_EST_PARAMS, **fixed),
        "space": dict(_EST_SPACE),
        "initial_state": copy.deepcopy(_EST_STATE),
        "driven": True,
        "numerics": dict(_TIGHT, eps=1e-10),
        "scan": scan,
        "deviations": list(_EST_DEVIATIONS) + list(extra_dev),
    }


_PRESETS = {
    "fig2": _FIG2,
    "fig3a": _fig3(1.0, "a", True),
    "fig3b": _fig3(1.0, "b", False),
    "fig3c": _fig3(30.0, "c", True),
    "fig3d": _fig3(30.0, "d", False),
    "fig4": _xi(1.0, 100, 2, False),
    "fig5": _xi(30.0, 100, 2, False),
    "fig4-smoke": _xi(1.0, 10, 2, True),
    "fig5-smoke": _xi(30.0, 10, 2, True),
    "fig6a": _est("Lambda(kappa) against kappa and beta t at R/beta=0.5 (caption value).",
                  {"r_tun": 0.5},
                  {"parameter": "kappa", "values": dict(_SCAN_AXIS), "times": _FIG6_TIMES},
                  ["the caption gives R/beta=0.5 while the text uses R=0.15 beta; "
                   "preset fig6a-text covers the text value"]),
    "fig6a-text": _est("Lambda(kappa) against kappa and beta t at R/beta=0.15 (text value).",
                       {"r_tun": 0.15},
                       {"parameter": "kappa", "values": dict(_SCAN_AXIS), "times": _FIG6_TIMES},
                       ["R/beta=0.15 from the discussion instead of the caption's 0.5"]),
    "fig6b": _est("Lambda(R) against R and beta t at kappa/beta=0.5.",
                  {"kappa": 0.5},
                  {"parameter": "r_tun", "values": dict(_SCAN_AXIS), "times": _FIG6_TIMES}),
    "fig7a": _est("Lambda_mp over the (R, kappa) plane at beta t = 10.",
                  {},
                  {"parameter": "r_tun", "values": {"start": 0.05, "stop": 1.0, "points": 12},
                   "second_parameter": "kappa",
                   "second_values": {"start": 0.05, "stop": 1.0, "points": 12}, "times": [10.0]},
                  ["12 x 12 grid over (R, kappa)", "fig7a and fig7b share one computation; "
                   "both figures of merit are written"]),
    "fig7b": _est("Lambda_se over the (R, kappa) plane at beta t = 10.",
                  {},
                  {"parameter": "r_tun", "values": {"start": 0.05, "stop": 1.0, "points": 12},
                   "second_parameter": "kappa",
                   "second_values": {"start": 0.05, "stop": 1.0, "points": 12}, "times": [10.0]},
                  ["12 x 12 grid over (R, kappa)", "fig7a and fig7b share one computation; "
                   "both figures of merit are written"]),
    "fig8a": _est("Lambda_mp and Lambda_se against kappa at R/beta=0.15, beta t = 10.",
                  {"r_tun": 0.15},
                  {"parameter": "kappa", "values": dict(_SCAN_AXIS), "times": [10.0]}),
    "fig8b": _est("Lambda_mp and Lambda_se against R at kappa/beta=0.15, beta t = 10.",
                  {"kappa": 0.15},
                  {"parameter": "r_tun", "values": dict(_SCAN_AXIS), "times": [10.0]}),
    "bare-cavity": {
        "kind": "jump-check",
        "description": "Quantum jumps against the master equation for a decaying Fock state |3> "
                       "in an empty junction (N=0), gamma=1.",
        "params": {"gamma": 1.0},
        "space": {"n_atoms": 0, "cav_cutoff": 6},
        "initial_state": {"atoms": {"fock": 0}, "cavity": {"fock": 3}},
        "driven": False,
        "seed": 7,
        "time": {"start": 0.0, "stop": 3.0, "points": 31},
        "numerics": {"rtol": 1e-10, "atol": 1e-12, "method": "DOP853", "n_traj": 4000},
        "jumps": {"checkpoints": [250, 1000], "chunk": 500},
        "deviations": ["Fock |3> instead of a coherent state: a decaying coherent state stays "
                       "pure and coherent, so jump noise and its 1/sqrt(n) scaling vanish"],
    },
    "fig3a-jumps": {
        "kind": "jump-check",
        "description": "Quantum jumps against the master equation with the fig3a parameters.",
        "params": dict(_FIG3_PARAMS, r_tun=1.0),
        "space": {"n_atoms": 30, "cav_cutoff": 3},
        "initial_state": {"atoms": {"fock": 20}, "cavity": {"fock": 0}},
        "driven": True,
        "seed": 11,
        "time": {"start": 0.0, "stop": 0.8, "points": 81},
        "numerics": dict(_TIGHT, method="DOP853", n_traj=4000),
        "jumps": {"checkpoints": [250, 1000], "chunk": 500},
        "deviations": list(_FIG3_DEVIATIONS) + ["81-point output grid"],
    },
}


def preset_names() -> list[str]:
    return list(_PRESETS)


def get_preset(name: str) -> dict:
    """A fresh copy of the named preset, tagged with its name."""
    try:
        cfg = copy.deepcopy(_PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(_PRESETS)}") from None
    cfg["preset"] = name
    return cfg


def list_presets() -> list[dict]:
    """Catalog entries: name, kind, description, parameters and deviations."""
    out = []
    for name in _PRESETS:
        cfg = get_preset(name)
        out.append({"name": name, "kind": cfg["kind"], "description": cfg["description"],
                    "params": cfg["params"], "deviations": cfg["deviations"]})
    return out
