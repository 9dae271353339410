"""Experiment configuration: JSON schema, defaults and resolution."""
from __future__ import annotations

import copy
import json
import math

import jsonschema

KINDS = ("wigner", "track", "xi-scan", "qfi-single", "qfi-multi", "lambda-scan", "jump-check")
PARAM_NAMES = ("e0", "kappa", "r_tun", "beta", "gamma", "eta", "delta_c", "omega_c", "omega_p",
               "n_thermal")

_number = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_nonneg_int = {"type": "integer", "minimum": 0}
_rate_names = ("kappa", "r_tun")
TAIL_LIMIT = 1e-8

_grid = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "start": _number,
        "stop": _number,
        "points": {"type": "integer", "minimum": 1},
        "values": {"type": "array", "items": _number, "minItems": 1},
    },
    "oneOf": [{"required": ["start", "stop", "points"]}, {"required": ["values"]}],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "probe experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "params", "space", "initial_state"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "preset": {"type": "string"},
        "description": {"type": "string"},
        "deviations": {"type": "array", "items": {"type": "string"}},
        "seed": _nonneg_int,
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                **{k: _number for k in PARAM_NAMES},
                "gamma": {"type": "number", "minimum": 0},
                "n_thermal": {"type": "number", "minimum": 0},
                "omega_a": _number,
            },
        },
        "space": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_atoms", "cav_cutoff"],
            "properties": {"n_atoms": _nonneg_int, "cav_cutoff": _nonneg_int},
        },
        "initial_state": {
            "type": "object",
            "additionalProperties": False,
            "required": ["atoms", "cavity"],
            "properties": {
                "atoms": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "fock": _nonneg_int,
                        "random": _nonneg_int,
                        "amplitudes": {
                            "type": "array",
                            "items": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                            "minItems": 1,
                        },
                    },
                    "minProperties": 1,
                    "maxProperties": 1,
                },
                "cavity": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "fock": _nonneg_int,
                        "coherent": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                    },
                    "minProperties": 1,
                    "maxProperties": 1,
                },
            },
        },
        "driven": {"type": "boolean"},
        "time": _grid,
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "method": {"enum": ["DOP853", "RK45", "expm"]},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "fd_step": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "n_traj": _pos_int,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "gnuplot": {"type": "boolean"}},
        },
        "wigner": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"extent": {"type": "number", "exclusiveMinimum": 0},
                           "points": {"type": "integer", "minimum": 3},
                           "frame": {"enum": ["rotating", "lab"]}},
        },
        "track": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"t0": _number, "t1": _number, "lag_max": {"type": "number", "exclusiveMinimum": 0},
                           "probe_off_reference": {"type": "boolean"}},
        },
        "xi": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n_states": _pos_int, "batches": _pos_int, "t0": _number, "t1": _number},
        },
        "qfi": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "parameters": {"type": "array", "items": {"enum": list(_rate_names)},
                               "minItems": 1, "maxItems": 2, "uniqueItems": True},
                "t": {"type": "number", "exclusiveMinimum": 0},
                "m_measurements": _pos_int,
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "required": ["parameter", "values"],
            "properties": {
                "parameter": {"enum": list(_rate_names)},
                "values": _grid,
                "second_parameter": {"enum": list(_rate_names)},
                "second_values": _grid,
                "times": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "report": {"enum": ["single", "both"]},
            },
            "dependentRequired": {"second_parameter": ["second_values"]},
        },
        "jumps": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"checkpoints": {"type": "array", "items": _pos_int},
                           "chunk": _pos_int},
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "driven": False,
    "deviations": [],
    "description": "",
    "numerics": {"rtol": 1e-8, "atol": 1e-10, "method": "DOP853", "eps": 1e-10, "fd_step": None,
                 "n_traj": 1000},
    "output": {"gnuplot": False},
    "wigner": {"extent": 6.0, "points": 201, "frame": "rotating"},
    "track": {"t0": 0.07, "t1": 0.8, "lag_max": 0.05, "probe_off_reference": False},
    "xi": {"n_states": 100, "batches": 1, "t0": 0.07, "t1": 0.8},
    "qfi": {"parameters": ["r_tun"], "t": 10.0, "m_measurements": 1},
    "jumps": {"checkpoints": [], "chunk": 500},
}
# sections that only make sense for one kind
_KIND_SECTIONS = {"wigner": "wigner", "track": "track", "xi-scan": "xi", "qfi-single": "qfi",
                  "qfi-multi": "qfi", "lambda-scan": "scan", "jump-check": "jumps"}


class ConfigError(ValueError):
    """Schema or consistency problem; ``errors`` lists one message per fault."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def schema_errors(config) -> list[str]:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(validator.iter_errors(config), key=lambda e: (list(e.absolute_path), e.message))
    return [f"{_path(e)}: {e.message}" for e in errs]


def _semantic_errors(cfg: dict) -> list[str]:
    out = []
    p = cfg["params"]
    if "omega_a" in p and "e0" in p and p["omega_a"] != p["e0"]:
        out.append("params: omega_a is an alias of e0; give one or make them equal")
    n, c = cfg["space"]["n_atoms"], cfg["space"]["cav_cutoff"]
    atoms, cav = cfg["initial_state"]["atoms"], cfg["initial_state"]["cavity"]
    if "fock" in atoms and atoms["fock"] > n:
        out.append(f"initial_state/atoms/fock: {atoms['fock']} exceeds n_atoms = {n}")
    if "amplitudes" in atoms and len(atoms["amplitudes"]) != n + 1:
        out.append(f"initial_state/atoms/amplitudes: need {n + 1} entries")
    if "fock" in cav and cav["fock"] > c:
        out.append(f"initial_state/cavity/fock: {cav['fock']} exceeds cav_cutoff = {c}")
    kind = cfg["kind"]
    for sec, owner in (("wigner", "wigner"), ("track", "track"), ("xi", "xi-scan"),
                       ("scan", "lambda-scan"), ("jumps", "jump-check")):
        if sec in cfg and kind != owner:
            out.append(f"{sec}: section only valid for kind '{owner}'")
    if "qfi" in cfg and kind not in ("qfi-single", "qfi-multi"):
        out.append("qfi: section only valid for qfi kinds")
    if kind == "lambda-scan" and "scan" not in cfg:
        out.append("scan: required for kind 'lambda-scan'")
    if kind in ("wigner", "track", "xi-scan", "jump-check") and "time" not in cfg:
        out.append(f"time: required for kind '{kind}'")
    if kind == "qfi-multi" and len(cfg.get("qfi", {}).get("parameters", ["r_tun", "kappa"])) != 2:
        out.append("qfi/parameters: qfi-multi needs two parameters")
    if kind in ("track", "xi-scan"):
        if cfg["params"].get("delta_c", 0.0) != 0.0:
            out.append("params/delta_c: the cavity estimators need a resonant pump")
        if not cfg.get("driven", False):
            out.append("driven: tracking needs the pumped (driven) model")
    if kind == "jump-check" and "random" in atoms:
        out.append("initial_state/atoms: jump-check needs a fixed initial state")
    if kind == "xi-scan":
        if "random" not in atoms:
            out.append("initial_state/atoms: xi-scan draws random states; give {'random': first_index}")
        if cav != {"fock": 0}:
            out.append("initial_state/cavity: xi-scan starts from the empty cavity ({'fock': 0})")
    if kind == "lambda-scan" and cfg.get("numerics", {}).get("fd_step") is not None:
        out.append("numerics/fd_step: lambda-scan always uses the default relative step")
    scan = cfg.get("scan", {})
    if scan.get("second_parameter") is not None and scan["second_parameter"] == scan.get("parameter"):
        out.append("scan/second_parameter: must differ from scan/parameter")
    if "coherent" in cav:
        tail = _coherent_tail(complex(*cav["coherent"]), c)
        if tail > TAIL_LIMIT:
            out.append(f"initial_state/cavity: coherent tail above the cutoff is {tail:.2e} "
                       f"(limit {TAIL_LIMIT:g}); raise cav_cutoff")
    return out


def _coherent_tail(alpha: complex, cutoff: int) -> float:
    # same quantity as hilbert.coherent_tail, without importing numpy at CLI start-up
    term = math.exp(-abs(alpha) ** 2)
    total = term
    for n in range(1, cutoff + 1):
        term *= abs(alpha) ** 2 / n
        total += term
    return max(0.0, 1.0 - total)


def _merge(default: dict, given: dict) -> dict:
    out = copy.deepcopy(default)
    for k, v in given.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def resolve(config: dict) -> dict:
    """Validate and expand defaults; raises :class:`ConfigError`."""
    errors = schema_errors(config)
    if errors:
        raise ConfigError(errors)
    errors = _semantic_errors(config)
    if errors:
        raise ConfigError(errors)
    cfg = copy.deepcopy(config)
    kind = cfg["kind"]
    for key in ("seed", "driven", "deviations", "description"):
        cfg.setdefault(key, copy.deepcopy(DEFAULTS[key]))
    cfg["numerics"] = _merge(DEFAULTS["numerics"], cfg.get("numerics", {}))
    # the output directory is wherever the resolved config gets written
    cfg["output"] = _merge(DEFAULTS["output"], {k: v for k, v in cfg.get("output", {}).items()
                                                 if k != "dir"})
    section = _KIND_SECTIONS[kind]
    if section in DEFAULTS:
        cfg[section] = _merge(DEFAULTS[section], cfg.get(section, {}))
    if kind == "qfi-multi" and "parameters" not in config.get("qfi", {}):
        cfg["qfi"]["parameters"] = ["r_tun", "kappa"]
    if kind == "lambda-scan":
        cfg["scan"].setdefault("times", [10.0])
        cfg["scan"].setdefault("report", "both")
    params = {k: 0.0 for k in PARAM_NAMES}
    given = dict(cfg["params"])
    if "omega_a" in given:
        given["e0"] = given.pop("omega_a")
    params.update({k: float(v) for k, v in given.items()})
    cfg["params"] = params
    return cfg


def load(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
