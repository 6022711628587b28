"""Run configuration: JSON ingestion with strict schema validation.

Unknown fields are rejected with an error naming the field, so typos in a
config cannot silently change a run.  The machine-readable schema shipped in
``configs/schema.json`` mirrors the checks here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .experiments import Scenario

__all__ = ["ConfigError", "RunConfig", "load_config", "validate_config"]

SCENARIO_KINDS = ("bound_grid", "issf_compare", "hlip_case", "property_suite")

_TOP_FIELDS = {"seed", "out_dir", "trials", "parallelism", "scenarios"}
_SCENARIO_FIELDS = {"id", "kind", "seed", "trials", "parameters"}

_PARAM_FIELDS = {
    "bound_grid": {
        "B", "K", "delta",
        "lambda_min", "lambda_max", "lambda_count",
        "sigma_min", "sigma_max", "sigma_count",
    },
    "issf_compare": {
        "alpha", "delta", "sigma", "h0", "K_list",
        "epsilon_min", "epsilon_max", "epsilon_count", "distributions",
    },
    "hlip_case": {
        "d_max_list", "alpha_list", "steps_per_second", "duration",
        "z0", "t_ssp", "t_dsp", "obstacle_rho", "obstacle_r",
        "v_des", "x0", "u_cap", "keep_trajectories", "A", "B",
    },
    "property_suite": set(),
}

_KNOWN_DISTRIBUTIONS = ("uniform", "truncgauss", "categorical")


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    seed: int = 0
    out_dir: str | None = None
    trials: int | None = None
    parallelism: int | None = None
    scenarios: list[Scenario] = field(default_factory=list)


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _check_fields(mapping: dict, allowed: set, where: str):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown field '{key}' in {where}")


def _check_number(params: dict, key: str, where: str, integer=False, positive=False):
    if key not in params:
        return
    v = params[key]
    ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    if integer:
        ok = isinstance(v, int) and not isinstance(v, bool)
    _require(ok, f"field '{key}' in {where} must be a number")
    if positive:
        _require(v > 0, f"field '{key}' in {where} must be positive")


def _validate_parameters(kind: str, params: dict, where: str):
    _check_fields(params, _PARAM_FIELDS[kind], where)
    if kind == "bound_grid":
        for key in ("B", "K", "delta", "lambda_min", "lambda_max", "sigma_min", "sigma_max"):
            _check_number(params, key, where)
        for key in ("lambda_count", "sigma_count"):
            _check_number(params, key, where, integer=True, positive=True)
    elif kind == "issf_compare":
        for key in ("alpha", "delta", "sigma", "h0", "epsilon_min", "epsilon_max"):
            _check_number(params, key, where)
        _check_number(params, "epsilon_count", where, integer=True, positive=True)
        if "K_list" in params:
            _require(
                isinstance(params["K_list"], list)
                and all(isinstance(k, int) and k >= 1 for k in params["K_list"]),
                f"field 'K_list' in {where} must be a list of integers >= 1",
            )
        if "distributions" in params:
            dists = params["distributions"]
            _require(isinstance(dists, list), f"field 'distributions' in {where} must be a list")
            for d in dists:
                _require(
                    d in _KNOWN_DISTRIBUTIONS,
                    f"unknown distribution '{d}' in {where}; "
                    f"known: {', '.join(_KNOWN_DISTRIBUTIONS)}",
                )
    elif kind == "hlip_case":
        for key in ("steps_per_second", "duration", "z0", "t_ssp", "t_dsp",
                    "obstacle_r", "u_cap"):
            _check_number(params, key, where)
        _check_number(params, "keep_trajectories", where, integer=True)
        for key in ("d_max_list", "alpha_list"):
            if key in params:
                _require(
                    isinstance(params[key], list) and params[key],
                    f"field '{key}' in {where} must be a nonempty list",
                )
        for key, n in (("obstacle_rho", 2), ("v_des", 2), ("x0", 6)):
            if key in params:
                _require(
                    isinstance(params[key], list) and len(params[key]) == n,
                    f"field '{key}' in {where} must be a list of {n} numbers",
                )
        for key, shape in (("A", (6, 6)), ("B", (6, 2))):
            if key in params:
                m = params[key]
                ok = (
                    isinstance(m, list)
                    and len(m) == shape[0]
                    and all(isinstance(r, list) and len(r) == shape[1] for r in m)
                )
                _require(ok, f"field '{key}' in {where} must be a {shape[0]}x{shape[1]} matrix")


def validate_config(doc: dict) -> RunConfig:
    _require(isinstance(doc, dict), "config root must be a JSON object")
    _check_fields(doc, _TOP_FIELDS, "config root")
    seed = doc.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool), "'seed' must be an integer")
    trials = doc.get("trials")
    if trials is not None:
        _require(isinstance(trials, int) and trials >= 1, "'trials' must be an integer >= 1")
    parallelism = doc.get("parallelism")
    if parallelism is not None:
        _require(
            isinstance(parallelism, int) and parallelism >= 1,
            "'parallelism' must be an integer >= 1",
        )
    out_dir = doc.get("out_dir")
    if out_dir is not None:
        _require(isinstance(out_dir, str), "'out_dir' must be a string")

    raw_scenarios = doc.get("scenarios")
    _require(
        isinstance(raw_scenarios, list) and raw_scenarios,
        "'scenarios' must be a nonempty list",
    )
    scenarios = []
    seen_ids = set()
    for i, raw in enumerate(raw_scenarios):
        where = f"scenarios[{i}]"
        _require(isinstance(raw, dict), f"{where} must be an object")
        _check_fields(raw, _SCENARIO_FIELDS, where)
        _require("id" in raw and isinstance(raw["id"], str), f"{where} needs a string 'id'")
        _require("kind" in raw, f"{where} needs a 'kind'")
        kind = raw["kind"]
        _require(
            kind in SCENARIO_KINDS,
            f"unknown kind '{kind}' in {where}; known: {', '.join(SCENARIO_KINDS)}",
        )
        _require(raw["id"] not in seen_ids, f"duplicate scenario id '{raw['id']}'")
        seen_ids.add(raw["id"])
        sc_seed = raw.get("seed", seed)
        _require(isinstance(sc_seed, int), f"'seed' in {where} must be an integer")
        sc_trials = raw.get("trials", trials if trials is not None else 1000)
        _require(
            isinstance(sc_trials, int) and sc_trials >= 1,
            f"'trials' in {where} must be an integer >= 1",
        )
        params = raw.get("parameters", {})
        _require(isinstance(params, dict), f"'parameters' in {where} must be an object")
        _validate_parameters(kind, params, where)
        scenarios.append(
            Scenario(id=raw["id"], kind=kind, parameters=params, seed=sc_seed, trials=sc_trials)
        )
    return RunConfig(
        seed=seed,
        out_dir=out_dir,
        trials=trials,
        parallelism=parallelism,
        scenarios=scenarios,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate_config(doc)
