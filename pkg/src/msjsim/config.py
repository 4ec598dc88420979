"""Experiment configuration: TOML parsing and validation.

A config document has four parts: [system] (k, need_mode), [workload]
(either arrival_rate or target_loads), repeated [[class]] tables (need,
probability, duration distribution), and [run] (policies, n_arrivals,
seeds, threshold grid, output path).  Parsing collects every validation
problem it can find before failing, so a bad config reports all its
errors at once.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import workload as wl
from .policies import PolicyKind


class ConfigError(ValueError):
    """Carries the full list of validation errors."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_SYSTEM_KEYS = {"k", "need_mode"}
_WORKLOAD_KEYS = {"arrival_rate", "target_loads"}
_CLASS_KEYS = {"need", "probability", "dist", "mean", "scv", "value",
               "values", "probs", "means"}
_RUN_KEYS = {"policies", "n_arrivals", "warmup_fraction", "seeds",
             "r_thresholds", "output"}


@dataclass(frozen=True)
class ExperimentConfig:
    system: wl.SystemConfig
    classes: tuple
    loads: tuple          # target loads rho; lambda derived per load
    policies: tuple
    n_arrivals: int
    warmup_fraction: float
    seeds: tuple
    r_thresholds: int     # 0 disables threshold metrics
    output: str | None

    def workload_for(self, rho) -> wl.WorkloadSpec:
        base = wl.WorkloadSpec(self.classes, 1.0)
        return base.with_rate(wl.arrival_rate_for_load(base, self.system, rho))


def _duration_dist(tbl, where, errors):
    kind = tbl.get("dist")
    try:
        if kind == "deterministic":
            return wl.Deterministic(float(tbl["value"]))
        if kind == "exponential":
            return wl.Exponential(float(tbl["mean"]))
        if kind == "hyperexponential":
            if "scv" in tbl:
                return wl.Hyperexponential.from_mean_scv(
                    float(tbl["mean"]), float(tbl["scv"])
                )
            return wl.Hyperexponential(
                tuple(float(p) for p in tbl["probs"]),
                tuple(float(m) for m in tbl["means"]),
            )
        if kind == "discrete":
            return wl.DiscreteEmpirical(
                tuple(float(v) for v in tbl["values"]),
                tuple(float(p) for p in tbl["probs"]),
            )
    except KeyError as exc:
        errors.append(f"{where}: dist '{kind}' missing key {exc}")
        return None
    except (wl.WorkloadError, TypeError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
        return None
    errors.append(
        f"{where}: unknown dist {kind!r} (expected deterministic, exponential,"
        f" hyperexponential, or discrete)"
    )
    return None


def _check_keys(tbl, allowed, where, errors):
    for key in tbl:
        if key not in allowed:
            errors.append(f"{where}: unknown key {key!r}")


def parse_config(text) -> ExperimentConfig:
    """Parse and fully validate a config document.

    Raises ConfigError carrying every problem found (TOML syntax errors
    include line/column from the parser).
    """
    errors = []
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc

    for section in doc:
        if section not in ("system", "workload", "class", "run"):
            errors.append(f"unknown section [{section}]")

    system_tbl = doc.get("system")
    system = None
    if not isinstance(system_tbl, dict):
        errors.append("missing [system] section")
    else:
        _check_keys(system_tbl, _SYSTEM_KEYS, "system", errors)
        mode_name = system_tbl.get("need_mode", "power_of_two")
        try:
            mode = wl.NeedMode(mode_name)
        except ValueError:
            errors.append(f"system.need_mode: unknown mode {mode_name!r}")
            mode = None
        k = system_tbl.get("k")
        if not isinstance(k, int) or k < 1:
            errors.append(f"system.k: need a positive integer, got {k!r}")
        elif mode is not None:
            try:
                system = wl.SystemConfig(k, mode)
            except wl.WorkloadError as exc:
                errors.append(f"system: {exc}")

    classes = []
    class_tbls = doc.get("class", [])
    if not class_tbls:
        errors.append("no [[class]] tables")
    for i, tbl in enumerate(class_tbls):
        where = f"class[{i}]"
        _check_keys(tbl, _CLASS_KEYS, where, errors)
        need = tbl.get("need")
        prob = tbl.get("probability")
        dist = _duration_dist(tbl, where, errors)
        if not isinstance(need, int) or need < 1:
            errors.append(f"{where}.need: need a positive integer, got {need!r}")
            continue
        if not isinstance(prob, (int, float)):
            errors.append(f"{where}.probability: need a number, got {prob!r}")
            continue
        if dist is None:
            continue
        try:
            classes.append(wl.JobClass(need, float(prob), dist))
        except wl.WorkloadError as exc:
            errors.append(f"{where}: {exc}")

    if classes:
        total = math.fsum(c.probability for c in classes)
        if abs(total - 1.0) > wl.PROB_TOL:
            errors.append(f"class probabilities sum to {total!r}, expected 1")
        if system is not None:
            for i, c in enumerate(classes):
                if not system.valid_need(c.server_need):
                    errors.append(
                        f"class[{i}].need: {c.server_need} invalid for k={system.k}"
                        f" in {system.need_mode.value} mode"
                    )

    wk_tbl = doc.get("workload", {})
    _check_keys(wk_tbl, _WORKLOAD_KEYS, "workload", errors)
    loads = ()
    if "target_loads" in wk_tbl and "arrival_rate" in wk_tbl:
        errors.append("workload: give either arrival_rate or target_loads, not both")
    elif "target_loads" in wk_tbl:
        raw = wk_tbl["target_loads"]
        if not isinstance(raw, list) or not raw:
            errors.append("workload.target_loads: need a non-empty list")
        else:
            bad = [x for x in raw if not isinstance(x, (int, float)) or not 0 < x < 1]
            if bad:
                errors.append(f"workload.target_loads: loads must lie in (0,1), got {bad}")
            else:
                loads = tuple(float(x) for x in raw)
    elif "arrival_rate" in wk_tbl:
        lam = wk_tbl["arrival_rate"]
        if not isinstance(lam, (int, float)) or lam <= 0:
            errors.append(f"workload.arrival_rate: need a positive number, got {lam!r}")
        elif classes and system is not None and not errors:
            base = wl.WorkloadSpec(tuple(classes), float(lam))
            rho = wl.load(base, system)
            loads = (rho,)
    else:
        errors.append("workload: need arrival_rate or target_loads")

    run_tbl = doc.get("run", {})
    _check_keys(run_tbl, _RUN_KEYS, "run", errors)
    policies = []
    raw_pols = run_tbl.get("policies")
    if not isinstance(raw_pols, list) or not raw_pols:
        errors.append("run.policies: need a non-empty list of policy names")
    else:
        for name in raw_pols:
            try:
                policies.append(PolicyKind(name))
            except ValueError:
                known = ", ".join(p.value for p in PolicyKind)
                errors.append(f"run.policies: unknown policy {name!r} (known: {known})")
    n_arrivals = run_tbl.get("n_arrivals", 100_000)
    if not isinstance(n_arrivals, int) or n_arrivals < 1:
        errors.append(f"run.n_arrivals: need a positive integer, got {n_arrivals!r}")
    warmup = run_tbl.get("warmup_fraction", 0.2)
    if not isinstance(warmup, (int, float)) or not 0.0 <= warmup <= 0.5:
        errors.append(f"run.warmup_fraction: need a number in [0, 0.5], got {warmup!r}")
    seeds = run_tbl.get("seeds", [0])
    if (not isinstance(seeds, list) or not seeds
            or any(not isinstance(s, int) or s < 0 for s in seeds)):
        errors.append(f"run.seeds: need a non-empty list of nonnegative ints, got {seeds!r}")
        seeds = [0]
    r_thresholds = run_tbl.get("r_thresholds", 0)
    if not isinstance(r_thresholds, int) or r_thresholds < 0:
        errors.append(f"run.r_thresholds: need a nonnegative integer, got {r_thresholds!r}")
    gittins = [p for p in policies
               if p in (PolicyKind.SERVERFILLING_GITTINS, PolicyKind.DIVISORFILLING_GITTINS)]
    if gittins and r_thresholds:
        errors.append(
            "run.r_thresholds: threshold metrics are unavailable for Gittins "
            f"policies ({', '.join(p.value for p in gittins)})"
        )
    output = run_tbl.get("output")
    if output is not None and not isinstance(output, str):
        errors.append(f"run.output: need a path string, got {output!r}")

    if system is not None and policies:
        for p in policies:
            mode = p.required_mode
            if mode is not None and system.need_mode is not mode:
                errors.append(f"run.policies: {p.value} requires {mode.value} mode")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        system=system,
        classes=tuple(classes),
        loads=loads,
        policies=tuple(policies),
        n_arrivals=n_arrivals,
        warmup_fraction=float(warmup),
        seeds=tuple(seeds),
        r_thresholds=r_thresholds,
        output=output,
    )
