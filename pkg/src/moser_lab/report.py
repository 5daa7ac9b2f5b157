"""Scenario specs, orchestration and machine-readable run reports."""

from __future__ import annotations

import csv
import importlib
import inspect
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig, Tolerances
from .groups import LieError, log
from .homomorphisms import TrivialityCertificate, Verdict, certify_trivial, certify_weakly_trivial
from .scenarios import HOMOMORPHISM, KINDS, SUBGROUP, get
from .subgroups import certify_subgroup_trivial

CSV_HEADER = ("epsilon", "cocycle_defect", "transgression_residual", "conjugation_error")

_SPEC_KEYS = {"scenario_id", "kind", "eps_max", "eps_steps", "quadrature_resolution", "sample_count", "fd_step",
              "tolerances", "seed", "factory", "expected"}
_TOL_KEYS = {"transgression_tol", "certificate_tol", "hom_tol"}
# spec key -> PipelineConfig field
_CONFIG_KEYS = {"eps_max": "eps_max", "eps_steps": "eps_steps", "quadrature_resolution": "resolution",
                "sample_count": "sample_count", "fd_step": "fd_step", "seed": "seed"}


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: str
    kind: str
    config: PipelineConfig
    expected: Verdict
    factory: str | None = None

    def to_dict(self) -> dict:
        c = self.config
        out = {"scenario_id": self.scenario_id, "kind": self.kind, "eps_max": c.eps_max, "eps_steps": c.eps_steps,
               "quadrature_resolution": c.resolution, "sample_count": c.sample_count, "fd_step": c.fd_step,
               "tolerances": {k: getattr(c.tolerances, k) for k in sorted(_TOL_KEYS)}, "seed": c.seed,
               "expected": str(self.expected)}
        if self.factory:
            out["factory"] = self.factory
        return out


def _number(data: dict, key: str, kind: type):
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float) if kind is float else int):
        raise SpecError(f"{key} must be {'a number' if kind is float else 'an integer'}, got {v!r}")
    return kind(v)


def parse_spec(data: dict) -> ScenarioSpec:
    """Validate a JSON scenario spec; missing fields take the scenario's defaults."""
    if not isinstance(data, dict):
        raise SpecError("spec must be a JSON object")
    unknown = set(data) - _SPEC_KEYS
    if unknown:
        raise SpecError(f"unknown keys: {', '.join(sorted(unknown))}")
    sid = data.get("scenario_id")
    if not isinstance(sid, str):
        raise SpecError("scenario_id is required and must be a string")
    if sid == "custom":
        factory = data.get("factory")
        if not isinstance(factory, str) or ":" not in factory:
            raise SpecError("custom scenarios need factory = 'module:attribute'")
        kind = data.get("kind")
        defaults: dict = {}
        expected = Verdict.TRIVIALLY_CERTIFIED
    else:
        try:
            scenario = get(sid)
        except KeyError as exc:
            raise SpecError(str(exc)) from exc
        factory, kind, defaults, expected = None, data.get("kind", scenario.kind), scenario.defaults, scenario.expected
        if kind != scenario.kind:
            raise SpecError(f"scenario {sid} has kind {scenario.kind}, spec says {kind}")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {', '.join(KINDS)}, got {kind!r}")
    if "expected" in data:
        try:
            expected = Verdict(data["expected"])
        except ValueError as exc:
            raise SpecError(f"unknown verdict {data['expected']!r}") from exc

    changes = dict(defaults)
    for key, field_name in _CONFIG_KEYS.items():
        if key in data:
            changes[field_name] = _number(data, key, float if key in ("eps_max", "fd_step") else int)
    if "tolerances" in data:
        tol = data["tolerances"]
        if not isinstance(tol, dict) or set(tol) - _TOL_KEYS:
            raise SpecError(f"tolerances must be an object with keys among {sorted(_TOL_KEYS)}")
        changes["tolerances"] = Tolerances(**{k: _number(tol, k, float) for k in tol})
    try:
        config = PipelineConfig().with_(**changes)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    return ScenarioSpec(sid, kind, config, expected, factory)


def load_spec(path: str | Path) -> ScenarioSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    return parse_spec(data)


def scenario_spec(scenario_id: str, **overrides) -> ScenarioSpec:
    """Spec for a catalog scenario with its defaults plus PipelineConfig overrides."""
    sc = get(scenario_id)
    config = PipelineConfig().with_(**{**sc.defaults, **overrides})
    return ScenarioSpec(sc.id, sc.kind, config, sc.expected)


def _build(spec: ScenarioSpec):
    if spec.factory is None:
        return get(spec.scenario_id).build()
    module, _, attr = spec.factory.partition(":")
    try:
        obj = getattr(importlib.import_module(module), attr)
    except (ImportError, AttributeError) as exc:
        raise SpecError(f"cannot load factory {spec.factory}: {exc}") from exc
    # deformation objects are themselves callable, so only plain functions are invoked
    return obj() if inspect.isfunction(obj) else obj


def certify(spec: ScenarioSpec) -> TrivialityCertificate:
    obj = _build(spec)
    if spec.kind == HOMOMORPHISM:
        return certify_trivial(obj, spec.config)
    if spec.kind == SUBGROUP:
        return certify_subgroup_trivial(obj, spec.config)
    return certify_weakly_trivial(*obj, spec.config)


def _log_coords(g) -> list[float] | None:
    try:
        return [float(c) for c in log(g, radius=math.inf).coords]
    except LieError:
        return None


def _floats(a) -> list[float | None]:
    return [float(x) if math.isfinite(x) else None for x in np.asarray(a, dtype=float)]


@dataclass(frozen=True)
class RunReport:
    scenario_id: str
    kind: str
    verdict: Verdict
    expected: Verdict
    epsilon: np.ndarray
    cocycle_defect: np.ndarray
    transgression_residual: np.ndarray
    conjugation_error: np.ndarray
    g_path_log: list
    local_eps_max: float | None
    failing_eps: float | None
    wall_time: float
    config: dict
    version: str = __version__

    @property
    def matches(self) -> bool:
        return self.verdict is self.expected

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "kind": self.kind,
            "verdict": str(self.verdict),
            "expected": str(self.expected),
            "epsilon": _floats(self.epsilon),
            "cocycle_defect": _floats(self.cocycle_defect),
            "transgression_residual": _floats(self.transgression_residual),
            "conjugation_error": _floats(self.conjugation_error),
            "g_path_log": self.g_path_log,
            "local_eps_max": self.local_eps_max,
            "failing_eps": self.failing_eps,
            "wall_time": self.wall_time,
            "config": self.config,
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    def rows(self):
        cols = (self.epsilon, self.cocycle_defect, self.transgression_residual, self.conjugation_error)
        return [tuple(float(c[i]) for c in cols) for i in range(len(self.epsilon))]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for row in self.rows():
                w.writerow([repr(x) for x in row])


def run(spec: ScenarioSpec) -> RunReport:
    """Certify the scenario and package the certificate as a report."""
    t0 = time.perf_counter()
    cert = certify(spec)
    wall = time.perf_counter() - t0
    n = len(cert.eps_grid)
    logs = [_log_coords(g) for g in cert.g_path] + [None] * (n - len(cert.g_path))
    return RunReport(spec.scenario_id, spec.kind, cert.verdict, spec.expected, cert.eps_grid, cert.cocycle_defect,
                     cert.transgression.residuals, cert.conjugation_error, logs, cert.local_eps_max,
                     cert.failing_eps, wall, {**spec.to_dict(), "pipeline": spec.config.to_dict()})


def read_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        return np.array([[float(x) for x in row] for row in r])
