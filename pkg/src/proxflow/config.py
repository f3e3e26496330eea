"""Experiment configuration: JSON file schema, validation, and hashing.

The config is a single JSON document; matrices are row-major nested arrays
of decimals. Validation errors name the offending field.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ProxflowError
from .filtering import MeasurementModel
from .gaussians import Gaussian
from .matrices import SpdMatrix
from .propagation import MODE_GENERAL, MODE_SYMMETRIC, LinearSystem

TASKS = ("propagation", "filter", "compare")
UPDATE_KINDS = ("lmmr", "wasserstein")
PREDICT_KINDS = ("jko", "exact")


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated experiment description plus the hash of its source text."""

    task: str
    system: LinearSystem
    measurement: MeasurementModel | None
    initial: Gaussian
    h_values: tuple
    horizon: float
    beta: float | None
    seeds: tuple
    propagation_mode: str
    update_kind: str
    predict_kind: str
    out_csv: str | None
    out_json: str | None
    config_hash: str

    def steps_for(self, h: float) -> int:
        steps = round(self.horizon / h)
        if steps < 1 or abs(steps * h - self.horizon) > 1e-9 * max(1.0, self.horizon):
            raise ConfigError(f"steps.h: horizon {self.horizon} is not a multiple of {h}")
        return steps


def _require(raw: dict, field: str, path: str):
    if field not in raw:
        raise ConfigError(f"{path}{field}: missing required field")
    return raw[field]


def _matrix(value, path: str) -> np.ndarray:
    try:
        m = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a numeric array ({exc})") from exc
    if m.ndim != 2:
        raise ConfigError(f"{path}: expected a nested (row-major) array of rows")
    return m


def _vector(value, path: str) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a numeric array ({exc})") from exc
    if v.ndim != 1:
        raise ConfigError(f"{path}: expected a flat array of decimals")
    return v


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")

    mode = raw.get("mode", {})
    task = mode.get("task", "propagation")
    if task not in TASKS:
        raise ConfigError(f"mode.task: must be one of {TASKS}, got {task!r}")

    sys_raw = _require(raw, "system", "")
    try:
        system = LinearSystem(
            _matrix(_require(sys_raw, "A", "system."), "system.A"),
            _matrix(_require(sys_raw, "B", "system."), "system.B"),
        )
    except ConfigError:
        raise
    except ProxflowError as exc:
        raise ConfigError(f"system: {exc}") from exc

    measurement = None
    if task in ("filter", "compare"):
        meas_raw = _require(raw, "measurement", "")
        try:
            measurement = MeasurementModel(
                _matrix(_require(meas_raw, "C", "measurement."), "measurement.C"),
                SpdMatrix(_matrix(_require(meas_raw, "R", "measurement."), "measurement.R")),
            )
        except ConfigError:
            raise
        except ProxflowError as exc:
            raise ConfigError(f"measurement: {exc}") from exc
        if measurement.state_dim != system.dim:
            raise ConfigError(
                f"measurement.C: acts on dim {measurement.state_dim}, system has dim {system.dim}"
            )

    init_raw = _require(raw, "initial", "")
    try:
        initial = Gaussian(
            _vector(_require(init_raw, "mean", "initial."), "initial.mean"),
            SpdMatrix(_matrix(_require(init_raw, "cov", "initial."), "initial.cov")),
        )
    except ConfigError:
        raise
    except ProxflowError as exc:
        raise ConfigError(f"initial: {exc}") from exc
    if initial.dim != system.dim:
        raise ConfigError(f"initial.mean: dim {initial.dim} does not match system {system.dim}")

    steps_raw = _require(raw, "steps", "")
    h_values = tuple(float(h) for h in _vector(_require(steps_raw, "h", "steps."), "steps.h"))
    if not h_values or any(h <= 0 for h in h_values):
        raise ConfigError("steps.h: need at least one positive step size")
    if len(set(h_values)) != len(h_values):
        raise ConfigError("steps.h: step sizes must be distinct")
    horizon = float(_require(steps_raw, "horizon", "steps."))
    if horizon <= 0:
        raise ConfigError(f"steps.horizon: must be positive, got {horizon}")
    beta = steps_raw.get("beta")
    if beta is not None:
        beta = float(beta)
        if beta <= 0:
            raise ConfigError(f"steps.beta: must be positive, got {beta}")

    seeds = raw.get("seeds", [])
    if not isinstance(seeds, list) or any(int(s) != s for s in seeds):
        raise ConfigError("seeds: must be a list of integers")
    seeds = tuple(int(s) for s in seeds)
    if task in ("filter", "compare") and not seeds:
        raise ConfigError("seeds: at least one seed is required for filter tasks")

    propagation_mode = mode.get("propagation", MODE_SYMMETRIC)
    if propagation_mode not in (MODE_SYMMETRIC, MODE_GENERAL):
        raise ConfigError(f"mode.propagation: unknown mode {propagation_mode!r}")
    update_kind = mode.get("update", "lmmr")
    if update_kind not in UPDATE_KINDS:
        raise ConfigError(f"mode.update: must be one of {UPDATE_KINDS}")
    predict_kind = mode.get("predict", "jko")
    if predict_kind not in PREDICT_KINDS:
        raise ConfigError(f"mode.predict: must be one of {PREDICT_KINDS}")

    output = raw.get("output", {})
    out_csv = output.get("csv")
    out_json = output.get("json")

    cfg = ExperimentConfig(
        task=task,
        system=system,
        measurement=measurement,
        initial=initial,
        h_values=h_values,
        horizon=horizon,
        beta=beta,
        seeds=seeds,
        propagation_mode=propagation_mode,
        update_kind=update_kind,
        predict_kind=predict_kind,
        out_csv=out_csv,
        out_json=out_json,
        config_hash=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )
    for h in h_values:
        cfg.steps_for(h)
    if task == "filter":
        h_min = min(h_values)
        for h in h_values:
            ratio = h / h_min
            if abs(ratio - round(ratio)) > 1e-9:
                raise ConfigError(
                    f"steps.h: {h} is not an integer multiple of the finest step {h_min}"
                )
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
