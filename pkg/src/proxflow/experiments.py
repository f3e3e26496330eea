"""Experiment runners behind the CLI: convergence studies, filter
comparisons, and the randomized geometry report, all emitting deterministic
result tables."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import ConfigError
from .filtering import error_metrics, run_filter
from .geometry_checks import run_all_checks
from .matrices import max_abs
from .oracles import OdeConfig, exact_cov, exact_mean, kalman_bucy_run, luenberger_run
from .propagation import StepConfig, propagate
from .simulate import coarsen, simulate


@dataclass(frozen=True)
class ResultRow:
    h: float | None
    seed: int | None
    metric: str
    value: float


@dataclass(frozen=True, eq=False)
class ResultTable:
    """Deterministically ordered result rows plus provenance metadata."""

    rows: tuple
    config_hash: str
    version: str = __version__

    @staticmethod
    def _key(row: ResultRow):
        return (
            row.h is not None,
            row.h if row.h is not None else 0.0,
            row.seed is not None,
            row.seed if row.seed is not None else 0,
            row.metric,
        )

    def sorted_rows(self) -> list:
        return sorted(self.rows, key=self._key)

    def value(self, metric: str, h: float | None = None, seed: int | None = None) -> float:
        for row in self.rows:
            if row.metric == metric and row.h == h and row.seed == seed:
                return row.value
        raise KeyError(f"no row for metric={metric!r}, h={h}, seed={seed}")

    def to_csv(self) -> str:
        lines = [
            f"# config_hash={self.config_hash}",
            f"# tool_version={self.version}",
            "h,seed,metric,value",
        ]
        for row in self.sorted_rows():
            h = repr(row.h) if row.h is not None else ""
            seed = str(row.seed) if row.seed is not None else ""
            lines.append(f"{h},{seed},{row.metric},{row.value!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "config_hash": self.config_hash,
            "tool_version": self.version,
            "rows": [
                {"h": r.h, "seed": r.seed, "metric": r.metric, "value": r.value}
                for r in self.sorted_rows()
            ],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"

    def write(self, csv_path: str | None, json_path: str | None = None) -> None:
        if csv_path:
            with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(self.to_csv())
        if json_path:
            with open(json_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(self.to_json())


def _map_cells(fn, cells, threads: int):
    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, cells))
    return [fn(cell) for cell in cells]


def _ratio_rows(rows_by_h, metric: str, seed=None):
    """Consecutive-h error ratios err(2h)/err(h), attached to the smaller h."""
    out = []
    hs = sorted(rows_by_h, reverse=True)
    for coarse, fine in zip(hs, hs[1:]):
        denom = rows_by_h[fine]
        if denom > 0:
            out.append(ResultRow(fine, seed, f"{metric}_ratio", rows_by_h[coarse] / denom))
    return out


def converge_propagation(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Terminal mean/covariance errors of the proximal propagation against
    the exact references, per step size, with consecutive-h ratios."""
    if cfg.task != "propagation":
        raise ConfigError(f"mode.task: expected 'propagation', got {cfg.task!r}")
    ref_ode = OdeConfig(substep=min(cfg.h_values) / 20.0)
    ref_mean = exact_mean(cfg.system, cfg.initial.mean, cfg.horizon)
    ref_cov = exact_cov(cfg.system, cfg.initial.cov, cfg.horizon, ref_ode)

    def cell(h: float):
        steps = cfg.steps_for(h)
        step_cfg = StepConfig(h=h, steps=steps, beta=cfg.beta)
        path = propagate(cfg.system, cfg.initial, step_cfg, cfg.propagation_mode)
        terminal = path[-1][1]
        return (
            h,
            max_abs(terminal.mean - ref_mean),
            max_abs(terminal.cov.mat - ref_cov.mat),
        )

    results = _map_cells(cell, sorted(cfg.h_values, reverse=True), threads)
    rows = []
    mean_errors = {}
    cov_errors = {}
    for h, mean_err, cov_err in results:
        rows.append(ResultRow(h, None, "terminal_mean_error", mean_err))
        rows.append(ResultRow(h, None, "terminal_cov_error", cov_err))
        mean_errors[h] = mean_err
        cov_errors[h] = cov_err
    rows.extend(_ratio_rows(mean_errors, "terminal_mean_error"))
    rows.extend(_ratio_rows(cov_errors, "terminal_cov_error"))
    return ResultTable(tuple(rows), cfg.config_hash)


def _reference_run(cfg: ExperimentConfig, g0, dz, h):
    runner = kalman_bucy_run if cfg.update_kind == "lmmr" else luenberger_run
    return runner(cfg.system, cfg.measurement, g0, dz, h, OdeConfig.for_step(h))


def converge_filter(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Per-step-size filter error against the continuous-time reference run
    on a shared noise realization (coarse increments are partial sums of the
    finest path's increments)."""
    if cfg.task != "filter":
        raise ConfigError(f"mode.task: expected 'filter', got {cfg.task!r}")
    h_min = min(cfg.h_values)

    def seed_cells(seed: int):
        master = simulate(
            cfg.system,
            cfg.measurement,
            cfg.initial,
            StepConfig(h=h_min, steps=cfg.steps_for(h_min)),
            seed,
        )
        reference = _reference_run(cfg, cfg.initial, master.increments, h_min)
        ref_cov = reference[-1].cov.mat
        ref_means = np.array([g.mean for g in reference])
        out = []
        for h in sorted(cfg.h_values, reverse=True):
            factor = round(h / h_min)
            path = coarsen(master, factor)
            run = run_filter(
                cfg.system,
                cfg.measurement,
                cfg.initial,
                path.increments,
                StepConfig(h=h, steps=path.steps),
                update=cfg.update_kind,
                predict=cfg.predict_kind,
            )
            cov_err = max_abs(run.terminal.cov.mat - ref_cov)
            diff = run.means() - ref_means[::factor]
            mean_rmse = float(np.sqrt(np.mean(np.sum(diff ** 2, axis=1))))
            out.append((h, seed, cov_err, mean_rmse))
        return out

    rows = []
    for cells in _map_cells(seed_cells, list(cfg.seeds), threads):
        cov_errors = {}
        seed = cells[0][1]
        for h, s, cov_err, mean_rmse in cells:
            rows.append(ResultRow(h, s, "terminal_cov_error", cov_err))
            rows.append(ResultRow(h, s, "mean_path_rmse_vs_reference", mean_rmse))
            cov_errors[h] = cov_err
        rows.extend(_ratio_rows(cov_errors, "terminal_cov_error", seed=seed))
    return ResultTable(tuple(rows), cfg.config_hash)


def compare_filters(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Monte Carlo comparison of the two proximal filters on shared paths:
    truth-based terminal errors per seed, aggregate RMSE, and each filter's
    self-assessed terminal covariance."""
    if cfg.task != "compare":
        raise ConfigError(f"mode.task: expected 'compare', got {cfg.task!r}")
    h = cfg.h_values[0]
    steps = cfg.steps_for(h)

    def cell(seed: int):
        path = simulate(
            cfg.system, cfg.measurement, cfg.initial, StepConfig(h=h, steps=steps), seed
        )
        runs = {
            kind: run_filter(
                cfg.system,
                cfg.measurement,
                cfg.initial,
                path.increments,
                StepConfig(h=h, steps=steps),
                update=kind,
                predict=cfg.predict_kind,
            )
            for kind in ("lmmr", "wasserstein")
        }
        errors = {kind: error_metrics(run, path.states) for kind, run in runs.items()}
        traces = {kind: run.terminal.cov.trace() for kind, run in runs.items()}
        return seed, errors, traces

    rows = []
    terminal_sq = {"lmmr": [], "wasserstein": []}
    traces = None
    for seed, errors, cell_traces in _map_cells(cell, list(cfg.seeds), threads):
        traces = cell_traces
        for kind in ("lmmr", "wasserstein"):
            rows.append(
                ResultRow(h, seed, f"terminal_sq_error_{kind}", errors[kind].terminal_squared)
            )
            terminal_sq[kind].append(errors[kind].terminal_squared)
    for kind in ("lmmr", "wasserstein"):
        rows.append(ResultRow(h, None, f"rmse_{kind}", float(np.sqrt(np.mean(terminal_sq[kind])))))
        rows.append(ResultRow(h, None, f"terminal_cov_trace_{kind}", traces[kind]))
    return ResultTable(tuple(rows), cfg.config_hash)


def lemma_checks(trials: int, dims, seed: int, config_hash: str | None = None) -> ResultTable:
    """Randomized geometry identity report: per suite, the trial count,
    failure count, and worst slack/residual."""
    if trials < 1:
        raise ConfigError(f"trials: must be >= 1, got {trials}")
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ConfigError(f"dims: must be positive integers, got {dims}")
    if config_hash is None:
        descriptor = json.dumps(
            {"trials": trials, "dims": list(dims), "seed": seed}, sort_keys=True
        )
        config_hash = hashlib.sha256(descriptor.encode("utf-8")).hexdigest()
    rows = []
    for result in run_all_checks(trials, dims, seed):
        rows.append(ResultRow(None, seed, f"{result.name}_trials", float(result.trials)))
        rows.append(ResultRow(None, seed, f"{result.name}_failures", float(result.failures)))
        rows.append(ResultRow(None, seed, f"{result.name}_worst", result.worst))
    return ResultTable(tuple(rows), config_hash)
