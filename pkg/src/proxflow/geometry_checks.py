"""Randomized identity suites for the Gaussian-geometry layer.

Each check runs a batch of random instances and reports the count of
failures together with the worst-case slack or residual, so the same code
backs both the test suite and the CLI report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussians import (
    Gaussian,
    grad_w2_cross,
    trace_projection,
    transport_map,
    w2_gaussian,
)
from .matrices import SpdMatrix, max_abs, sqrt_spd
from .sampling import random_spd

TRACE_SLACK_TOL = -1e-12
TRANSPORT_RESIDUAL_TOL = 1e-10
GRADIENT_REL_TOL = 1e-6
PROJECTION_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one randomized identity suite."""

    name: str
    trials: int
    failures: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _dims_cycle(dims, trials):
    dims = list(dims)
    for i in range(trials):
        yield dims[i % len(dims)]


def check_trace_inequality(trials: int, dims, rng: np.random.Generator) -> CheckResult:
    """tr((X^(1/2) Y X^(1/2))^(1/2)) <= sqrt(tr X tr Y) for SPD X, Y.

    Reports the worst (most negative) slack; a trial fails when the slack
    drops below -1e-12.
    """
    worst = math.inf
    failures = 0
    for n in _dims_cycle(dims, trials):
        x = random_spd(rng, n)
        y = random_spd(rng, n)
        sx = sqrt_spd(x).mat
        inner = sqrt_spd(SpdMatrix(sx @ y.mat @ sx)).trace()
        slack = math.sqrt(x.trace() * y.trace()) - inner
        worst = min(worst, slack)
        if slack < TRACE_SLACK_TOL:
            failures += 1
    return CheckResult("trace_inequality", trials, failures, worst)


def check_transport_identities(trials: int, dims, rng: np.random.Generator) -> CheckResult:
    """Push-forward moment identities of the optimal affine map, plus
    agreement of the closed-moment transport cost with the distance."""
    worst = 0.0
    failures = 0
    for n in _dims_cycle(dims, trials):
        g0 = Gaussian(rng.normal(size=n), random_spd(rng, n))
        g1 = Gaussian(rng.normal(size=n), random_spd(rng, n))
        t = transport_map(g0, g1)
        mean_resid = max_abs(t(g0.mean) - g1.mean)
        cov_resid = max_abs(t.linear @ g0.cov.mat @ t.linear.T - g1.cov.mat)
        # E |x - T(x)|^2 under g0, in closed moment form
        shift = (np.eye(n) - t.linear) @ g0.mean - t.offset
        spread = (np.eye(n) - t.linear) @ g0.cov.mat @ (np.eye(n) - t.linear).T
        cost = float(shift @ shift + np.trace(spread))
        w2_resid = abs(cost - w2_gaussian(g0, g1) ** 2)
        resid = max(mean_resid, cov_resid, w2_resid)
        worst = max(worst, resid)
        if resid > TRANSPORT_RESIDUAL_TOL:
            failures += 1
    return CheckResult("transport_map", trials, failures, worst)


def _trace_sqrt_cross(p_mat: np.ndarray, s0: np.ndarray) -> float:
    return sqrt_spd(SpdMatrix(s0 @ p_mat @ s0)).trace()


def check_w2_gradient(
    trials: int, dims, rng: np.random.Generator, fd_step: float = 1e-5
) -> CheckResult:
    """Analytic derivative of the transport cross term against central
    finite differences over symmetric perturbations."""
    worst = 0.0
    failures = 0
    for n in _dims_cycle(dims, trials):
        p = random_spd(rng, n)
        p0 = random_spd(rng, n)
        s0 = sqrt_spd(p0).mat
        grad = grad_w2_cross(p, p0)
        fd = np.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                pert = np.zeros((n, n))
                pert[i, j] = 1.0
                pert[j, i] = 1.0
                up = _trace_sqrt_cross(p.mat + fd_step * pert, s0)
                dn = _trace_sqrt_cross(p.mat - fd_step * pert, s0)
                fd[i, j] = fd[j, i] = (up - dn) / (2.0 * fd_step)
        # diagonal perturbation moves one entry, off-diagonal moves two
        analytic = 2.0 * grad - np.diag(np.diag(grad))
        rel = max_abs(fd - analytic) / max(1.0, max_abs(analytic))
        worst = max(worst, rel)
        if rel > GRADIENT_REL_TOL:
            failures += 1
    return CheckResult("w2_gradient", trials, failures, worst)


def check_trace_projection(trials: int, dims, rng: np.random.Generator) -> CheckResult:
    """Dilation formula for the trace-constrained projection against the
    transport distance computed from the returned Gaussian."""
    worst = 0.0
    failures = 0
    for n in _dims_cycle(dims, trials):
        g0 = Gaussian(rng.normal(size=n), random_spd(rng, n))
        mu = rng.normal(size=n)
        tau = float(rng.uniform(0.5, 4.0) * g0.cov.trace())
        w2, g = trace_projection(g0, mu, tau)
        resid = abs(w2 - w2_gaussian(g, g0))
        worst = max(worst, resid)
        if resid > PROJECTION_RESIDUAL_TOL:
            failures += 1
    return CheckResult("trace_projection", trials, failures, worst)


def run_all_checks(trials: int, dims, seed: int) -> list[CheckResult]:
    """Run every suite on its own deterministic substream."""
    results = []
    for offset, check in enumerate(
        (
            check_trace_inequality,
            check_transport_identities,
            check_w2_gradient,
            check_trace_projection,
        )
    ):
        rng = np.random.default_rng(seed + offset)
        results.append(check(trials, dims, rng))
    return results
