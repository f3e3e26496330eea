#!/usr/bin/env python3
"""Minimal walkthrough: propagate a scalar Gaussian by proximal steps and
compare against the closed-form mean/covariance at each output time."""

from proxflow import (
    Gaussian,
    LinearSystem,
    SpdMatrix,
    StepConfig,
    exact_cov,
    exact_mean,
    propagate,
)


def run() -> None:
    system = LinearSystem([[-1.0]], [[1.0]])  # dx = -x dt + sqrt(2) dw
    g0 = Gaussian([2.0], SpdMatrix(2.0))
    cfg = StepConfig(h=0.05, steps=20, beta=1.0)
    path = propagate(system, g0, cfg, "symmetric-exact")
    print(f"{'t':>5} {'mean':>10} {'exact':>10} {'cov':>10} {'exact':>10}")
    for t, g in path[:: 4]:
        mean_ref = exact_mean(system, g0.mean, t)[0]
        cov_ref = exact_cov(system, g0.cov, t).mat[0, 0]
        print(
            f"{t:5.2f} {g.mean[0]:10.6f} {mean_ref:10.6f} "
            f"{g.cov.mat[0, 0]:10.6f} {cov_ref:10.6f}"
        )
    print(f"\nstationary covariance: {exact_cov(system, g0.cov, 50.0).mat[0, 0]:.6f}")


if __name__ == "__main__":
    run()
