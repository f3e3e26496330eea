"""Seeded Euler-Maruyama simulation of the state SDE and observation increments.

One pseudorandom stream per path (never shared); per step the process draws
come first, then the measurement draws, so paths are a pure function of
(inputs, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .filtering import MeasurementModel
from .gaussians import Gaussian, as_vector
from .matrices import sqrt_spd
from .propagation import LinearSystem, StepConfig
from .rng import GaussianStream


@dataclass(frozen=True, eq=False)
class SimPath:
    """True state path plus measurement increments for one realization."""

    states: np.ndarray  # (steps + 1, n)
    increments: np.ndarray  # (steps, m)
    h: float
    seed: int

    def __post_init__(self):
        if self.states.shape[0] != self.increments.shape[0] + 1:
            raise ValidationError(
                f"{self.states.shape[0]} states require "
                f"{self.states.shape[0] - 1} increments, got {self.increments.shape[0]}"
            )

    @property
    def steps(self) -> int:
        return self.increments.shape[0]


def simulate(
    sys: LinearSystem,
    meas: MeasurementModel,
    x0,
    cfg: StepConfig,
    seed: int,
    process_noise_scale: float = 1.0,
    measurement_noise_scale: float = 1.0,
) -> SimPath:
    """Simulate x_{k+1} = x_k + h A x_k + sqrt(2h) B xi_k and
    dz_k = h C x_k + sqrt(h) R^(1/2) eta_k.

    x0 is either an exact state vector or a Gaussian to draw the initial
    state from (one draw). The two noise-scale hooks exist for deterministic
    degenerate tests; both default to 1.
    """
    if meas.state_dim != sys.dim:
        raise DimensionError("system and measurement model dimensions disagree")
    stream = GaussianStream(seed)
    if isinstance(x0, Gaussian):
        if x0.dim != sys.dim:
            raise DimensionError("initial Gaussian dimension does not match the system")
        x = x0.mean + sqrt_spd(x0.cov).mat @ stream.draw(sys.dim)
    else:
        x = as_vector(x0, dim=sys.dim, name="initial state").copy()
    h = cfg.h
    sqrt_2h = np.sqrt(2.0 * h)
    sqrt_h = np.sqrt(h)
    r_half = sqrt_spd(meas.r).mat
    p = sys.noise_dim
    m = meas.obs_dim
    states = np.empty((cfg.steps + 1, sys.dim))
    increments = np.empty((cfg.steps, m))
    states[0] = x
    for k in range(cfg.steps):
        xi = stream.draw(p)
        eta = stream.draw(m)
        increments[k] = h * (meas.c @ x) + measurement_noise_scale * sqrt_h * (r_half @ eta)
        x = x + h * (sys.a @ x) + process_noise_scale * sqrt_2h * (sys.b @ xi)
        states[k + 1] = x
    states.flags.writeable = False
    increments.flags.writeable = False
    return SimPath(states=states, increments=increments, h=h, seed=seed)


def increments_to_y(path: SimPath) -> np.ndarray:
    """Per-step measurements y_k = dz_k / h."""
    return path.increments / path.h


def coarsen(path: SimPath, factor: int) -> SimPath:
    """Regroup a fine path onto step factor*h: increments are exact partial
    sums of the fine increments, states are subsampled, so every step size
    sees the same underlying noise realization."""
    if int(factor) != factor or factor < 1:
        raise ValidationError(f"factor must be a positive integer, got {factor}")
    factor = int(factor)
    if path.steps % factor != 0:
        raise ValidationError(
            f"{path.steps} steps cannot be regrouped by a factor of {factor}"
        )
    grouped = path.increments.reshape(path.steps // factor, factor, -1).sum(axis=1)
    return SimPath(
        states=path.states[::factor],
        increments=grouped,
        h=path.h * factor,
        seed=path.seed,
    )
