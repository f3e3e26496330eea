"""Reference solutions the recursions are tested against.

Closed-form/ODE propagation of the exact mean and covariance, fixed-substep
integration of the optimal filter and of the static-gain observer, and a
brute-force numeric minimizer for the three proximal objectives. These are
deliberately independent implementations: the brute-force minimizer never
calls the closed-form steps it is used to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, OracleFailure, ValidationError
from .gaussians import (
    Gaussian,
    as_vector,
    free_energy,
    kl_gaussian,
    phi_expectation,
    w2_gaussian,
)
from .matrices import SpdMatrix, expm, inv_spd, max_abs
from .propagation import LinearSystem

LOG_TWO_PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class OdeConfig:
    """Fixed-substep integrator settings; substep should be well below any
    compared scheme's step (h/10 or finer)."""

    substep: float = 1e-3
    tolerance: float = 1e-8

    def __post_init__(self):
        if not (np.isfinite(self.substep) and self.substep > 0.0):
            raise ValidationError(f"substep must be positive, got {self.substep}")

    @staticmethod
    def for_step(h: float) -> "OdeConfig":
        return OdeConfig(substep=h / 20.0)


def rk4_step(f, y, dt: float):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(f, y0, horizon: float, substep: float):
    """Integrate y' = f(y) over [0, horizon] with equal steps near substep."""
    if horizon == 0.0:
        return y0
    n = max(1, int(math.ceil(horizon / substep - 1e-12)))
    dt = horizon / n
    y = y0
    for _ in range(n):
        y = rk4_step(f, y, dt)
    return y


def exact_mean(sys: LinearSystem, mu0, t: float) -> np.ndarray:
    """Mean of the state at time t: e^(A t) mu0."""
    mu = as_vector(mu0, dim=sys.dim, name="initial mean")
    if t == 0.0:
        return mu.copy()
    return expm(sys.a, t) @ mu


def _isotropic_level(sys: LinearSystem) -> float | None:
    """Return q with B B^T = q I if the noise is isotropic, else None."""
    bbt = sys.b @ sys.b.T
    q = float(np.trace(bbt)) / sys.dim
    if max_abs(bbt - q * np.eye(sys.dim)) <= 1e-9 * (1.0 + abs(q)):
        return q
    return None


def exact_cov(
    sys: LinearSystem,
    p0: SpdMatrix,
    t: float,
    cfg: OdeConfig | None = None,
    method: str = "auto",
) -> SpdMatrix:
    """Covariance of the state at time t.

    For a symmetric drift -Gamma with isotropic noise B B^T = I/beta the
    closed form Gamma^-1 (I - e^(-2 Gamma t)) / beta + e^(-Gamma t) P0
    e^(-Gamma t) is used; otherwise the covariance ODE
    P' = A P + P A^T + 2 B B^T is integrated with fixed-substep RK4.
    """
    if p0.dim != sys.dim:
        raise DimensionError(f"dimension mismatch: {p0.dim} vs {sys.dim}")
    if t < 0.0 or not np.isfinite(t):
        raise ValidationError(f"time must be nonnegative and finite, got {t}")
    if t == 0.0:
        return p0
    symmetric = max_abs(sys.a - sys.a.T) <= 1e-9 * (1.0 + max_abs(sys.a))
    iso = _isotropic_level(sys)
    if method not in ("auto", "closed", "rk4"):
        raise ValidationError(f"unknown method {method!r}")
    use_closed = method == "closed" or (method == "auto" and symmetric and iso is not None)
    if use_closed:
        if not (symmetric and iso is not None):
            raise ValidationError("closed form needs a symmetric drift and isotropic noise")
        gamma = SpdMatrix(-sys.a)
        decay = gamma.map_eigenvalues(lambda w: np.exp(-w * t))
        settled = gamma.map_eigenvalues(lambda w: 2.0 * iso * (1.0 - np.exp(-2.0 * w * t)) / (2.0 * w))
        return SpdMatrix(settled + decay @ p0.mat @ decay)
    cfg = cfg or OdeConfig(substep=min(1e-3, t / 10.0))
    forcing = sys.diffusion()

    def rate(p):
        return sys.a @ p + p @ sys.a.T + forcing

    final = rk4_integrate(rate, p0.mat, t, cfg.substep)
    return SpdMatrix(0.5 * (final + final.T))


def _check_run_inputs(sys, meas, g0, dz, h, cfg):
    dz = np.asarray(dz, dtype=float)
    if dz.ndim == 1:
        dz = dz.reshape(-1, 1)
    if dz.ndim != 2 or dz.shape[1] != meas.obs_dim:
        raise DimensionError(
            f"increments have shape {dz.shape}, expected (*, {meas.obs_dim})"
        )
    if meas.state_dim != sys.dim or g0.dim != sys.dim:
        raise DimensionError("system, measurement model, and prior dimensions disagree")
    if not (np.isfinite(h) and h > 0.0):
        raise ValidationError(f"step size must be positive, got {h}")
    cfg = cfg or OdeConfig.for_step(h)
    if cfg.substep > h / 10.0 * (1.0 + 1e-9):
        raise ValidationError(
            f"reference substep {cfg.substep} must be at most a tenth of the data step {h}"
        )
    return dz, cfg


def kalman_bucy_run(
    sys: LinearSystem,
    meas,
    g0: Gaussian,
    dz,
    h: float,
    cfg: OdeConfig | None = None,
) -> list[Gaussian]:
    """Integrate the optimal continuous-time filter across the data intervals.

    Covariance follows the Riccati ODE
    P' = A P + P A^T + 2 B B^T - P C^T R^-1 C P (RK4 substeps); the mean is
    advanced by Euler substeps with the gain K = P C^T R^-1 against the
    piecewise-constant data rate dz_k / h. Returns the filter state at the
    interval boundaries (length len(dz) + 1).
    """
    dz, cfg = _check_run_inputs(sys, meas, g0, dz, h, cfg)
    n_sub = max(1, round(h / cfg.substep))
    dt = h / n_sub
    forcing = sys.diffusion()
    c = meas.c
    rinv = meas.rinv
    ct_rinv = c.T @ rinv

    def riccati(p):
        gain = p @ ct_rinv
        return sys.a @ p + p @ sys.a.T + forcing - gain @ meas.r.mat @ gain.T

    mu = g0.mean.copy()
    p = g0.cov.mat.copy()
    out = [g0]
    for k in range(dz.shape[0]):
        y = dz[k] / h
        for _ in range(n_sub):
            gain = p @ ct_rinv
            mu = mu + dt * (sys.a @ mu + gain @ (y - c @ mu))
            p = rk4_step(riccati, p, dt)
            p = 0.5 * (p + p.T)
        out.append(Gaussian(mu.copy(), SpdMatrix(p)))
    return out


def luenberger_run(
    sys: LinearSystem,
    meas,
    g0: Gaussian,
    dz,
    h: float,
    cfg: OdeConfig | None = None,
) -> list[Gaussian]:
    """Integrate the static-gain observer with injection L = C^T R^-1.

    The covariance follows the Lyapunov ODE
    P' = (A - L C) P + P (A - L C)^T + 2 B B^T, decoupled from the gain.
    """
    dz, cfg = _check_run_inputs(sys, meas, g0, dz, h, cfg)
    n_sub = max(1, round(h / cfg.substep))
    dt = h / n_sub
    forcing = sys.diffusion()
    c = meas.c
    gain = c.T @ meas.rinv
    closed = sys.a - gain @ c

    def lyapunov(p):
        return closed @ p + p @ closed.T + forcing

    mu = g0.mean.copy()
    p = g0.cov.mat.copy()
    out = [g0]
    for k in range(dz.shape[0]):
        y = dz[k] / h
        for _ in range(n_sub):
            mu = mu + dt * (sys.a @ mu + gain @ (y - c @ mu))
            p = rk4_step(lyapunov, p, dt)
            p = 0.5 * (p + p.T)
        out.append(Gaussian(mu.copy(), SpdMatrix(p)))
    return out


KIND_JKO = "jko-free-energy"
KIND_LMMR = "lmmr-kl"
KIND_WFILTER = "wasserstein-filter"


@dataclass(frozen=True, eq=False)
class ProxObjective:
    """One proximal objective: distance-to-anchor term plus h times a functional.

    kind "jko-free-energy" needs (gamma, beta); "lmmr-kl" and
    "wasserstein-filter" need (c, r, y).
    """

    kind: str
    anchor: Gaussian
    gamma: SpdMatrix | None = None
    beta: float | None = None
    c: np.ndarray | None = None
    r: SpdMatrix | None = None
    y: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == KIND_JKO:
            if self.gamma is None or self.beta is None:
                raise ValidationError("jko-free-energy objective needs gamma and beta")
            if self.gamma.dim != self.anchor.dim:
                raise DimensionError("potential dimension does not match the anchor")
        elif self.kind in (KIND_LMMR, KIND_WFILTER):
            if self.c is None or self.r is None or self.y is None:
                raise ValidationError(f"{self.kind} objective needs c, r, and y")
            c = np.asarray(self.c, dtype=float)
            if c.ndim == 0:
                c = c.reshape(1, 1)
            if c.shape[1] != self.anchor.dim or c.shape[0] != self.r.dim:
                raise DimensionError("observation shapes are inconsistent")
            object.__setattr__(self, "c", c)
            object.__setattr__(self, "y", as_vector(self.y, dim=c.shape[0], name="y"))
        else:
            raise ValidationError(f"unknown objective kind {self.kind!r}")


def prox_objective_value(obj: ProxObjective, g: Gaussian, h: float) -> float:
    """Evaluate the proximal objective at a candidate Gaussian."""
    if obj.kind == KIND_JKO:
        return 0.5 * w2_gaussian(g, obj.anchor) ** 2 + h * free_energy(
            g, obj.gamma, obj.beta
        )
    misfit = phi_expectation(g, obj.c, inv_spd(obj.r), obj.y)
    if obj.kind == KIND_LMMR:
        return kl_gaussian(g, obj.anchor) + h * misfit
    return 0.5 * w2_gaussian(g, obj.anchor) ** 2 + h * misfit


@dataclass(frozen=True)
class SearchConfig:
    """Brute-force search knobs: grid for n=1, descent for n=2."""

    grid_points: int = 200
    refinements: int = 3
    max_iterations: int = 5000
    gradient_tol: float = 1e-7


def _scalar_objective_grid(obj: ProxObjective, h: float, mu, p):
    """Vectorized scalar objective on broadcastable (mu, p) grids.

    Written against the scalar closed forms directly so the search stays
    independent of the matrix-valued implementations it is used to check.
    """
    mu0 = float(obj.anchor.mean[0])
    p0 = float(obj.anchor.cov.mat[0, 0])
    if obj.kind == KIND_JKO:
        gam = float(obj.gamma.mat[0, 0])
        w2sq = (mu - mu0) ** 2 + (np.sqrt(p) - np.sqrt(p0)) ** 2
        energy = 0.5 * (gam * mu ** 2 + gam * p)
        entropy = -0.5 * (1.0 + LOG_TWO_PI + np.log(p))
        return 0.5 * w2sq + h * (energy + entropy / obj.beta)
    cc = float(obj.c[0, 0])
    rr = float(obj.r.mat[0, 0])
    yy = float(obj.y[0])
    misfit = 0.5 * ((yy - cc * mu) ** 2 / rr + cc * cc * p / rr)
    if obj.kind == KIND_LMMR:
        kl = 0.5 * (p / p0 + (mu0 - mu) ** 2 / p0 - 1.0 - np.log(p / p0))
        return kl + h * misfit
    w2sq = (mu - mu0) ** 2 + (np.sqrt(p) - np.sqrt(p0)) ** 2
    return 0.5 * w2sq + h * misfit


def _grid_search_scalar(obj: ProxObjective, h: float, search: SearchConfig):
    mu0 = float(obj.anchor.mean[0])
    p0 = float(obj.anchor.cov.mat[0, 0])
    span_mu = 3.0 + 2.0 * math.sqrt(p0)
    mu_lo, mu_hi = mu0 - span_mu, mu0 + span_mu
    p_lo, p_hi = max(1e-8, 0.05 * p0), 4.0 * p0 + 4.0 * h * (
        1.0 / obj.beta if obj.kind == KIND_JKO else 1.0
    )
    npts = search.grid_points
    best_mu = best_p = best_val = None
    for stage in range(search.refinements + 1):
        mu_axis = np.linspace(mu_lo, mu_hi, npts)
        p_axis = np.linspace(p_lo, p_hi, npts)
        vals = _scalar_objective_grid(obj, h, mu_axis[:, None], p_axis[None, :])
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        if stage == 0 and (i in (0, npts - 1) or j in (0, npts - 1)):
            raise OracleFailure("grid minimizer landed on the search boundary")
        best_mu, best_p, best_val = mu_axis[i], p_axis[j], float(vals[i, j])
        d_mu = mu_axis[1] - mu_axis[0]
        d_p = p_axis[1] - p_axis[0]
        mu_lo, mu_hi = best_mu - 2.0 * d_mu, best_mu + 2.0 * d_mu
        p_lo, p_hi = max(1e-10, best_p - 2.0 * d_p), best_p + 2.0 * d_p
    g = Gaussian(np.array([best_mu]), SpdMatrix(np.array([[best_p]])))
    return g, best_val


def _pack_cholesky(mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    ell = np.linalg.cholesky(cov)
    return np.array([mean[0], mean[1], ell[0, 0], ell[1, 0], ell[1, 1]])


def _unpack_cholesky(theta: np.ndarray):
    mean = theta[:2]
    ell = np.array([[theta[2], 0.0], [theta[3], theta[4]]])
    return mean, ell @ ell.T


def _descent_2d(obj: ProxObjective, h: float, search: SearchConfig):
    def value(theta):
        if theta[2] <= 1e-8 or theta[4] <= 1e-8:
            return np.inf
        mean, cov = _unpack_cholesky(theta)
        return prox_objective_value(obj, Gaussian(mean, SpdMatrix(cov)), h)

    def gradient(theta):
        grad = np.zeros_like(theta)
        for i in range(theta.size):
            delta = 1e-6 * max(1.0, abs(theta[i]))
            up = theta.copy()
            up[i] += delta
            dn = theta.copy()
            dn[i] -= delta
            grad[i] = (value(up) - value(dn)) / (2.0 * delta)
        return grad

    theta = _pack_cholesky(obj.anchor.mean, obj.anchor.cov.mat)
    f0 = value(theta)
    for _ in range(search.max_iterations):
        grad = gradient(theta)
        gmax = float(np.max(np.abs(grad)))
        if gmax < search.gradient_tol:
            mean, cov = _unpack_cholesky(theta)
            return Gaussian(mean, SpdMatrix(cov)), f0
        step = 1.0
        improved = False
        for _ in range(60):
            cand = theta - step * grad
            fc = value(cand)
            if fc <= f0 - 1e-4 * step * float(grad @ grad):
                theta, f0 = cand, fc
                improved = True
                break
            step *= 0.5
        if not improved:
            # line search stalled at numeric noise: accept if gradient is small
            if gmax < 1e2 * search.gradient_tol:
                mean, cov = _unpack_cholesky(theta)
                return Gaussian(mean, SpdMatrix(cov)), f0
            raise OracleFailure(
                f"descent stalled with gradient max-abs {gmax:.3e}"
            )
    raise OracleFailure("descent did not converge within the iteration budget")


def brute_force_prox(
    obj: ProxObjective, h: float, search: SearchConfig | None = None
) -> tuple[Gaussian, float]:
    """Numerically minimize the proximal objective over (mu, P), for n <= 2.

    n = 1 uses a two-stage refined grid; n = 2 uses gradient descent with
    numeric gradients and backtracking. Raises OracleFailure rather than
    returning a dubious minimizer.
    """
    if not (np.isfinite(h) and h >= 0.0):
        raise ValidationError(f"step size must be nonnegative, got {h}")
    search = search or SearchConfig()
    if h == 0.0:
        return obj.anchor, 0.0
    if obj.anchor.dim == 1:
        return _grid_search_scalar(obj, h, search)
    if obj.anchor.dim == 2:
        return _descent_2d(obj, h, search)
    raise ValidationError("brute-force search supports dimensions 1 and 2 only")
