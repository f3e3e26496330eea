"""Proximal time-stepping for the uncertainty propagation of a linear SDE.

The exact proximal step is available when the drift is symmetric and the
noise isotropic; the general Hurwitz/controllable case goes through the
equipartition and symmetrization coordinate changes and first-order
mean/covariance recursions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ControllabilityError,
    ModeMismatchError,
    SingularityError,
    StepSizeError,
    ValidationError,
)
from .gaussians import Gaussian, as_vector
from .matrices import (
    SpdMatrix,
    as_square,
    expm,
    inv_sqrt_spd,
    lyapunov_solve,
    max_abs,
    quadratic_matrix_solve,
    require_hurwitz,
    sqrt_spd,
    sym_skew_split,
)

CONTROLLABILITY_RTOL = 1e-9


def controllability_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    blocks = [b]
    for _ in range(n - 1):
        blocks.append(a @ blocks[-1])
    return np.hstack(blocks)


class LinearSystem:
    """Stable linear diffusion dx = A x dt + sqrt(2) B dw.

    B carries the convention that the Fokker-Planck diffusion term is
    2 B B^T. A must be Hurwitz and (A, B) controllable.
    """

    __slots__ = ("a", "b")

    def __init__(self, a, b):
        a = np.array(require_hurwitz(as_square(a, "A")))  # own copy before freezing
        bm = np.array(b, dtype=float)
        if bm.ndim == 0:
            bm = bm.reshape(1, 1)
        elif bm.ndim == 1:
            bm = bm.reshape(-1, 1)
        if bm.ndim != 2 or bm.shape[0] != a.shape[0]:
            raise ValidationError(
                f"B must have {a.shape[0]} rows, got shape {bm.shape}"
            )
        if not np.all(np.isfinite(bm)):
            raise ValidationError("B has non-finite entries")
        sv = np.linalg.svd(controllability_matrix(a, bm), compute_uv=False)
        rank = int(np.sum(sv > CONTROLLABILITY_RTOL * sv[0])) if sv[0] > 0 else 0
        if rank < a.shape[0]:
            raise ControllabilityError(
                f"(A, B) is not controllable: rank {rank} < {a.shape[0]}"
            )
        a.flags.writeable = False
        bm.flags.writeable = False
        self.a = a
        self.b = bm

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def noise_dim(self) -> int:
        return self.b.shape[1]

    def diffusion(self) -> np.ndarray:
        """The Fokker-Planck forcing 2 B B^T."""
        return 2.0 * self.b @ self.b.T


@dataclass(frozen=True)
class StepConfig:
    """Discretization contract: step size h, step count, inverse temperature."""

    h: float
    steps: int
    beta: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0.0):
            raise ValidationError(f"step size must be positive, got {self.h}")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValidationError(f"step count must be a nonnegative integer, got {self.steps}")
        if self.beta is not None and not (np.isfinite(self.beta) and self.beta > 0.0):
            raise ValidationError(f"beta must be positive when given, got {self.beta}")
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "steps", int(self.steps))


@dataclass(frozen=True, eq=False)
class EquipartitionFrame:
    """System rewritten so the stationary covariance is theta * I."""

    pinf: SpdMatrix
    theta: float
    a_ep: np.ndarray
    b_ep: np.ndarray
    a_ep_sym: np.ndarray
    a_ep_skew: np.ndarray
    pinf_sqrt: np.ndarray
    pinf_inv_sqrt: np.ndarray


def make_equipartition(sys: LinearSystem) -> EquipartitionFrame:
    """Rescale by the stationary covariance so energy is equipartitioned.

    A_ep = Pinf^(-1/2) A Pinf^(1/2), B_ep = Pinf^(-1/2) B, theta = tr(Pinf)/n;
    the rescaled pair satisfies A_ep (theta I) + (theta I) A_ep^T
    + 2 theta B_ep B_ep^T = 0.
    """
    pinf = SpdMatrix(lyapunov_solve(sys.a, sys.diffusion()))
    theta = pinf.trace() / sys.dim
    s = sqrt_spd(pinf).mat
    si = inv_sqrt_spd(pinf).mat
    a_ep = si @ sys.a @ s
    b_ep = si @ sys.b
    a_sym, a_skew = sym_skew_split(a_ep)
    return EquipartitionFrame(
        pinf=pinf,
        theta=theta,
        a_ep=a_ep,
        b_ep=b_ep,
        a_ep_sym=a_sym,
        a_ep_skew=a_skew,
        pinf_sqrt=s,
        pinf_inv_sqrt=si,
    )


def symmetrized_pair(frame: EquipartitionFrame, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Instantaneous symmetric drift and noise after the rotating change of frame.

    F(t) = e^(-skew t) A_ep_sym e^(skew t) and G(t) = e^(-skew t) B_ep; F stays
    symmetric negative semidefinite with G G^T = -F, so the stationary
    covariance theta I is preserved at every t.
    """
    if max_abs(frame.a_ep_skew) == 0.0:
        return frame.a_ep_sym.copy(), frame.b_ep.copy()
    rot = expm(frame.a_ep_skew, -t)
    f = rot @ frame.a_ep_sym @ rot.T
    return 0.5 * (f + f.T), rot @ frame.b_ep


def jko_step_symmetric(
    g_prev: Gaussian, gamma: SpdMatrix, beta: float, h: float
) -> Gaussian:
    """One exact proximal step for symmetric drift -Gamma and isotropic noise.

    Mean is the resolvent (I + h Gamma)^-1 mu0. Covariance comes from the
    SPD quadratic equation: with c = beta/h and
    Rhs = P0^(-1/2) (I + h Gamma) P0^(-1/2), solve Z^2 + c Z - c Rhs = 0 and
    set P = P0^(-1/2) Z^-2 P0^(-1/2). The Gibbs density N(0, (beta Gamma)^-1)
    is an exact fixed point.
    """
    if gamma.dim != g_prev.dim:
        raise ValidationError(
            f"dimension mismatch: state {g_prev.dim} vs potential {gamma.dim}"
        )
    if not (np.isfinite(beta) and beta > 0.0):
        raise ValidationError(f"beta must be positive, got {beta}")
    if not (np.isfinite(h) and h > 0.0):
        raise ValidationError(f"step size must be positive, got {h}")
    n = g_prev.dim
    shifted = np.eye(n) + h * gamma.mat
    mean = np.linalg.solve(shifted, g_prev.mean)
    p0_isqrt = inv_sqrt_spd(g_prev.cov).mat
    rhs = SpdMatrix(p0_isqrt @ shifted @ p0_isqrt)
    z = quadratic_matrix_solve(beta / h, rhs)
    cov = p0_isqrt @ z.map_eigenvalues(lambda w: w ** -2.0) @ p0_isqrt
    return Gaussian(mean, SpdMatrix(cov))


def jko_step_general_mean(
    mu_prev, frame: EquipartitionFrame, k: int, h: float
) -> np.ndarray:
    """Mean recursion for the general case, expressed in original coordinates.

    mu_k = Pinf^(1/2) e^(skew kh) (I - h F(kh))^-1 e^(skew h) e^(-skew kh)
    Pinf^(-1/2) mu_{k-1}; I - h F(kh) >= I since F <= 0, so the solve never
    degenerates. Agrees with (I + h A) mu_{k-1} to first order.
    """
    if k < 1:
        raise ValidationError(f"step index must be >= 1, got {k}")
    if not (np.isfinite(h) and h > 0.0):
        raise ValidationError(f"step size must be positive, got {h}")
    mu = as_vector(mu_prev, dim=frame.pinf.dim, name="mean")
    n = frame.pinf.dim
    t = k * h
    f_kh, _ = symmetrized_pair(frame, t)
    v = frame.pinf_inv_sqrt @ mu
    if max_abs(frame.a_ep_skew) != 0.0:
        rot = expm(frame.a_ep_skew, t)
        v = rot.T @ v
        v = expm(frame.a_ep_skew, h) @ v
        v = np.linalg.solve(np.eye(n) - h * f_kh, v)
        v = rot @ v
    else:
        v = np.linalg.solve(np.eye(n) - h * f_kh, v)
    return frame.pinf_sqrt @ v


def jko_step_general_cov(p_prev: SpdMatrix, sys: LinearSystem, h: float) -> SpdMatrix:
    """First-order covariance recursion P + h (A P + P A^T + 2 B B^T)."""
    if p_prev.dim != sys.dim:
        raise ValidationError(f"dimension mismatch: {p_prev.dim} vs {sys.dim}")
    if not (np.isfinite(h) and h >= 0.0):
        raise ValidationError(f"step size must be nonnegative, got {h}")
    p = p_prev.mat
    nxt = p + h * (sys.a @ p + p @ sys.a.T + sys.diffusion())
    try:
        return SpdMatrix(0.5 * (nxt + nxt.T))
    except SingularityError as exc:
        raise StepSizeError(
            f"covariance step with h={h} lost positive-definiteness; use a smaller step"
        ) from exc


MODE_SYMMETRIC = "symmetric-exact"
MODE_GENERAL = "general-first-order"


def propagate(
    sys: LinearSystem, g0: Gaussian, cfg: StepConfig, mode: str
) -> list[tuple[float, Gaussian]]:
    """Iterate the proximal recursion for cfg.steps steps of size cfg.h.

    Returns [(0, g0), (h, g1), ...]. Mode "symmetric-exact" requires a
    symmetric drift and B B^T = I/beta and applies the exact proximal step;
    "general-first-order" uses the equipartition-frame mean recursion and the
    first-order covariance recursion.
    """
    if g0.dim != sys.dim:
        raise ValidationError(f"dimension mismatch: state {g0.dim} vs system {sys.dim}")
    out = [(0.0, g0)]
    if mode == MODE_SYMMETRIC:
        asym = max_abs(sys.a - sys.a.T)
        if asym > 1e-9 * (1.0 + max_abs(sys.a)):
            raise ModeMismatchError(
                f"symmetric-exact mode requires a symmetric drift; asymmetry {asym:.3e}"
            )
        if cfg.beta is None:
            raise ModeMismatchError("symmetric-exact mode requires beta in the step config")
        bbt = sys.b @ sys.b.T
        iso_gap = max_abs(bbt - np.eye(sys.dim) / cfg.beta)
        if iso_gap > 1e-9 * (1.0 + 1.0 / cfg.beta):
            raise ModeMismatchError(
                "symmetric-exact mode requires isotropic noise B B^T = I/beta; "
                f"deviation {iso_gap:.3e}"
            )
        gamma = SpdMatrix(-sys.a)
        g = g0
        for k in range(1, cfg.steps + 1):
            g = jko_step_symmetric(g, gamma, cfg.beta, cfg.h)
            out.append((k * cfg.h, g))
    elif mode == MODE_GENERAL:
        frame = make_equipartition(sys)
        g = g0
        for k in range(1, cfg.steps + 1):
            mean = jko_step_general_mean(g.mean, frame, k, cfg.h)
            cov = jko_step_general_cov(g.cov, sys, cfg.h)
            g = Gaussian(mean, cov)
            out.append((k * cfg.h, g))
    else:
        raise ValidationError(f"unknown propagation mode {mode!r}")
    return out
