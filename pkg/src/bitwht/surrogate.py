"""Smooth stand-ins for the hard sign and bit-extraction nonlinearities.

The bit-serial transform is piecewise constant, so training needs a
differentiable twin.  sign(x) is softened to tanh(tau*x) and the b-th
magnitude bit to a logistic of a sine whose period matches that bit's
toggle pattern.  tau is annealed upward; at large tau the twin agrees
with the hard path everywhere except on the discontinuity set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class TauSchedule:
    """Geometric sharpness annealing: tau(t) = min(tau_0*growth^(t//step_every), tau_max)."""

    tau_0: float = 1.0
    growth: float = 2.0
    step_every: int = 1
    tau_max: float = 1e4

    def __post_init__(self) -> None:
        if not (self.tau_0 > 0):
            raise ValueError("tau_0 must be > 0")
        if not (self.growth > 1):
            raise ValueError("growth must be > 1")
        if self.step_every < 1:
            raise ValueError("step_every must be >= 1")
        if not (self.tau_max > 0):
            raise ValueError("tau_max must be > 0")

    def tau_at(self, step: int) -> float:
        if step < 0:
            raise ValueError("step must be >= 0")
        k = step // self.step_every
        # log-space guard: growth**k overflows float range near k ~ 1e3
        if math.log(self.tau_0) + k * math.log(self.growth) >= math.log(self.tau_max):
            return self.tau_max
        return min(self.tau_0 * self.growth**k, self.tau_max)


@dataclass(frozen=True)
class SurrogateConfig:
    """Sharpness plus the codec geometry the bit surrogates are built on."""

    tau: float
    b_max: int
    x_max: float

    def __post_init__(self) -> None:
        if not (self.tau > 0):
            raise ValueError("tau must be > 0")
        if self.b_max < 1:
            raise ValueError("b_max must be >= 1")
        if not (self.x_max > 0):
            raise ValueError("x_max must be > 0")


def sign_surrogate(x: np.ndarray, tau: float) -> np.ndarray:
    """tanh(tau*x): odd, in (-1, 1), hardens to sign as tau grows."""
    if not (tau > 0):
        raise ValueError("tau must be > 0")
    return np.tanh(tau * np.asarray(x, dtype=np.float64))


def sign_surrogate_grad(x: np.ndarray, tau: float) -> np.ndarray:
    t = sign_surrogate(x, tau)
    return tau * (1.0 - t * t)


def bit_surrogate(x: np.ndarray, b: int, cfg: SurrogateConfig,
                  tau: float | None = None) -> np.ndarray:
    """Smooth b-th magnitude bit: logistic(-tau*sin(2pi*2^(b_max-b)*x/x_max)).

    Periodic in x with period x_max/2^(b_max-b); 0.5 at x = 0; hardens to
    the bit pattern of the floor codec x -> floor(2^b_max*x/x_max) as tau
    grows.  b = b_max is the MSB.
    """
    if not (1 <= b <= cfg.b_max):
        raise ValueError(f"b must be in [1, {cfg.b_max}]")
    tau = cfg.tau if tau is None else tau
    if not (tau > 0):
        raise ValueError("tau must be > 0")
    x = np.asarray(x, dtype=np.float64)
    ang = 2.0 * np.pi * 2.0 ** (cfg.b_max - b) * x / cfg.x_max
    return expit(-tau * np.sin(ang))


def bit_surrogate_grad(x: np.ndarray, b: int, cfg: SurrogateConfig,
                       tau: float | None = None) -> np.ndarray:
    tau = cfg.tau if tau is None else tau
    x = np.asarray(x, dtype=np.float64)
    omega = 2.0 * np.pi * 2.0 ** (cfg.b_max - b) / cfg.x_max
    p = bit_surrogate(x, b, cfg, tau)
    return p * (1.0 - p) * (-tau) * np.cos(omega * x) * omega


def _plane_surrogates(x: np.ndarray, cfg: SurrogateConfig,
                      tau: float) -> tuple[np.ndarray, np.ndarray]:
    """All B smooth magnitude bits of x at once, plus d/dx.

    Returns (p, dp) of shape x.shape + (B,), p[..., b-1] being plane b.
    The sine argument is evaluated at the half-step-shifted code position
    v = |x|*(2^B-1)/x_max + 1/2 so that the hard-tau limit reproduces the
    bits of the rounding codec rather than the floor codec the raw
    surrogate encodes; both use the same sin(2pi*v/2^b) kernel.
    """
    x = np.asarray(x, dtype=np.float64)
    num_bits = cfg.b_max
    scale = (2.0**num_bits - 1.0) / cfg.x_max
    v = np.abs(x) * scale + 0.5
    dv = scale * np.sign(x)
    omegas = 2.0 * np.pi / 2.0 ** np.arange(1, num_bits + 1)
    ang = v[..., None] * omegas
    p = expit(-tau * np.sin(ang))
    dp = p * (1.0 - p) * (-tau) * np.cos(ang) * omegas * dv[..., None]
    return p, dp


@dataclass
class SurrogateCache:
    """Saved intermediates from a batched smooth-transform forward pass."""

    matrix: np.ndarray
    weights: np.ndarray
    dshat: np.ndarray
    dq: np.ndarray


def surrogate_forward(x: np.ndarray, matrix: np.ndarray, cfg: SurrogateConfig,
                      tau: float | None = None) -> tuple[np.ndarray, SurrogateCache]:
    """Smooth twin of the bit-serial transform, batched over leading axes.

    x: (..., N) real; matrix: (rows, N) +-1.  Per element the signed plane
    value sign*bit is softened to tanh(tau*x)*p_b(|x|); per (row, plane)
    the comparator is softened to tanh(tau*psum); planes are recombined
    with weights 2^(b-1).  Returns (y, cache) with y: (..., rows).
    """
    x = np.asarray(x, dtype=np.float64)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("matrix must be 2-D")
    if x.shape[-1] != matrix.shape[1]:
        raise ValueError(f"input length {x.shape[-1]} != matrix cols {matrix.shape[1]}")
    tau = cfg.tau if tau is None else tau
    if not (tau > 0):
        raise ValueError("tau must be > 0")

    s = np.tanh(tau * x)
    ds = tau * (1.0 - s * s)
    p, dp = _plane_surrogates(x, cfg, tau)
    shat = s[..., None] * p
    dshat = ds[..., None] * p + s[..., None] * dp

    psum = np.swapaxes(np.swapaxes(shat, -1, -2) @ matrix.T, -1, -2)
    q = np.tanh(tau * psum)
    dq = tau * (1.0 - q * q)
    weights = 2.0 ** np.arange(cfg.b_max)
    y = np.einsum("...rb,b->...r", q, weights)
    cache = SurrogateCache(matrix=matrix, weights=weights, dshat=dshat, dq=dq)
    return y, cache


def surrogate_backward(cache: SurrogateCache, gy: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. the smooth transform output back to its input."""
    gq = gy[..., None] * cache.weights
    gpsum = gq * cache.dq
    gshat = np.swapaxes(np.swapaxes(gpsum, -1, -2) @ cache.matrix, -1, -2)
    return np.einsum("...nb->...n", gshat * cache.dshat)


def f0_surrogate(cfg: SurrogateConfig, x: np.ndarray, matrix: np.ndarray,
                 tau: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Smooth transform of a single vector plus its full Jacobian.

    Returns (y, jac) with y: (rows,) and jac[i, j] = dy_i/dx_j.  The
    Jacobian is the exact chain rule of the implemented forward: the
    comparator derivative, the matrix entry, the plane weight and the
    product rule on sign*bit all appear (the weight-free shorthand some
    derivations use drops the matrix entry; finite differences demand it).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be 1-D")
    y, cache = surrogate_forward(x, matrix, cfg, tau)
    # jac_ij = sum_b dq[i,b] * 2^(b-1) * B_ij * dshat[j,b]
    jac = np.einsum("rb,rn,nb->rn", cache.dq * cache.weights, cache.matrix, cache.dshat)
    return y, jac
