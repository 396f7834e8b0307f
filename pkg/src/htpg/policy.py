"""Parametric stochastic policies over a scalar action.

Two trainable families share one parameter layout: Cauchy (tail index 1)
and Gaussian (tail index 2).  The action mode is the linear form
``theta_x0 . s`` over affine state features ``s`` and the scale is either a
fixed constant ``sigma0`` or the learned ``exp(sum(theta_sigma))``.

The Gaussian family uses the conventional parameterization where ``sigma``
is its standard deviation.  :mod:`htpg.sas` gives the alpha=2 member
variance ``2 * scale**2``, so :func:`action_distribution` divides by
``sqrt(2)`` when building the sampling spec; the two descriptions denote
the same distribution and their log-densities agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .sas import StableSpec, sample_sas

__all__ = [
    "FIXED",
    "ADAPTIVE",
    "PolicyParams",
    "features",
    "policy_scale",
    "action_mode",
    "action_distribution",
    "sample_action",
    "log_likelihood",
    "score",
    "clip_score",
    "param_vector",
    "with_param_vector",
]

FIXED = "fixed"
ADAPTIVE = "adaptive"

_SQRT2 = float(np.sqrt(2.0))
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """Parameter vector of one policy: mode weights, log-scale weights,
    tail index, and how the scale is determined.

    With ``scale_mode="fixed"`` the scale is the constant ``sigma0`` and
    ``theta_sigma`` is inert: it is excluded from :func:`param_vector` and
    never updated.
    """

    theta_x0: np.ndarray
    theta_sigma: np.ndarray
    alpha: float = 1.0
    scale_mode: str = ADAPTIVE
    sigma0: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_x0", np.asarray(self.theta_x0, dtype=float))
        object.__setattr__(self, "theta_sigma", np.asarray(self.theta_sigma, dtype=float))
        if self.alpha not in (1.0, 2.0):
            raise ParameterError(f"trainable policies need alpha in {{1, 2}}, got {self.alpha}")
        if self.scale_mode not in (FIXED, ADAPTIVE):
            raise ParameterError(f"unknown scale_mode {self.scale_mode!r}")
        if self.theta_x0.ndim != 1 or self.theta_sigma.ndim != 1:
            raise ParameterError("theta_x0 and theta_sigma must be 1-D vectors")
        if self.theta_x0.size != self.theta_sigma.size:
            raise ParameterError("theta_x0 and theta_sigma must have equal length")
        if not self.sigma0 > 0.0:
            raise ParameterError(f"sigma0 must be positive, got {self.sigma0}")

    @classmethod
    def zeros(cls, dim: int, alpha: float, scale_mode: str = ADAPTIVE,
              sigma0: float = 1.0) -> "PolicyParams":
        """All-zero weights: mode 0 everywhere, scale exp(0)=1 when adaptive."""
        return cls(np.zeros(dim), np.zeros(dim), alpha, scale_mode, sigma0)

    @property
    def dim(self) -> int:
        return self.theta_x0.size


def features(raw) -> np.ndarray:
    """Affine feature map: raw state coordinates with a trailing bias 1."""
    return np.array((*raw, 1.0), dtype=float)


def policy_scale(p: PolicyParams) -> float:
    """Current scale sigma: sigma0 when fixed, exp(sum(theta_sigma)) when adaptive."""
    if p.scale_mode == FIXED:
        return p.sigma0
    return float(np.exp(p.theta_sigma.sum()))


def action_mode(p: PolicyParams, s: np.ndarray) -> float:
    if s.shape != p.theta_x0.shape:
        raise ParameterError(
            f"feature dimension {s.shape} does not match theta_x0 {p.theta_x0.shape}"
        )
    return float(p.theta_x0 @ s)


def action_distribution(p: PolicyParams, s: np.ndarray) -> StableSpec:
    """The SaS law of the action at state features ``s``.

    For alpha=2 the policy sigma is the Gaussian standard deviation, so the
    stable-convention scale is ``sigma / sqrt(2)``.
    """
    loc = action_mode(p, s)
    sigma = policy_scale(p)
    scale = sigma / _SQRT2 if p.alpha == 2.0 else sigma
    return StableSpec(p.alpha, loc, scale)


def sample_action(p: PolicyParams, s: np.ndarray, rng) -> float:
    return sample_sas(action_distribution(p, s), rng)


def log_likelihood(p: PolicyParams, s: np.ndarray, a: float) -> float:
    """log pi(a | s) under the policy's own parameterization."""
    x0 = action_mode(p, s)
    sigma = policy_scale(p)
    u = (a - x0) / sigma
    if p.alpha == 1.0:
        return -float(np.log(sigma * np.pi * (1.0 + u * u)))
    return -0.5 * u * u - float(np.log(sigma)) - 0.5 * _LOG_2PI


def score(p: PolicyParams, s: np.ndarray, a: float) -> np.ndarray:
    """Gradient of :func:`log_likelihood` w.r.t. the trainable parameters.

    Closed forms, with u = (a - x0) / sigma:

    * alpha=1: d/dtheta_x0 = (2u / (sigma (1 + u^2))) s,
      d/dtheta_sigma = (2u^2 / (1 + u^2) - 1) per component;
    * alpha=2: d/dtheta_x0 = (u / sigma) s,  d/dtheta_sigma = u^2 - 1.

    The theta_sigma block is present only in adaptive scale mode.
    """
    x0 = action_mode(p, s)
    sigma = policy_scale(p)
    u = (a - x0) / sigma
    if p.alpha == 1.0:
        denom = 1.0 + u * u
        mode_coef = 2.0 * u / (sigma * denom)
        gs = 2.0 * u * u / denom - 1.0
    else:
        mode_coef = u / sigma
        gs = u * u - 1.0
    if p.scale_mode == FIXED:
        return mode_coef * s
    d = s.size
    out = np.empty(2 * d)
    np.multiply(s, mode_coef, out=out[:d])
    out[d:] = gs
    return out


def clip_score(g: np.ndarray, epsilon: float, symmetric: bool = False) -> np.ndarray:
    """Component-wise min(g, clamp(g, 1-eps, 1+eps)).

    Algebraically this is an upper clamp at 1+eps and is the default.  The
    symmetric variant clamps to [-(1+eps), 1+eps] and bounds the magnitude
    instead; it is opt-in.
    """
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    hi = 1.0 + epsilon
    if symmetric:
        return np.clip(g, -hi, hi)
    return np.minimum(g, hi)


def param_vector(p: PolicyParams) -> np.ndarray:
    """The trainable parameters as one flat vector (mode block, then scale
    block when adaptive)."""
    if p.scale_mode == FIXED:
        return p.theta_x0.copy()
    return np.concatenate([p.theta_x0, p.theta_sigma])


def with_param_vector(p: PolicyParams, vec: np.ndarray) -> PolicyParams:
    """A copy of ``p`` with its trainable parameters replaced by ``vec``."""
    d = p.dim
    if p.scale_mode == FIXED:
        if vec.size != d:
            raise ParameterError(f"expected {d} parameters, got {vec.size}")
        return PolicyParams(vec.copy(), p.theta_sigma, p.alpha, p.scale_mode, p.sigma0)
    if vec.size != 2 * d:
        raise ParameterError(f"expected {2 * d} parameters, got {vec.size}")
    return PolicyParams(vec[:d].copy(), vec[d:].copy(), p.alpha, p.scale_mode, p.sigma0)
