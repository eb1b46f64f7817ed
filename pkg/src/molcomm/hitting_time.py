"""First-hitting-time law of the Wiener process between transmitter and receiver.

A particle released at the origin performs a driftless Wiener process with
variance parameter ``sigma2`` and is absorbed the first time it reaches the
receiver at distance ``d``.  The elapsed time T is the channel's additive
noise.  Its density is

    f(t) = d / sqrt(2*pi*sigma2*t^3) * exp(-d^2 / (2*sigma2*t)),   t > 0,

with f(t) = 0 for t <= 0; the distribution function is

    F(t) = 2 * Phi(-d / (sigma*sqrt(t))),

Phi being the standard normal CDF.  The density is a one-sided stable
(Levy) law: the tail decays as Theta(t^(-3/2)), so every moment, including
the mean, is infinite.

Note on the exponent: the density above carries exp(-d^2/(2*sigma2*t)).
A variant with t^2 in the exponent circulates in some writeups of this
result but does not integrate to one; only the form used here is a
probability density.

All functions are pure; ``sample`` mutates only the caller's generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator
from scipy import special

__all__ = [
    "ChannelParams",
    "pdf",
    "log_pdf",
    "cdf",
    "log_cdf",
    "survival",
    "log_survival",
    "sample",
    "arrival_prob_interval",
]

# Log-densities below this are flushed to an exact 0.0 instead of subnormal noise.
_LOG_UNDERFLOW = -700.0


@dataclass(frozen=True)
class ChannelParams:
    """Physical channel constants.

    d        -- transmitter-receiver distance (length units), > 0.
    sigma2   -- Wiener-process variance parameter (length^2 / time), > 0.
    deadline -- optional transmission-interval cutoff; a particle whose
                transmission time exceeds it is declared lost.
    """

    d: float = 1.0
    sigma2: float = 1.0
    deadline: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.d) and self.d > 0):
            raise ValueError(f"d must be finite and > 0, got {self.d}")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be finite and > 0, got {self.sigma2}")
        if self.deadline is not None and not (
            math.isfinite(self.deadline) and self.deadline > 0
        ):
            raise ValueError(f"deadline must be finite and > 0, got {self.deadline}")

    @property
    def time_scale(self) -> float:
        """d^2/sigma2: hitting times are this multiple of the (1, 1) case."""
        return self.d * self.d / self.sigma2


def _check_finite(t: np.ndarray) -> None:
    if not np.all(np.isfinite(t)):
        raise ValueError("time argument must be finite")


def log_pdf(t, params: ChannelParams = ChannelParams()):
    """Natural log of the hitting-time density; -inf where the density is 0."""
    t = np.asarray(t, dtype=float)
    _check_finite(t)
    out = np.full(t.shape, -np.inf)
    pos = t > 0
    tp = t[pos]
    out[pos] = (
        math.log(params.d)
        - 0.5 * np.log(2.0 * math.pi * params.sigma2 * tp**3)
        - params.d**2 / (2.0 * params.sigma2 * tp)
    )
    return out if out.ndim else float(out)


def pdf(t, params: ChannelParams = ChannelParams()):
    """Hitting-time density f(t); 0 for t <= 0 and below the underflow floor."""
    lp = np.asarray(log_pdf(t, params))
    out = np.where(lp < _LOG_UNDERFLOW, 0.0, np.exp(lp))
    return out if out.ndim else float(out)


def cdf(t, params: ChannelParams = ChannelParams()):
    """P(T <= t) = 2*Phi(-d/(sigma*sqrt(t))); 0 for t <= 0."""
    t = np.asarray(t, dtype=float)
    _check_finite(t)
    out = np.zeros(t.shape)
    pos = t > 0
    out[pos] = 2.0 * special.ndtr(-params.d / np.sqrt(params.sigma2 * t[pos]))
    return out if out.ndim else float(out)


def log_cdf(t, params: ChannelParams = ChannelParams()):
    """Natural log of the distribution function; accurate deep in the left tail."""
    t = np.asarray(t, dtype=float)
    _check_finite(t)
    out = np.full(t.shape, -np.inf)
    pos = t > 0
    out[pos] = math.log(2.0) + special.log_ndtr(
        -params.d / np.sqrt(params.sigma2 * t[pos])
    )
    return out if out.ndim else float(out)


def survival(t, params: ChannelParams = ChannelParams()):
    """P(T > t) = erf(d / (sigma*sqrt(2 t))); accurate for large t where cdf -> 1."""
    t = np.asarray(t, dtype=float)
    _check_finite(t)
    out = np.ones(t.shape)
    pos = t > 0
    out[pos] = special.erf(params.d / np.sqrt(2.0 * params.sigma2 * t[pos]))
    return out if out.ndim else float(out)


def log_survival(t, params: ChannelParams = ChannelParams()):
    lp = np.log(survival(t, params))
    return lp if np.ndim(lp) else float(lp)


def sample(params: ChannelParams = ChannelParams(), rng: Generator | None = None,
           size=None):
    """Draw hitting times exactly: t = d^2 / (sigma2 * z^2), z standard normal.

    P(d^2/(sigma2 z^2) <= t) = P(|z| >= d/(sigma sqrt(t))) = 2*Phi(-d/(sigma sqrt(t))),
    so the transform reproduces ``cdf`` without rejection.  A z whose square
    underflows to 0 (probability ~1e-170) is redrawn.
    """
    if rng is None:
        rng = np.random.default_rng()
    scalar = size is None
    n = 1 if scalar else size
    z = rng.standard_normal(n)
    zz = z * z
    while np.any(zz == 0.0):
        bad = zz == 0.0
        z[bad] = rng.standard_normal(int(bad.sum()))
        zz = z * z
    t = params.time_scale / zz
    return float(t[0]) if scalar else t


def arrival_prob_interval(k, tau: float, params: ChannelParams = ChannelParams()):
    """P(particle arrives in the k-th interval after release) on a grid of width tau.

    Equals cdf(k*tau) - cdf((k-1)*tau), evaluated as a difference of
    survival terms, erf(a/sqrt((k-1) tau)) - erf(a/sqrt(k tau)) with
    a = d/(sigma*sqrt(2)), which stays accurate when both cdf values are
    close to 1.  k = 1 gives the single-interval arrival probability.
    """
    k = np.asarray(k)
    if not np.issubdtype(k.dtype, np.integer):
        kf = np.asarray(k, dtype=float)
        if not np.all(kf == np.floor(kf)):
            raise ValueError("interval index k must be integral")
        k = kf.astype(np.int64)
    if np.any(k < 1):
        raise ValueError("interval index k must be >= 1")
    if not (np.isfinite(tau) and tau > 0):
        raise ValueError(f"tau must be finite and > 0, got {tau}")
    a = params.d / math.sqrt(2.0 * params.sigma2)
    with np.errstate(divide="ignore"):
        upper = np.where(k == 1, 1.0, special.erf(a / np.sqrt((k - 1) * tau)))
    out = upper - special.erf(a / np.sqrt(k * tau))
    return out if out.ndim else float(out)
