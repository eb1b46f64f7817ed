"""Continuous-time sorted-arrival channel.

The transmitter releases n particles at times x_1..x_n; particle i hits the
receiver at u_i = x_i + t_i with t_i an independent first-hitting time.  The
detector sees the order statistics y = sort(u), which destroys the
release/arrival correspondence unless labels survive the sort.

Likelihoods:

* fully labeled particles: the sort is invertible, and the density of
  (y, b) given x is the product of per-particle hitting densities;
* fully indistinguishable particles: the density of y given x sums the
  labeled density over all n! assignments, which is the permanent of the
  matrix M[i, k] = f(y_k - x_i);
* a pair of indistinguishable particles admits the two-term closed form
  implemented in ``pair_density``.

``permanent`` evaluates Ryser's inclusion-exclusion formula with Gray-code
subset updates (cost 2^n * n, capped at n = 14).  Density matrices are
assembled in log space, rescaled by row maxima, and fed to a subset-sum
dynamic program instead: all-non-negative arithmetic avoids the
inclusion-exclusion cancellation that dominates when one assignment carries
almost all of the mass, so the result survives arguments deep in the tails.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator

from .hitting_time import ChannelParams, log_pdf, sample

__all__ = [
    "PERMANENT_CAP",
    "PermanentSizeError",
    "LabelingScheme",
    "HiddenTransmission",
    "ObservedArrivals",
    "apply_labeling",
    "draw_transmission",
    "observe",
    "simulate",
    "invert_sort",
    "labeled_density",
    "log_labeled_density",
    "permanent",
    "permanent_by_enumeration",
    "indistinguishable_density",
    "log_indistinguishable_density",
    "pair_density",
]

PERMANENT_CAP = 14


class PermanentSizeError(ValueError):
    """Matrix is larger than the exact-permanent budget (2^n * n operations)."""


@dataclass(frozen=True)
class LabelingScheme:
    """Partial labeling b^(j): consecutive blocks of ``period`` releases share a label.

    period = 1 marks every particle uniquely; period >= n makes the whole
    batch indistinguishable.  Blocks are consecutive in release order, and a
    trailing block may be short when period does not divide n.
    """

    period: int = 1

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValueError(f"labeling period must be >= 1, got {self.period}")


@dataclass(frozen=True)
class HiddenTransmission:
    """Per-particle transmission times t and unsorted hitting times u = x + t."""

    t: np.ndarray
    u: np.ndarray


@dataclass(frozen=True)
class ObservedArrivals:
    """Detector output: sorted hitting times, their labels, and lost releases.

    y    -- observed hitting times, sorted non-decreasing.
    b    -- label of the particle behind each y entry (None when the scheme
            attaches no labels at all).
    lost -- release indices whose transmission time exceeded the deadline.
    """

    y: np.ndarray
    b: np.ndarray | None = None
    lost: frozenset = field(default_factory=frozenset)


def apply_labeling(n: int, scheme: LabelingScheme) -> np.ndarray:
    """Label for each release index: consecutive blocks of size ``scheme.period``."""
    if n < 0:
        raise ValueError("particle count must be >= 0")
    return np.arange(n, dtype=np.intp) // scheme.period


def _check_schedule(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError("release schedule must be one-dimensional")
    if x.size and (not np.all(np.isfinite(x)) or np.any(x < 0)):
        raise ValueError("release times must be finite and >= 0")
    return x


def draw_transmission(x, params: ChannelParams, rng: Generator) -> HiddenTransmission:
    """Draw independent transmission times for every release in x."""
    x = _check_schedule(x)
    t = np.atleast_1d(sample(params, rng, size=x.size))
    return HiddenTransmission(t=t, u=x + t)


def observe(x, t, scheme: LabelingScheme = LabelingScheme(),
            deadline: float | None = None) -> ObservedArrivals:
    """Deterministic detector given transmission times t (the simulation core).

    Releases with t_i > deadline are recorded in ``lost``; survivors are
    sorted by hitting time with ties broken by release index, and each
    arrival carries the label of its release under the scheme.
    """
    x = _check_schedule(x)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape != x.shape:
        raise ValueError("transmission times must match the release schedule")
    u = x + t
    if deadline is None:
        kept = np.arange(x.size)
        lost: frozenset = frozenset()
    else:
        lost_mask = t > deadline
        kept = np.nonzero(~lost_mask)[0]
        lost = frozenset(int(i) for i in np.nonzero(lost_mask)[0])
    order = kept[np.argsort(u[kept], kind="stable")]
    labels = apply_labeling(x.size, scheme)
    return ObservedArrivals(y=u[order], b=labels[order], lost=lost)


def simulate(x, params: ChannelParams = ChannelParams(),
             scheme: LabelingScheme = LabelingScheme(),
             rng: Generator | None = None) -> ObservedArrivals:
    """Sample the channel once: draw transmission times, sort, label, drop lost."""
    if rng is None:
        rng = np.random.default_rng()
    x = _check_schedule(x)
    if x.size == 0:
        return ObservedArrivals(y=np.empty(0), b=np.empty(0, dtype=np.intp))
    hidden = draw_transmission(x, params, rng)
    return observe(x, hidden.t, scheme, params.deadline)


def invert_sort(y, b) -> np.ndarray:
    """Undo the sort: place each arrival back at its release slot, u[b_i] = y_i.

    Labels must be the release indices 0..n-1 of a full labeling; duplicates
    mean the sort is not invertible and raise.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    b = np.atleast_1d(np.asarray(b))
    if y.shape != b.shape:
        raise ValueError("y and b must have the same length")
    n = y.size
    if n == 0:
        return np.empty(0)
    bi = b.astype(np.intp)
    if np.any(bi != b):
        raise ValueError("labels must be integers (release indices)")
    if len(set(bi.tolist())) != n:
        raise ValueError("labels must be unique to invert the sort")
    if bi.min() < 0 or bi.max() >= n:
        raise ValueError("labels must be release indices in 0..n-1")
    u = np.empty(n)
    u[bi] = y
    return u


def _is_sorted(y: np.ndarray) -> bool:
    return bool(np.all(np.diff(y) >= 0))


def log_labeled_density(y, b, x, params: ChannelParams = ChannelParams()) -> float:
    """Log of the labeled-arrival density; -inf when y is unsorted or unreachable."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x = _check_schedule(x)
    if y.size != x.size:
        raise ValueError("y and x must have the same length")
    if not _is_sorted(y):
        return -math.inf
    u = invert_sort(y, b)
    return float(np.sum(log_pdf(u - x, params)))


def labeled_density(y, b, x, params: ChannelParams = ChannelParams()) -> float:
    """Density of (y, b) given x for fully labeled particles: prod_i f(u_i - x_i)."""
    return math.exp(log_labeled_density(y, b, x, params))


def permanent(M, cap: int = PERMANENT_CAP) -> float:
    """Permanent of a square matrix via Ryser's formula with Gray-code updates.

    per(M) = (-1)^n * sum over non-empty column subsets S of
             (-1)^|S| * prod_i sum_{j in S} M[i, j].

    Exact up to float rounding; cost 2^n * n, so n is capped (default 14).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("permanent requires a square matrix")
    n = M.shape[0]
    if n == 0:
        return 1.0
    if n > cap:
        raise PermanentSizeError(
            f"matrix size {n} exceeds the exact-permanent cap {cap}"
        )
    row_sums = np.zeros(n)
    total = 0.0
    gray = 0
    for k in range(1, 1 << n):
        new_gray = k ^ (k >> 1)
        j = (gray ^ new_gray).bit_length() - 1
        if new_gray & (1 << j):
            row_sums += M[:, j]
        else:
            row_sums -= M[:, j]
        gray = new_gray
        bits = gray.bit_count()
        prod = float(np.prod(row_sums))
        total += prod if (n - bits) % 2 == 0 else -prod
    return total


def _permanent_nonneg(M: np.ndarray) -> float:
    """Permanent of a non-negative matrix by subset-sum dynamic programming.

    g[S] is the permanent of the first |S| rows against column set S, built
    row by row: g[S] = sum_{j in S} M[|S|-1, j] * g[S without j].  Same
    2^n * n cost as Ryser, but every operation adds non-negative terms, so
    there is no inclusion-exclusion cancellation; this matters for density
    matrices whose permanent is far smaller than the row-sum products.
    """
    n = M.shape[0]
    g = np.zeros(1 << n)
    g[0] = 1.0
    for s in range(1, 1 << n):
        row = s.bit_count() - 1
        acc = 0.0
        rem = s
        while rem:
            j = (rem & -rem).bit_length() - 1
            acc += M[row, j] * g[s & ~(1 << j)]
            rem &= rem - 1
        g[s] = acc
    return float(g[-1])


def permanent_by_enumeration(M) -> float:
    """Permanent as an explicit sum over all n! permutations (independent oracle)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("permanent requires a square matrix")
    n = M.shape[0]
    if n > 10:
        raise PermanentSizeError("n! enumeration is limited to n <= 10")
    total = 0.0
    rows = range(n)
    for perm in itertools.permutations(range(n)):
        p = 1.0
        for i in rows:
            p *= M[i, perm[i]]
        total += p
    return total


def log_indistinguishable_density(y, x, params: ChannelParams = ChannelParams(),
                                  cap: int = PERMANENT_CAP) -> float:
    """Log-density of sorted arrivals for indistinguishable particles.

    Builds L[i, k] = log f(y_k - x_i), rescales each row by its maximum so
    the permanent operates on values in [0, 1], and re-adds the factored-out
    logs.  Returns -inf when y is unsorted or no assignment is feasible.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x = _check_schedule(x)
    n = y.size
    if x.size != n:
        raise ValueError("y and x must have the same length")
    if n == 0:
        return 0.0
    if n > cap:
        raise PermanentSizeError(
            f"{n} particles exceed the exact-permanent cap {cap}"
        )
    if not _is_sorted(y):
        return -math.inf
    L = log_pdf(y[None, :] - x[:, None], params)
    row_max = L.max(axis=1)
    if not np.all(np.isfinite(row_max)):
        return -math.inf  # some release can match no arrival
    # subset-DP permanent: channel matrices routinely have a permanent many
    # orders below the row-sum products, where inclusion-exclusion cancels
    per = _permanent_nonneg(np.exp(L - row_max[:, None]))
    if per <= 0.0:
        return -math.inf
    return float(row_max.sum() + math.log(per))


def indistinguishable_density(y, x, params: ChannelParams = ChannelParams(),
                              cap: int = PERMANENT_CAP) -> float:
    """Density of sorted arrivals given x, summed over all label assignments."""
    return math.exp(log_indistinguishable_density(y, x, params, cap=cap))


def pair_density(y, x, params: ChannelParams = ChannelParams()) -> float:
    """Two-particle indistinguishable density, written out:

    f(y1 - x1) f(y2 - x2) + f(y2 - x1) f(y1 - x2)  for y1 <= y2, else 0.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != (2,) or x.shape != (2,):
        raise ValueError("pair_density takes exactly two arrivals and two releases")
    if y[0] > y[1]:
        return 0.0
    ordered = log_pdf(y[0] - x[0], params) + log_pdf(y[1] - x[1], params)
    swapped = log_pdf(y[1] - x[0], params) + log_pdf(y[0] - x[1], params)
    return math.exp(ordered) + math.exp(swapped)
