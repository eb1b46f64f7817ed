"""Interval/count channel: exact simulation and tractable approximate likelihoods.

Time is split into ``num_intervals`` slots of width tau.  At most one particle
is released per slot (r_i in {0, 1}); the detector reports per-slot arrival
counts c_i.  The exact channel routes each released particle into the slot
containing its continuous hitting time and is simulated directly.

The approximate model tracks each release for N slots ("ISI taps"): a
particle released in slot i contributes an independent Bernoulli(p_arr^(k))
arrival to slot i + k - 1 for k = 1..N, and everything older is folded into
a Poisson background with rate

    lambda = E[r_i] * (1 - sum_{j=1..N} p_arr^(j)).

N = 1 is the memoryless model.  The per-slot count likelihood is the
convolution of those Bernoullis with the Poisson background; the marginal
likelihood of a count trace under i.i.d. Bernoulli(p) releases is computed
exactly by a forward recursion whose hidden state is the last N release bits.

Count likelihoods are capped at ``COUNT_CAP`` arrivals per slot; the Poisson
tail beyond is below 1e-80 for every rate in scope, and exceeding the cap
raises instead of silently truncating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator
from scipy import special

from .hitting_time import ChannelParams, arrival_prob_interval, sample, survival

__all__ = [
    "COUNT_CAP",
    "MARGINAL_TAP_CAP",
    "DiscreteConfig",
    "DiscreteTrace",
    "ApproxModel",
    "simulate_discrete",
    "simulate_traces",
    "build_approx_model",
    "likelihood_window",
    "sequence_likelihood",
    "marginal_likelihood",
    "exact_conditional_pmf",
    "ExactDiscreteLaw",
    "enumerate_exact_law",
]

COUNT_CAP = 64
MARGINAL_TAP_CAP = 20
_ENUMERATION_CAP = 12


@dataclass(frozen=True)
class DiscreteConfig:
    """Grid geometry and input law for the interval channel."""

    tau: float
    num_intervals: int
    release_prob: float
    isi_taps: int = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be finite and > 0, got {self.tau}")
        if self.num_intervals < 1:
            raise ValueError("num_intervals must be >= 1")
        if not 0.0 <= self.release_prob <= 1.0:
            raise ValueError("release_prob must lie in [0, 1]")
        if self.isi_taps < 1:
            raise ValueError("isi_taps must be >= 1")


@dataclass(frozen=True)
class DiscreteTrace:
    """One simulated channel use: release bits r and arrival counts c."""

    r: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class ApproxModel:
    """ISI-tap arrival probabilities plus the Poisson background rate."""

    p_table: tuple
    background_rate: float

    def __post_init__(self) -> None:
        p = np.asarray(self.p_table, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("p_table must be a non-empty vector")
        if np.any((p < 0) | (p > 1)):
            raise ValueError("p_table entries must lie in [0, 1]")
        if p.sum() > 1.0 + 1e-12:
            raise ValueError("p_table must sum to at most 1")
        if not (math.isfinite(self.background_rate) and self.background_rate >= 0):
            raise ValueError("background rate must be finite and >= 0")
        object.__setattr__(self, "p_table", tuple(float(v) for v in p))

    @property
    def n_taps(self) -> int:
        return len(self.p_table)


def _check_releases(r) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r))
    if r.ndim != 1:
        raise ValueError("release vector must be one-dimensional")
    if r.size and not np.all((r == 0) | (r == 1)):
        raise ValueError("this channel releases at most one particle per interval")
    return r.astype(np.int64)


def _check_counts(c, length: int | None = None) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c))
    if np.any(c < 0) or not np.all(c == np.floor(c)):
        raise ValueError("arrival counts must be non-negative integers")
    c = c.astype(np.int64)
    if np.any(c > COUNT_CAP):
        raise ValueError(f"arrival count exceeds the evaluation cap {COUNT_CAP}")
    if length is not None and c.size != length:
        raise ValueError("count vector length mismatch")
    return c


def simulate_discrete(r, cfg: DiscreteConfig, params: ChannelParams = ChannelParams(),
                      rng: Generator | None = None) -> np.ndarray:
    """Exact arrival counts: each release draws a continuous hitting time.

    A particle released at the start of interval i lands in interval
    i + ceil(t/tau) - 1 (a boundary hit, probability zero, credits the
    earlier interval); arrivals beyond the horizon are discarded.
    """
    if rng is None:
        rng = np.random.default_rng()
    r = _check_releases(r)
    if r.size != cfg.num_intervals:
        raise ValueError("release vector length must equal num_intervals")
    released = np.nonzero(r == 1)[0]
    c = np.zeros(cfg.num_intervals, dtype=np.int64)
    if released.size == 0:
        return c
    t = np.atleast_1d(sample(params, rng, size=released.size))
    k = np.ceil(t / cfg.tau)
    within = k <= (cfg.num_intervals - released)
    dest = released[within] + k[within].astype(np.int64) - 1
    np.add.at(c, dest, 1)
    return c


def simulate_traces(cfg: DiscreteConfig, params: ChannelParams, n_traces: int,
                    rng: Generator) -> DiscreteTrace:
    """Batch-simulate i.i.d. Bernoulli releases through the exact channel.

    Returns stacked (n_traces, num_intervals) release and count matrices.
    """
    L = cfg.num_intervals
    R = (rng.random((n_traces, L)) < cfg.release_prob).astype(np.int64)
    C = np.zeros((n_traces, L), dtype=np.int64)
    trace_idx, slot_idx = np.nonzero(R)
    if trace_idx.size:
        t = np.atleast_1d(sample(params, rng, size=trace_idx.size))
        k = np.ceil(t / cfg.tau)
        within = k <= (L - slot_idx)
        dest = slot_idx[within] + k[within].astype(np.int64) - 1
        np.add.at(C, (trace_idx[within], dest), 1)
    return DiscreteTrace(r=R, c=C)


def build_approx_model(cfg: DiscreteConfig,
                       params: ChannelParams = ChannelParams()) -> ApproxModel:
    """Fill the tap table p_arr^(1..N) and the background rate lambda."""
    ks = np.arange(1, cfg.isi_taps + 1)
    p_table = arrival_prob_interval(ks, cfg.tau, params)
    lam = cfg.release_prob * (1.0 - float(np.sum(p_table)))
    return ApproxModel(p_table=tuple(p_table), background_rate=lam)


def _log_poisson_pmf(lam: float, kmax: int) -> np.ndarray:
    """log P(Poisson(lam) = k) for k = 0..kmax; handles lam = 0."""
    k = np.arange(kmax + 1)
    if lam == 0.0:
        out = np.full(kmax + 1, -np.inf)
        out[0] = 0.0
        return out
    return k * math.log(lam) - lam - special.gammaln(k + 1)


def _bernoulli_mix(probs) -> np.ndarray:
    """PMF of a sum of independent Bernoulli(q_j) variables (iterated convolution)."""
    pmf = np.array([1.0])
    for q in probs:
        pmf = np.convolve(pmf, [1.0 - q, q])
    return pmf


def likelihood_window(c_i: int, recent_r, model: ApproxModel) -> float:
    """P(c_i | last N release bits) under the approximate model.

    recent_r[0] is the current interval's release bit, recent_r[j] the bit j
    intervals back.  The count is the tap Bernoullis (those with a release)
    plus the Poisson background, so the pmf is their convolution.
    """
    if c_i < 0 or c_i != int(c_i):
        raise ValueError("count must be a non-negative integer")
    c_i = int(c_i)
    if c_i > COUNT_CAP:
        raise ValueError(f"arrival count exceeds the evaluation cap {COUNT_CAP}")
    recent_r = _check_releases(recent_r)
    if recent_r.size != model.n_taps:
        raise ValueError("window length must equal the model's tap count")
    active = [model.p_table[j] for j in range(model.n_taps) if recent_r[j] == 1]
    bern = _bernoulli_mix(active)
    lam = model.background_rate
    log_pois = _log_poisson_pmf(lam, c_i)
    total = 0.0
    for s in range(min(c_i, bern.size - 1) + 1):
        total += bern[s] * math.exp(log_pois[c_i - s])
    return total


def _emission_log_table(model: ApproxModel, cmax: int = COUNT_CAP) -> np.ndarray:
    """log P(c | window) for every window bit pattern; shape (2^N, cmax + 1).

    Window code w has bit j set when there was a release j intervals back.
    """
    N = model.n_taps
    log_pois = _log_poisson_pmf(model.background_rate, cmax)
    pois = np.exp(log_pois)
    table = np.empty((1 << N, cmax + 1))
    for w in range(1 << N):
        active = [model.p_table[j] for j in range(N) if w >> j & 1]
        bern = _bernoulli_mix(active)
        pmf = np.convolve(bern, pois)[: cmax + 1]
        with np.errstate(divide="ignore"):
            table[w] = np.log(pmf)
    return table


def _window_codes(R: np.ndarray, n_taps: int) -> np.ndarray:
    """Window bit codes per slot (zero-padded cold start); R is (..., L)."""
    codes = np.zeros(R.shape, dtype=np.int64)
    for j in range(n_taps):
        shifted = np.zeros_like(R)
        shifted[..., j:] = R[..., : R.shape[-1] - j] if j else R
        codes |= shifted << j
    return codes


def _sequence_loglik_batch(C: np.ndarray, R: np.ndarray, model: ApproxModel,
                           table: np.ndarray | None = None) -> np.ndarray:
    if table is None:
        table = _emission_log_table(model)
    codes = _window_codes(R, model.n_taps)
    return table[codes, C].sum(axis=-1)


def sequence_likelihood(c, r, model: ApproxModel) -> float:
    """Log-likelihood of a count trace given its release trace.

    Sums per-interval window likelihoods; windows reaching before the trace
    start are zero-padded (the channel starts empty).
    """
    r = _check_releases(r)
    c = _check_counts(c, length=r.size)
    return float(_sequence_loglik_batch(c[None, :], r[None, :], model)[0])


def _marginal_loglik_batch(C: np.ndarray, cfg: DiscreteConfig, model: ApproxModel,
                           table: np.ndarray | None = None) -> np.ndarray:
    """Forward recursion over the last-N-release-bits state, batched over traces.

    State code s at slot i has bit j = r_{i-j}.  Stepping to slot i+1 shifts
    the bits up and draws the new bit Bernoulli(p); emissions come from the
    shared window table.  All arithmetic in log space.
    """
    N = model.n_taps
    if N > MARGINAL_TAP_CAP:
        raise ValueError(f"tap count {N} exceeds the forward-recursion cap "
                         f"{MARGINAL_TAP_CAP}")
    if table is None:
        table = _emission_log_table(model)
    p = cfg.release_prob
    n_states = 1 << N
    states = np.arange(n_states)
    with np.errstate(divide="ignore"):
        log_bit = np.where(states & 1, math.log(p) if p > 0 else -np.inf,
                           math.log1p(-p) if p < 1 else -np.inf)
    n_traces, L = C.shape
    # slot 0: only histories with all past bits clear are reachable
    alpha = np.full((n_traces, n_states), -np.inf)
    for s in (0, 1):
        alpha[:, s] = log_bit[s] + table[s, C[:, 0]]
    pred0 = states >> 1          # predecessor with its oldest bit clear
    pred1 = pred0 | (1 << (N - 1))
    for i in range(1, L):
        stay = np.logaddexp(alpha[:, pred0], alpha[:, pred1])
        alpha = stay + log_bit[None, :] + table[states[None, :], C[:, i][:, None]]
    return special.logsumexp(alpha, axis=1)


def marginal_likelihood(c, cfg: DiscreteConfig, model: ApproxModel) -> float:
    """Log of sum over all release sequences of g(c | r) * P(r), computed exactly.

    The forward recursion costs O(num_intervals * 2^N) instead of the
    2^num_intervals brute-force sum.
    """
    c = _check_counts(c, length=cfg.num_intervals)
    return float(_marginal_loglik_batch(c[None, :], cfg, model)[0])


# ---------------------------------------------------------------------------
# Exact law of the discrete channel on small instances (enumeration oracle).


def exact_conditional_pmf(r, cfg: DiscreteConfig,
                          params: ChannelParams = ChannelParams()) -> dict:
    """Exact pmf of the count vector given releases r, as {tuple(c): prob}.

    Each released particle independently lands in one of the remaining slots
    (probability p_arr^(k) for the k-th slot after release) or is lost past
    the horizon; the joint pmf is the convolution over particles.
    """
    r = _check_releases(r)
    L = cfg.num_intervals
    if r.size != L:
        raise ValueError("release vector length must equal num_intervals")
    if L > _ENUMERATION_CAP:
        raise ValueError(f"exact enumeration is limited to {_ENUMERATION_CAP} slots")
    dist: dict = {(0,) * L: 1.0}
    for i in np.nonzero(r == 1)[0]:
        ks = np.arange(1, L - i + 1)
        probs = arrival_prob_interval(ks, cfg.tau, params) if ks.size else np.empty(0)
        lost = float(survival((L - i) * cfg.tau, params))
        new: dict = {}
        for c_vec, prob in dist.items():
            new[c_vec] = new.get(c_vec, 0.0) + prob * lost
            for k, pk in zip(ks, probs):
                bumped = list(c_vec)
                bumped[i + k - 1] += 1
                bumped = tuple(bumped)
                new[bumped] = new.get(bumped, 0.0) + prob * pk
        dist = new
    return dist


@dataclass(frozen=True)
class ExactDiscreteLaw:
    """Fully enumerated joint law of (r, c) on a small instance."""

    cfg: DiscreteConfig
    prior: dict          # {tuple(r): P(r)}
    conditional: dict    # {tuple(r): {tuple(c): P(c | r)}}
    marginal: dict       # {tuple(c): P(c)}


def enumerate_exact_law(cfg: DiscreteConfig,
                        params: ChannelParams = ChannelParams()) -> ExactDiscreteLaw:
    """Enumerate P(r), P(c | r), and P(c) over all 2^num_intervals release vectors."""
    L = cfg.num_intervals
    if L > _ENUMERATION_CAP:
        raise ValueError(f"exact enumeration is limited to {_ENUMERATION_CAP} slots")
    p = cfg.release_prob
    prior: dict = {}
    conditional: dict = {}
    marginal: dict = {}
    for code in range(1 << L):
        r = tuple((code >> i) & 1 for i in range(L))
        pr = (p ** sum(r)) * ((1.0 - p) ** (L - sum(r)))
        if pr == 0.0:
            continue
        pmf = exact_conditional_pmf(np.array(r), cfg, params)
        prior[r] = pr
        conditional[r] = pmf
        for c_vec, prob in pmf.items():
            marginal[c_vec] = marginal.get(c_vec, 0.0) + pr * prob
    return ExactDiscreteLaw(cfg=cfg, prior=prior, conditional=conditional,
                            marginal=marginal)
