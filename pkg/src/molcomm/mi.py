"""Monte-Carlo mutual information for the timing channel.

Two kinds of estimate:

* exact-likelihood MI for the continuous labeled channel (one particle, or a
  pair sharing a label block), where the per-observation log ratio
  log f(y|x) / f(y) is averaged over channel draws.  The output is mixed:
  a particle that has not arrived by the horizon T is reported as the
  discrete erasure symbol LOST, which contributes log P(LOST|x)/P(LOST);
* the lower bound on I(R; C) for the discrete channel obtained by replacing
  the intractable true law with the tractable approximate model g:

      I(R; C) >= E[ log g(c|r) / sum_r' g(c|r') P(r') ],

  with the expectation taken over the *exact* channel.  The gap is the
  expected conditional KL divergence, exposed by ``kl_gap_diagnostic`` on
  instances small enough to enumerate.

Marginals of the continuous channel under a uniform release on [0, T]
collapse to closed forms: the arrival-time marginal is cdf(y)/T (and, for a
pair, 2 cdf(y1) cdf(y2) / T^2 on the sorted quadrant), because integrating
f(y - x) over the uniform release window telescopes into the distribution
function.  The one remaining integral, the mean loss probability
(1/T) * int_0^T P(T_hit > s) ds, is evaluated by adaptive quadrature; tests
back the closed forms with direct quadrature of the defining integrals.

Estimates are decomposed into a fixed number of Monte-Carlo slots, each with
its own deterministically derived substream; slot results live in
slot-indexed accumulators and merge by count-weighted mean and pooled
variance, so the result is byte-identical no matter how slots are executed.
All logs are natural internally; reported values are bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .discrete import (
    ApproxModel,
    DiscreteConfig,
    ExactDiscreteLaw,
    _emission_log_table,
    _marginal_loglik_batch,
    _sequence_loglik_batch,
    build_approx_model,
    enumerate_exact_law,
    simulate_traces,
)
from .hitting_time import (
    ChannelParams,
    log_cdf,
    log_pdf,
    log_survival,
    sample,
    survival,
)

__all__ = [
    "LN2",
    "DEFAULT_SLOTS",
    "MIEstimate",
    "QuadSpec",
    "QuadratureError",
    "InputSpec",
    "mi_single_particle",
    "mi_pair",
    "mi_lower_bound_discrete",
    "exact_discrete_mi",
    "prop2_exact_value",
    "kl_gap_diagnostic",
    "exact_law_loglik_fns",
]

LN2 = math.log(2.0)
_LOG2 = LN2
DEFAULT_SLOTS = 16


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge to the requested tolerance."""


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances for the adaptive quadrature used in channel marginals."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    limit: int = 200

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.limit < 10:
            raise ValueError("quadrature tolerances must be positive, limit >= 10")


@dataclass(frozen=True)
class MIEstimate:
    """Monte-Carlo mutual-information value with its standard error, in bits."""

    value: float
    std_error: float
    n_samples: int
    seed: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError("MI value must be finite")
        if self.std_error < 0:
            raise ValueError("standard error must be >= 0")
        if self.n_samples < 1:
            raise ValueError("sample count must be >= 1")


@dataclass(frozen=True)
class InputSpec:
    """Description of the channel input law used by an experiment."""

    kind: str
    horizon: float
    release_prob: float | None = None

    _KINDS = ("uniform-release", "iid-bernoulli")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError("horizon must be finite and > 0")
        if self.release_prob is not None and not 0.0 <= self.release_prob <= 1.0:
            raise ValueError("release probability must lie in [0, 1]")

    @classmethod
    def uniform_release(cls, horizon: float) -> "InputSpec":
        return cls(kind="uniform-release", horizon=horizon)

    @classmethod
    def iid_bernoulli(cls, release_prob: float, horizon: float) -> "InputSpec":
        return cls(kind="iid-bernoulli", horizon=horizon, release_prob=release_prob)


def _spawn_streams(rng, slots: int):
    """Fixed slot substreams plus the integer seed label when one was given."""
    if slots < 1:
        raise ValueError("slots must be >= 1")
    if isinstance(rng, np.random.Generator):
        return rng.spawn(slots), -1
    if isinstance(rng, np.random.SeedSequence):
        label = rng.entropy if isinstance(rng.entropy, int) else -1
        return [np.random.default_rng(s) for s in rng.spawn(slots)], label
    seed = int(rng)
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(slots)], seed


def _slot_counts(n: int, slots: int) -> np.ndarray:
    counts = np.full(slots, n // slots, dtype=np.int64)
    counts[: n % slots] += 1
    return counts


def _merge_slots(sums: np.ndarray, sumsqs: np.ndarray, counts: np.ndarray):
    """Count-weighted mean and pooled variance over slot accumulators."""
    n = int(counts.sum())
    mean = float(sums.sum() / n)
    if n > 1:
        var = max(float(sumsqs.sum()) - n * mean * mean, 0.0) / (n - 1)
    else:
        var = 0.0
    return mean, math.sqrt(var / n)


def _mean_loss_prob(T: float, params: ChannelParams, quad: QuadSpec) -> float:
    """P(LOST) under X ~ U[0, T]: (1/T) * int_0^T P(T_hit > s) ds, by quadrature."""
    out = integrate.quad(
        lambda s: survival(s, params), 0.0, T,
        epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.limit,
        full_output=1,
    )
    val, abserr = out[0], out[1]
    if len(out) > 3 or abserr > 50.0 * max(quad.abs_tol, quad.rel_tol * abs(val)):
        message = out[3] if len(out) > 3 else "error estimate above tolerance"
        raise QuadratureError(
            f"loss-probability quadrature failed on [0, {T}]: {message} "
            f"(value {val!r}, error estimate {abserr!r})"
        )
    return val / T


def mi_single_particle(T: float, params: ChannelParams = ChannelParams(),
                       quad: QuadSpec | None = None, rng=0,
                       n_samples: int = 200_000,
                       slots: int = DEFAULT_SLOTS) -> MIEstimate:
    """I(X; Y) in bits per particle for one labeled particle, X ~ U[0, T].

    The output is the arrival time when x + t <= T and LOST otherwise.  Per
    draw, an arrival contributes log f(t) - log(cdf(x + t)/T) and a loss
    contributes log P(LOST|x) - log P(LOST); the estimate is the sample mean
    over the channel draws.
    """
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"horizon T must be finite and > 0, got {T}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    quad = quad or QuadSpec()
    streams, seed = _spawn_streams(rng, slots)
    counts = _slot_counts(n_samples, slots)
    loss_prob = _mean_loss_prob(T, params, quad)
    log_loss = math.log(loss_prob)
    log_T = math.log(T)
    sums = np.zeros(slots)
    sumsqs = np.zeros(slots)
    for w, gen in enumerate(streams):
        m = int(counts[w])
        if m == 0:
            continue
        x = gen.uniform(0.0, T, m)
        t = np.atleast_1d(sample(params, gen, size=m))
        y = x + t
        arrived = y <= T
        vals = np.empty(m)
        vals[arrived] = (log_pdf(t[arrived], params)
                         - log_cdf(y[arrived], params) + log_T)
        lost = ~arrived
        vals[lost] = log_survival(T - x[lost], params) - log_loss
        sums[w] = vals.sum()
        sumsqs[w] = (vals * vals).sum()
    mean, se = _merge_slots(sums, sumsqs, counts)
    return MIEstimate(value=mean / LN2, std_error=se / LN2,
                      n_samples=n_samples, seed=seed)


def mi_pair(T: float, params: ChannelParams = ChannelParams(),
            quad: QuadSpec | None = None, rng=0,
            n_samples: int = 200_000,
            slots: int = DEFAULT_SLOTS) -> MIEstimate:
    """Per-particle MI in bits for an indistinguishable pair, X1, X2 ~ U[0, T].

    The pair's observation is three-way: both arrive (the sorted pair of
    times), exactly one arrives (its time plus the fact of one loss), or
    none arrive.  Conditional sub-densities:

        both:  f(y1-x1) f(y2-x2) + f(y2-x1) f(y1-x2)          on y1 <= y2 <= T
        one:   f(y-x1) P(lost|x2) + f(y-x2) P(lost|x1)         on y <= T
        none:  P(lost|x1) P(lost|x2)

    with P(lost|x) = P(T_hit > T - x).  Under the uniform input the
    marginals close over cdf: 2 cdf(y1) cdf(y2) / T^2, 2 cdf(y) pbar / T,
    and pbar^2, where pbar is the quadrature mean loss probability.  The
    pair MI is halved to report bits per particle; ``n_samples`` counts
    pairs.
    """
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"horizon T must be finite and > 0, got {T}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    quad = quad or QuadSpec()
    streams, seed = _spawn_streams(rng, slots)
    counts = _slot_counts(n_samples, slots)
    loss_prob = _mean_loss_prob(T, params, quad)
    log_loss = math.log(loss_prob)
    log_T = math.log(T)
    sums = np.zeros(slots)
    sumsqs = np.zeros(slots)
    for w, gen in enumerate(streams):
        m = int(counts[w])
        if m == 0:
            continue
        x1 = gen.uniform(0.0, T, m)
        x2 = gen.uniform(0.0, T, m)
        t1 = np.atleast_1d(sample(params, gen, size=m))
        t2 = np.atleast_1d(sample(params, gen, size=m))
        u1, u2 = x1 + t1, x2 + t2
        a1, a2 = u1 <= T, u2 <= T
        vals = np.empty(m)

        both = a1 & a2
        y1 = np.minimum(u1[both], u2[both])
        y2 = np.maximum(u1[both], u2[both])
        xb1, xb2 = x1[both], x2[both]
        num = np.logaddexp(
            log_pdf(y1 - xb1, params) + log_pdf(y2 - xb2, params),
            log_pdf(y2 - xb1, params) + log_pdf(y1 - xb2, params),
        )
        den = (_LOG2 + log_cdf(y1, params) + log_cdf(y2, params) - 2.0 * log_T)
        vals[both] = num - den

        for arriving, mask in ((1, a1 & ~a2), (2, a2 & ~a1)):
            if not np.any(mask):
                continue
            y = (u1 if arriving == 1 else u2)[mask]
            xa, xo = (x1, x2) if arriving == 1 else (x2, x1)
            xa, xo = xa[mask], xo[mask]
            num = np.logaddexp(
                log_pdf(y - xa, params) + log_survival(T - xo, params),
                log_pdf(y - xo, params) + log_survival(T - xa, params),
            )
            den = _LOG2 + log_cdf(y, params) + log_loss - log_T
            vals[mask] = num - den

        none = ~a1 & ~a2
        vals[none] = (log_survival(T - x1[none], params)
                      + log_survival(T - x2[none], params) - 2.0 * log_loss)
        sums[w] = vals.sum()
        sumsqs[w] = (vals * vals).sum()
    mean, se = _merge_slots(sums, sumsqs, counts)
    return MIEstimate(value=mean / (2.0 * LN2), std_error=se / (2.0 * LN2),
                      n_samples=n_samples, seed=seed)


def mi_lower_bound_discrete(cfg: DiscreteConfig,
                            params: ChannelParams = ChannelParams(),
                            n_traces: int = 256, rng=0,
                            model: ApproxModel | None = None,
                            g_conditional=None, g_marginal=None,
                            slots: int = DEFAULT_SLOTS) -> MIEstimate:
    """Lower bound on I(R; C) in bits per trace, sampled from the exact channel.

    Averages log g(c|r) - log sum_r' g(c|r') P(r') over exact-channel draws.
    By default g is the ISI approximate model built from ``cfg``; any other
    law can be injected as a pair of log-likelihood callables
    ``g_conditional(c, r)`` and ``g_marginal(c)`` (used together), which is
    how the equality case g = f is exercised on enumerable instances.
    """
    if n_traces < 1:
        raise ValueError("n_traces must be >= 1")
    if (g_conditional is None) != (g_marginal is None):
        raise ValueError("inject both g_conditional and g_marginal, or neither")
    injected = g_conditional is not None
    if not injected:
        model = model or build_approx_model(cfg, params)
        table = _emission_log_table(model)
    streams, seed = _spawn_streams(rng, slots)
    counts = _slot_counts(n_traces, slots)
    sums = np.zeros(slots)
    sumsqs = np.zeros(slots)
    for w, gen in enumerate(streams):
        m = int(counts[w])
        if m == 0:
            continue
        trace = simulate_traces(cfg, params, m, gen)
        if injected:
            vals = np.array([
                g_conditional(trace.c[i], trace.r[i]) - g_marginal(trace.c[i])
                for i in range(m)
            ])
        else:
            if trace.c.max(initial=0) > table.shape[1] - 1:
                raise ValueError("arrival count exceeds the evaluation cap")
            vals = (_sequence_loglik_batch(trace.c, trace.r, model, table)
                    - _marginal_loglik_batch(trace.c, cfg, model, table))
        sums[w] = vals.sum()
        sumsqs[w] = (vals * vals).sum()
    mean, se = _merge_slots(sums, sumsqs, counts)
    return MIEstimate(value=mean / LN2, std_error=se / LN2,
                      n_samples=n_traces, seed=seed)


# ---------------------------------------------------------------------------
# Exact values on enumerable instances.


def exact_discrete_mi(law: ExactDiscreteLaw) -> float:
    """I(R; C) in bits, from the fully enumerated joint law."""
    mi = 0.0
    for r, pr in law.prior.items():
        for c_vec, pc in law.conditional[r].items():
            if pc > 0.0:
                mi += pr * pc * (math.log(pc) - math.log(law.marginal[c_vec]))
    return mi / LN2


def prop2_exact_value(law: ExactDiscreteLaw, model: ApproxModel) -> float:
    """The bound's exact expectation under the true law, in bits (no sampling)."""
    from .discrete import marginal_likelihood, sequence_likelihood

    marg_cache: dict = {}
    total = 0.0
    for r, pr in law.prior.items():
        r_arr = np.array(r)
        for c_vec, pc in law.conditional[r].items():
            if pc == 0.0:
                continue
            if c_vec not in marg_cache:
                marg_cache[c_vec] = marginal_likelihood(np.array(c_vec), law.cfg,
                                                        model)
            g_cond = sequence_likelihood(np.array(c_vec), r_arr, model)
            total += pr * pc * (g_cond - marg_cache[c_vec])
    return total / LN2


def exact_law_loglik_fns(law: ExactDiscreteLaw):
    """The true law packaged as (g_conditional, g_marginal) log-likelihoods."""

    def g_conditional(c, r) -> float:
        return math.log(law.conditional[tuple(int(v) for v in r)]
                        [tuple(int(v) for v in c)])

    def g_marginal(c) -> float:
        return math.log(law.marginal[tuple(int(v) for v in c)])

    return g_conditional, g_marginal


def kl_gap_diagnostic(cfg: DiscreteConfig, params: ChannelParams = ChannelParams(),
                      model: ApproxModel | None = None) -> float:
    """Exact MI minus the exact bound value: the expected conditional KL, in bits.

    Requires an instance small enough to enumerate (at most 8 intervals).
    Always >= 0; equals 0 exactly when the approximate law is the true law.
    """
    if cfg.num_intervals > 8:
        raise ValueError("KL gap diagnostic requires at most 8 intervals")
    model = model or build_approx_model(cfg, params)
    law = enumerate_exact_law(cfg, params)
    return exact_discrete_mi(law) - prop2_exact_value(law, model)
