"""Brownian-motion molecular timing channels.

Simulation of first-hitting-time channels, exact likelihoods for sorted
arrivals of labeled / partially labeled / indistinguishable particles, and
Monte-Carlo mutual-information estimates and lower bounds for both the
continuous and the interval/count form of the channel.
"""

from .hitting_time import (
    ChannelParams,
    arrival_prob_interval,
    cdf,
    log_cdf,
    log_pdf,
    log_survival,
    pdf,
    sample,
    survival,
)
from .continuous import (
    PERMANENT_CAP,
    HiddenTransmission,
    LabelingScheme,
    ObservedArrivals,
    PermanentSizeError,
    apply_labeling,
    draw_transmission,
    indistinguishable_density,
    invert_sort,
    labeled_density,
    log_indistinguishable_density,
    log_labeled_density,
    observe,
    pair_density,
    permanent,
    permanent_by_enumeration,
    simulate,
)
from .discrete import (
    COUNT_CAP,
    ApproxModel,
    DiscreteConfig,
    DiscreteTrace,
    ExactDiscreteLaw,
    build_approx_model,
    enumerate_exact_law,
    exact_conditional_pmf,
    likelihood_window,
    marginal_likelihood,
    sequence_likelihood,
    simulate_discrete,
    simulate_traces,
)
from .mi import (
    InputSpec,
    MIEstimate,
    QuadSpec,
    QuadratureError,
    exact_discrete_mi,
    exact_law_loglik_fns,
    kl_gap_diagnostic,
    mi_lower_bound_discrete,
    mi_pair,
    mi_single_particle,
    prop2_exact_value,
)

__version__ = "0.1.0"
