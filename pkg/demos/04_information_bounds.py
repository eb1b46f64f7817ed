"""Mutual information: exact labeled estimates and the approximate-law bound.

The labeled continuous channel admits a direct Monte-Carlo MI estimate
because its likelihood is tractable.  The discrete channel does not, but
replacing the true law with the ISI model inside the expectation still gives
a valid lower bound; the sacrifice is exactly a conditional KL divergence,
measurable on instances small enough to enumerate.
"""

import numpy as np

from molcomm import (
    DiscreteConfig,
    enumerate_exact_law,
    exact_discrete_mi,
    kl_gap_diagnostic,
    mi_lower_bound_discrete,
    mi_pair,
    mi_single_particle,
)

print("labeled continuous channel, uniform release on [0, T]")
print(f"{'T':>6} {'bits/particle j1':>17} {'bits/particle j2':>17} "
      f"{'j1 per second':>14}")
for T in (0.5, 2.0, 8.0, 32.0):
    one = mi_single_particle(T, rng=10, n_samples=100_000)
    two = mi_pair(T, rng=11, n_samples=100_000)
    print(f"{T:6.1f} {one.value:11.4f} (se {one.std_error:.4f}) "
          f"{two.value:11.4f} (se {two.std_error:.4f}) {one.value / T:14.4f}")
print("per-particle MI grows with T; per-second MI peaks and falls; the")
print("coarser pair labeling always trails the unique labeling.")

print("\ndiscrete channel: approximate-model lower bound on I(R; C)")
cfg = DiscreteConfig(tau=1.0, num_intervals=1000, release_prob=0.2, isi_taps=2)
est = mi_lower_bound_discrete(cfg, n_traces=256, rng=12)
seconds = cfg.num_intervals * cfg.tau
particles = cfg.release_prob * cfg.num_intervals
print(f"  tau=1, p=0.2, 1000 intervals: {est.value:.2f} bits per trace")
print(f"  = {est.value / seconds:.4f} bits/second, "
      f"{est.value / particles:.4f} bits/particle")

print("\nhow much the approximation gives away (enumerable instance, L = 6)")
for taps in (1, 2, 3):
    small = DiscreteConfig(tau=1.0, num_intervals=6, release_prob=0.5,
                           isi_taps=taps)
    exact = exact_discrete_mi(enumerate_exact_law(small))
    gap = kl_gap_diagnostic(small)
    print(f"  N = {taps}: exact MI {exact:.4f} bits, KL gap {gap:.4f} bits "
          f"(bound attains {100 * (1 - gap / exact):.0f}%)")
