"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one [PASS]/[FAIL] line (visible under ``pytest -s``); the
assertions carry the same tolerances.  The two sweep fixtures run the full
default experiment grids once per session.
"""

import itertools
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import integrate, special, stats

from molcomm.cli import (
    DEFAULT_GRID_P,
    DEFAULT_GRID_TAU,
    DEFAULT_SEED,
    ExperimentConfig,
    run_example2,
    run_example3,
)
from molcomm.continuous import (
    indistinguishable_density,
    pair_density,
    permanent,
    permanent_by_enumeration,
)
from molcomm.discrete import (
    DiscreteConfig,
    _sequence_loglik_batch,
    build_approx_model,
    enumerate_exact_law,
    marginal_likelihood,
)
from molcomm.hitting_time import cdf, sample
from molcomm.mi import (
    exact_discrete_mi,
    exact_law_loglik_fns,
    mi_lower_bound_discrete,
)

KS_CRIT_1PCT = 1.6276236115189504  # kstwobign.isf(0.01)


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def example2_sweep():
    cfg = ExperimentConfig(experiment="example2")
    columns, rows = run_example2(cfg)
    return {name: np.array([row[i] for row in rows])
            for i, name in enumerate(columns)}


@pytest.fixture(scope="module")
def example3_sweep():
    cfg = ExperimentConfig(experiment="example3")
    start = time.perf_counter()
    columns, rows, _ = run_example3(cfg)
    elapsed = time.perf_counter() - start
    data = {name: np.array([row[i] for row in rows])
            for i, name in enumerate(columns)}
    data["_elapsed"] = elapsed
    return data


def test_criterion_1_sampler_law():
    n = 100_000
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    draws = sample(rng=rng, size=n)
    stat = stats.kstest(draws, lambda t: cdf(t)).statistic
    elapsed = time.perf_counter() - start
    # the analytic cdf itself is backed by quadrature of the density
    quad_cdf1, _ = integrate.quad(
        lambda t: math.exp(-0.5 / t) / math.sqrt(2 * math.pi * t**3), 0.0, 1.0)
    cdf_ok = abs(cdf(1.0) - quad_cdf1) < 1e-10
    critical = KS_CRIT_1PCT / math.sqrt(n)
    ok = stat < critical and elapsed < 5.0 and cdf_ok
    _report("criterion 1 (sampler law)", ok,
            f"KS {stat:.6f} < {critical:.6f}, {elapsed:.2f}s < 5s, "
            f"cdf-vs-quadrature {abs(cdf(1.0) - quad_cdf1):.1e}")


def test_criterion_2_density_equivalences():
    rng = np.random.default_rng(8)
    worst_pair = 0.0
    for _ in range(1000):
        x = rng.uniform(0.0, 4.0, 2)
        t = np.atleast_1d(sample(rng=rng, size=2))
        y = np.sort(x + t)
        a = pair_density(y, x)
        b = indistinguishable_density(y, x)
        if max(a, b) > 0:
            worst_pair = max(worst_pair, abs(a - b) / max(a, b))
    worst_perm = 0.0
    for n in range(2, 9):
        for _ in range(10):
            M = rng.uniform(0.0, 1.0, (n, n))
            brute = permanent_by_enumeration(M)
            worst_perm = max(worst_perm, abs(permanent(M) - brute) / abs(brute))
    ok = worst_pair < 1e-10 and worst_perm < 1e-10
    _report("criterion 2 (density equivalences)", ok,
            f"pair-vs-permanent max rel {worst_pair:.2e} < 1e-10 over 1000 "
            f"instances; ryser-vs-enumeration max rel {worst_perm:.2e}")


def test_criterion_3_marginalization_oracle():
    L = 12
    rng = np.random.default_rng(14)
    all_r = np.array(list(itertools.product([0, 1], repeat=L)), dtype=np.int64)
    worst = 0.0
    for taps in (1, 2, 3):
        cfg = DiscreteConfig(tau=float(rng.uniform(0.4, 2.0)), num_intervals=L,
                             release_prob=float(rng.uniform(0.1, 0.9)),
                             isi_taps=taps)
        model = build_approx_model(cfg)
        c = rng.integers(0, 3, L)
        forward = marginal_likelihood(c, cfg, model)
        log_prior = (all_r.sum(axis=1) * math.log(cfg.release_prob)
                     + (L - all_r.sum(axis=1)) * math.log(1 - cfg.release_prob))
        conds = _sequence_loglik_batch(np.tile(c, (all_r.shape[0], 1)),
                                       all_r, model)
        brute = special.logsumexp(log_prior + conds)
        worst = max(worst, abs(forward - brute) / abs(brute))
    ok = worst < 1e-10
    _report("criterion 3 (marginalization oracle)", ok,
            f"forward vs 2^{L} enumeration, N in 1..3: max rel {worst:.2e} "
            f"< 1e-10")


def test_criterion_4_prop2_validity():
    details = []
    ok = True
    for L, p, taps in ((2, 0.4, 1), (6, 0.3, 1), (6, 0.3, 2)):
        cfg = DiscreteConfig(tau=1.0, num_intervals=L, release_prob=p,
                             isi_taps=taps)
        law = enumerate_exact_law(cfg)
        exact = exact_discrete_mi(law)
        est = mi_lower_bound_discrete(cfg, n_traces=3000, rng=43)
        below = est.value <= exact + 3.0 * est.std_error
        ok = ok and below
        details.append(f"L={L},N={taps}: bound {est.value:.4f} <= "
                       f"exact {exact:.4f} (+3se)")
    cfg = DiscreteConfig(tau=1.0, num_intervals=4, release_prob=0.3, isi_taps=2)
    law = enumerate_exact_law(cfg)
    exact = exact_discrete_mi(law)
    g_cond, g_marg = exact_law_loglik_fns(law)
    est = mi_lower_bound_discrete(cfg, n_traces=4000, rng=42,
                                  g_conditional=g_cond, g_marginal=g_marg)
    equal = abs(est.value - exact) <= 3.0 * est.std_error
    ok = ok and equal
    details.append(f"g=f: |{est.value:.4f} - {exact:.4f}| <= "
                   f"{3 * est.std_error:.4f}")
    _report("criterion 4 (Prop 2 validity)", ok, "; ".join(details))


def test_criterion_5_labeling_order(example2_sweep):
    d = example2_sweep
    gap = d["bits_per_particle_j1"] - d["bits_per_particle_j2"]
    allowance = 3.0 * np.hypot(d["std_error_j1"], d["std_error_j2"])
    ok = bool(np.all(gap >= -allowance))
    _report("criterion 5 (labeling order j1 >= j2)", ok,
            f"min gap {gap.min():.4f} bits at 3-sigma allowance "
            f"{allowance.max():.4f}, all {len(gap)} grid points")


def test_criterion_6_one_bit_per_particle(example2_sweep):
    d = example2_sweep
    strict = d["bits_per_particle_j1"] - 3.0 * d["std_error_j1"]
    ok = bool(np.any(strict > 1.0))
    best = int(np.argmax(strict))
    _report("criterion 6 (> 1 bit per particle)", ok,
            f"T={d['T'][best]} gives {d['bits_per_particle_j1'][best]:.4f} - "
            f"3se > 1.0")


def test_criterion_7_fig2_trends(example2_sweep):
    d = example2_sweep
    vals = d["bits_per_particle_j1"]
    ses = d["std_error_j1"]
    diffs = np.diff(vals)
    allow = 3.0 * np.hypot(ses[:-1], ses[1:])
    monotone = bool(np.all(diffs >= -allow))
    per_second = d["bits_per_particle_per_second_j1"]
    peak = int(np.argmax(per_second))
    interior = 0 < peak < len(per_second) - 1
    ok = monotone and interior
    _report("criterion 7 (Fig 2 trends)", ok,
            f"monotone within 3-sigma: {monotone}; per-second max interior at "
            f"T={d['T'][peak]} (index {peak} of 0..{len(per_second) - 1})")


def test_criterion_8_example3_operating_point(example3_sweep):
    d = example3_sweep
    best = int(np.argmax(d["bits_per_second"]))
    tau_star = float(d["tau"][best])
    bps = float(d["bits_per_second"][best])
    bpp = float(d["bits_per_particle"][best])
    tau_ok = 0.5 <= tau_star <= 2.0
    bpp_ok = 0.15 <= bpp <= 0.65
    throughput_ok = 0.028 / 3.0 <= bps <= 0.028 * 3.0
    runtime_ok = d["_elapsed"] < 1800.0
    # peak over tau at fixed p sits near tau = 1 (grid neighbours allowed)
    near_one = []
    for p in (0.1, 0.2):
        mask = d["p"] == p
        taus = d["tau"][mask]
        near_one.append(float(taus[np.argmax(d["bits_per_second"][mask])]))
    peak_ok = all(t in (0.5, 1.0, 2.0) for t in near_one)
    ok = tau_ok and bpp_ok and throughput_ok and runtime_ok and peak_ok
    _report("criterion 8 (Example 3 operating point)", ok,
            f"argmax at tau={tau_star}, p={d['p'][best]}: {bps:.4f} bits/s in "
            f"[{0.028 / 3:.4f}, {0.028 * 3:.3f}], {bpp:.3f} bits/particle in "
            f"[0.15, 0.65]; fixed-p peaks at tau={near_one}; "
            f"sweep took {d['_elapsed']:.0f}s < 1800s")


def test_criterion_9_cli_determinism(tmp_path):
    base = ["example2", "--grid-T", "0.5,2", "--samples", "2000",
            "--seed", "11"]
    outs = []
    for name, extra in (("a", []), ("b", []), ("c", ["--workers", "2"])):
        out = tmp_path / f"{name}.csv"
        cmd = [sys.executable, "-m", "molcomm.cli", *base,
               "--out", str(out), *extra]
        proc = subprocess.run(cmd, capture_output=True)
        assert proc.returncode == 0, proc.stderr.decode()
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] == outs[2]
    _report("criterion 9 (CLI determinism)", ok,
            "rerun and 2-worker CSV bytes identical under fixed seed")
