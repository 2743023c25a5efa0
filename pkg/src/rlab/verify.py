"""Inequality verification suites: each pits a closed-form bound against the
exact quantity it must dominate, over randomized or exhaustive case sets.

Every suite is deterministic for a fixed seed and returns the cases run, the
descriptors of any failing cases, and the empirical constants it measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds, exact, mc
from .errors import ConfigurationError

TOL = 1e-12


@dataclass
class VerifySuiteResult:
    suite: str
    cases_run: int
    failures: list[str] = field(default_factory=list)
    empirical_constants: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def _random_steps(rng, n, low=1, high=30):
    return rng.integers(low, high + 1, size=n).tolist()


def suite_elo(seed: int = 20240801, max_n: int = 18, lists_per_n: int = 10,
              **_) -> VerifySuiteResult:
    """Exact Q_{2c} never exceeds the central-binomial bound when all steps >= c."""
    rng = np.random.default_rng(seed)
    res = VerifySuiteResult("elo", 0)
    worst = math.inf
    for n in range(1, max_n + 1):
        for _ in range(lists_per_n):
            steps = _random_steps(rng, n)
            c = min(steps)
            q = exact.concentration_q(exact.walk_pmf(steps), 2 * c).result
            bound = bounds.elo_bound(n)
            res.cases_run += 1
            worst = min(worst, bound - q)
            if q > bound + TOL:
                res.failures.append(f"n={n} steps={steps}: Q_{{2c}}={q} > {bound}")
    res.empirical_constants["min_slack"] = worst
    return res


def suite_modular_elo(seed: int = 20240801, max_m: int = 64, lists_per_m: int = 3,
                      n_values=(10, 100, 1000), maximizer_checks: int = 40,
                      **_) -> VerifySuiteResult:
    """max_r P(X = r mod m) <= cosine product bound <= (1 or 2)/m + sqrt(2/(pi n))."""
    rng = np.random.default_rng(seed)
    res = VerifySuiteResult("modular_elo", 0)
    min_slack = math.inf
    for m in range(3, max_m + 1):
        coprime = [b for b in range(1, 6 * m) if math.gcd(b, m) == 1]
        for _ in range(lists_per_m):
            for n in n_values:
                steps = rng.choice(coprime, size=n).tolist()
                mx = float(exact.modular_walk_pmf(steps, m).probs.max())
                cos = bounds.cosine_product_bound(m, steps)
                closed = bounds.modular_elo_bound(m, n)
                res.cases_run += 1
                min_slack = min(min_slack, closed - mx)
                if mx > cos + 1e-10:
                    res.failures.append(f"m={m} n={n}: max residue {mx} > cosine {cos}")
                if cos > closed + 1e-10:
                    res.failures.append(f"m={m} n={n}: cosine {cos} > closed form {closed}")
    # equal multipliers maximise the cosine bound over coprime assignments
    for _ in range(maximizer_checks):
        m = int(rng.integers(3, 33))
        n = int(rng.integers(1, 13))
        coprime = [b for b in range(1, 4 * m) if math.gcd(b, m) == 1]
        steps = rng.choice(coprime, size=n).tolist()
        res.cases_run += 1
        val = bounds.cosine_product_bound(m, steps)
        top = bounds.cosine_product_bound(m, steps, all_ones=True)
        if val > top + TOL:
            res.failures.append(f"maximizer: m={m} steps={steps}: {val} > all-ones {top}")
    res.empirical_constants["min_slack_vs_closed_form"] = min_slack
    return res


def suite_hoeffding(seed: int = 20240801, max_n: int = 18, lists_per_n: int = 6,
                    t_grid=(0.0, 0.5, 1.0, 2.0, 3.0), **_) -> VerifySuiteResult:
    """Exact P(X >= t * l2) <= exp(-t^2 / 2)."""
    rng = np.random.default_rng(seed)
    res = VerifySuiteResult("hoeffding", 0)
    for n in range(1, max_n + 1):
        for _ in range(lists_per_n):
            steps = _random_steps(rng, n)
            pmf = exact.walk_pmf(steps)
            l2 = exact.summary_moments(steps).l2_norm
            for t in t_grid:
                tail = exact.tail_prob(pmf, t * l2)
                bound = bounds.hoeffding_tail(l2, t)
                res.cases_run += 1
                if tail > bound + TOL:
                    res.failures.append(
                        f"n={n} t={t} steps={steps}: tail {tail} > {bound}")
    return res


def suite_paley_zygmund(seed: int = 20240801, max_n: int = 18, lists_per_n: int = 6,
                        **_) -> VerifySuiteResult:
    """Exact P(|X| >= l2/2) >= 3/16."""
    rng = np.random.default_rng(seed)
    res = VerifySuiteResult("paley_zygmund", 0)
    floor = 3.0 / 16.0
    worst = math.inf
    for n in range(1, max_n + 1):
        for _ in range(lists_per_n):
            steps = _random_steps(rng, n)
            pmf = exact.walk_pmf(steps)
            l2 = exact.summary_moments(steps).l2_norm
            mass = exact.abs_tail_prob(pmf, l2 / 2.0)
            res.cases_run += 1
            worst = min(worst, mass)
            if mass < floor - TOL:
                res.failures.append(f"n={n} steps={steps}: P(|X|>=l2/2)={mass} < 3/16")
    res.empirical_constants["min_mass"] = worst
    return res


def _random_pmf(rng, max_atoms=8, span=6):
    size = int(rng.integers(1, max_atoms + 1))
    values = rng.choice(np.arange(-span, span + 1), size=size, replace=False)
    weights = rng.integers(1, 16, size=size).astype(float)
    probs = weights / weights.sum()
    return exact.pmf_from_atoms({int(v): float(p) for v, p in zip(values, probs)})


def suite_combine_scales(seed: int = 20240801, cases: int = 300,
                         **_) -> VerifySuiteResult:
    """Q_r(A+B) <= P(|A| >= s) + 3 Q_r(A) Q_s(B) on small independent PMFs, r < s."""
    rng = np.random.default_rng(seed)
    res = VerifySuiteResult("combine_scales", 0)
    grids = [(r, s) for r in (0.5, 1.0, 2.0) for s in (2.0, 3.0, 5.0) if r < s]
    for _ in range(cases):
        A = _random_pmf(rng)
        B = _random_pmf(rng)
        AB = exact.convolve(A, B)
        for r, s in grids:
            lhs = exact.concentration_q(AB, r).result
            rhs = bounds.combine_scales_rhs(
                exact.concentration_q(A, r).result,
                exact.concentration_q(B, s).result,
                exact.abs_tail_prob(A, s))
            res.cases_run += 1
            if lhs > rhs + TOL:
                res.failures.append(
                    f"r={r} s={s} A={A.as_dict()} B={B.as_dict()}: {lhs} > {rhs}")
    return res


def suite_prefix(seed: int = 20240801, cases: int = 200, **_) -> VerifySuiteResult:
    """Changing the first m steps moves Q_r by at most a factor 2^(m+1)."""
    rng = np.random.default_rng(seed)
    res = VerifySuiteResult("prefix", 0)
    for _ in range(cases):
        n = int(rng.integers(7, 13))
        m = int(rng.integers(1, 7))
        steps = _random_steps(rng, n, low=0, high=10)
        altered = list(steps)
        for i in range(m):
            altered[i] = int(rng.integers(0, 11))
        r = float(rng.choice([1.0, 2.0]))
        q = exact.concentration_q(exact.walk_pmf(steps), r).result
        q_alt = exact.concentration_q(exact.walk_pmf(altered), r).result
        factor = 2.0 ** (m + 1)
        res.cases_run += 1
        if not (q_alt / factor - TOL <= q <= q_alt * factor + TOL):
            res.failures.append(
                f"m={m} r={r} steps={steps} altered={altered}: {q} vs {q_alt}")
    return res


def suite_local_clt(n_max: int = 10_000, **_) -> VerifySuiteResult:
    """n * |P(X_n = 0) - gaussian approximation| stays bounded.

    The recorded empirical constant is the running maximum over even n; the
    non-explosion check is that this recorded sequence never exceeds 10x its
    own median (a creeping constant would).
    """
    res = VerifySuiteResult("local_clt", 0)
    running = []
    best = 0.0
    raw_max = 0.0
    for n in range(2, n_max + 1, 2):
        approx = bounds.local_clt_approx(n, 0).approx
        err = n * abs(bounds.rademacher_point_mass(n, 0) - approx)
        raw_max = max(raw_max, err)
        best = max(best, err)
        running.append(best)
        res.cases_run += 1
    median = float(np.median(running))
    if max(running) > 10.0 * median:
        res.failures.append(
            f"recorded constant explodes: max {max(running)} > 10 * median {median}")
    res.empirical_constants["local_clt_c"] = best
    res.empirical_constants["max_scaled_error"] = raw_max
    return res


def suite_exponent_fit(**_) -> VerifySuiteResult:
    """Exact Q_1 decay rates: distinct steps a_n = n near -3/2, unit steps near -1/2."""
    res = VerifySuiteResult("exponent_fit", 0)
    prof = exact.q1_profile(list(range(1, 201)))
    fit = mc.fit_exponent([(n, prof[n - 1]) for n in range(50, 201)])
    res.cases_run += 1
    if not -1.65 <= fit.slope <= -1.35:
        res.failures.append(f"a_n=n slope {fit.slope} outside [-1.65, -1.35]")
    res.empirical_constants["distinct_steps_slope"] = fit.slope
    prof1 = exact.q1_profile([1] * 1000)
    fit1 = mc.fit_exponent([(n, prof1[n - 1]) for n in range(100, 1001)])
    res.cases_run += 1
    if not -0.6 <= fit1.slope <= -0.4:
        res.failures.append(f"a_n=1 slope {fit1.slope} outside [-0.6, -0.4]")
    res.empirical_constants["unit_steps_slope"] = fit1.slope
    return res


SUITES = {
    "elo": suite_elo,
    "modular_elo": suite_modular_elo,
    "hoeffding": suite_hoeffding,
    "paley_zygmund": suite_paley_zygmund,
    "combine_scales": suite_combine_scales,
    "prefix": suite_prefix,
    "local_clt": suite_local_clt,
    "exponent_fit": suite_exponent_fit,
}


def run_suite(name: str, **knobs) -> VerifySuiteResult:
    if name not in SUITES:
        raise ConfigurationError(
            f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](**knobs)
