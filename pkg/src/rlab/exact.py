"""Exact laws of signed sums of integer steps, on Z and on Z/mZ.

The walk law is built by sparse self-convolution, one step at a time: the
support is kept as a sorted array and each step merges two shifted copies.
Supports that form an arithmetic progression (the common case after a few
steps) take a slicing fast path with no searches.

A rational mode (probabilities k / 2**n with exact integer numerators) backs
the enumeration oracles; it is limited to 40 nonzero steps.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError, DomainError, InfeasibleError

DEFAULT_SUPPORT_CAP = 1 << 26
SUPPORT_CAP_ENV = "RLAB_SUPPORT_CAP"
EXACT_MODE_MAX_STEPS = 40
_INT64_GUARD = 1 << 62


@dataclass
class ExactPMF:
    """Sparse exact law of a walk position on the integers.

    `support` is sorted; `probs` matches it. In float mode these are numpy
    arrays; in rational mode plain lists with Fraction probabilities.
    """

    support: object
    probs: object
    steps_applied: int
    exact: bool = False

    def __len__(self) -> int:
        return len(self.support)

    def prob_at(self, value: int):
        if self.exact:
            try:
                return self.probs[self.support.index(value)]
            except ValueError:
                return Fraction(0)
        idx = int(np.searchsorted(self.support, value))
        if idx < len(self.support) and self.support[idx] == value:
            return float(self.probs[idx])
        return 0.0

    def max_atom(self):
        if self.exact:
            return max(self.probs)
        return float(np.max(self.probs))

    def total_mass(self):
        if self.exact:
            return sum(self.probs)
        return float(math.fsum(self.probs))

    def as_dict(self) -> dict:
        return dict(zip((int(v) for v in self.support), self.probs))


@dataclass
class ModularPMF:
    """Dense law of a walk position on Z/mZ; probs[r] = P(X = r mod m)."""

    modulus: int
    probs: np.ndarray


@dataclass
class ConcentrationQuery:
    """A window width r, the supremum over half-open windows (x, x+r], and a maximiser."""

    r: float
    result: object
    argmax_x: float


@dataclass
class SummaryMoments:
    variance: object
    l2_norm: float
    total: object


def support_cap(explicit: int | None = None) -> int:
    if explicit is not None:
        return int(explicit)
    env = os.environ.get(SUPPORT_CAP_ENV)
    return int(env) if env else DEFAULT_SUPPORT_CAP


def _as_int_steps(steps) -> list[int]:
    out = []
    for idx, a in enumerate(steps, 1):
        ia = int(a)
        if ia != a:
            raise DomainError(
                f"step {idx} is not an integer ({a!r}); the exact engine is integer-only")
        if ia < 0:
            raise DomainError(f"step {idx} is negative ({a!r})")
        out.append(ia)
    return out


def walk_pmf(steps, exact: bool = False, cap: int | None = None) -> ExactPMF:
    """Exact law of the signed sum of `steps` under independent fair signs.

    Zero steps are identity convolutions and are skipped. Raises
    InfeasibleError when the projected support would exceed the atom cap.
    """
    int_steps = _as_int_steps(steps)
    limit = support_cap(cap)
    if exact:
        return _walk_pmf_exact(int_steps, limit)
    return _walk_pmf_float(int_steps, limit)


def _walk_pmf_float(int_steps, limit) -> ExactPMF:
    support = np.zeros(1, dtype=np.int64)
    probs = np.ones(1, dtype=np.float64)
    for idx, a in enumerate(int_steps, 1):
        if a == 0:
            continue
        support, probs = _float_step(support, probs, a, idx, limit)
    return ExactPMF(support, probs, steps_applied=len(int_steps), exact=False)


def _walk_pmf_exact(int_steps, limit) -> ExactPMF:
    nonzero = sum(1 for a in int_steps if a)
    if nonzero > EXACT_MODE_MAX_STEPS:
        raise ConfigurationError(
            f"rational mode supports at most {EXACT_MODE_MAX_STEPS} nonzero steps "
            f"(got {nonzero})")
    weights = {0: 1}
    applied = 0
    for idx, a in enumerate(int_steps, 1):
        if a == 0:
            continue
        applied += 1
        merged: dict[int, int] = {}
        for v, c in weights.items():
            merged[v - a] = merged.get(v - a, 0) + c
            merged[v + a] = merged.get(v + a, 0) + c
        if len(merged) > limit:
            raise InfeasibleError(
                f"step {idx}: projected support {len(merged)} exceeds cap {limit}")
        weights = merged
    denom = 2**applied
    support = sorted(weights)
    probs = [Fraction(weights[v], denom) for v in support]
    return ExactPMF(support, probs, steps_applied=len(int_steps), exact=True)


def pmf_from_atoms(atoms: dict, exact: bool = False, tol: float = 1e-9) -> ExactPMF:
    """Build a PMF from a value -> probability mapping (must sum to 1)."""
    if not atoms:
        raise DomainError("a PMF needs at least one atom")
    support = sorted(atoms)
    probs = [atoms[v] for v in support]
    total = sum(probs) if exact else math.fsum(probs)
    if abs(float(total) - 1.0) > tol:
        raise DomainError(f"atom probabilities sum to {float(total)}, not 1")
    if exact:
        return ExactPMF(list(support), [Fraction(p) for p in probs], 0, exact=True)
    return ExactPMF(np.asarray(support, dtype=np.int64),
                    np.asarray(probs, dtype=np.float64), 0, exact=False)


def convolve(a: ExactPMF, b: ExactPMF) -> ExactPMF:
    """Law of the sum of two independent integer PMFs."""
    if a.exact != b.exact:
        raise ConfigurationError("cannot convolve float-mode with rational-mode PMFs")
    acc: dict[int, object] = {}
    for v, p in zip(a.support, a.probs):
        for w, q in zip(b.support, b.probs):
            key = int(v) + int(w)
            acc[key] = acc.get(key, 0) + p * q
    support = sorted(acc)
    if a.exact:
        return ExactPMF(support, [acc[v] for v in support],
                        a.steps_applied + b.steps_applied, exact=True)
    return ExactPMF(np.asarray(support, dtype=np.int64),
                    np.asarray([acc[v] for v in support], dtype=np.float64),
                    a.steps_applied + b.steps_applied, exact=False)


def _window_atom_count(r: float) -> int:
    """Number of lattice points a half-open window (x, x+r] can capture."""
    fl = math.floor(r)
    return int(fl) if fl == r else int(fl) + 1


def concentration_q(pmf: ExactPMF, r: float) -> ConcentrationQuery:
    """Supremum of P(x < X <= x + r) over real x, with a maximising left endpoint.

    For an integer-valued law and r = 1 this is the maximum point mass.
    """
    if not r > 0:
        raise DomainError("window width r must be positive")
    w = _window_atom_count(r)
    if pmf.exact:
        support = pmf.support
        probs = pmf.probs
        prefix = [Fraction(0)]
        for p in probs:
            prefix.append(prefix[-1] + p)
        best, best_i = Fraction(-1), 0
        j = 0
        for i, v in enumerate(support):
            if j < i:
                j = i
            while j + 1 < len(support) and support[j + 1] <= v + w - 1:
                j += 1
            mass = prefix[j + 1] - prefix[i]
            if mass > best:
                best, best_i = mass, i
        return ConcentrationQuery(r, best, float(support[best_i] + (w - 1) - r))
    support = pmf.support
    csum = np.concatenate(([0.0], np.cumsum(pmf.probs)))
    ends = np.searchsorted(support, support + (w - 1), side="right")
    masses = csum[ends] - csum[: support.size]
    best_i = int(np.argmax(masses))
    return ConcentrationQuery(r, float(masses[best_i]),
                              float(support[best_i] + (w - 1) - r))


def q1_profile(steps, cap: int | None = None) -> list[float]:
    """Max point mass of the walk law after each prefix of `steps` (float mode)."""
    int_steps = _as_int_steps(steps)
    limit = support_cap(cap)
    out = []
    support = np.zeros(1, dtype=np.int64)
    probs = np.ones(1, dtype=np.float64)
    for idx, a in enumerate(int_steps, 1):
        if a != 0:
            support, probs = _float_step(support, probs, a, idx, limit)
        out.append(float(np.max(probs)))
    return out


def _float_step(support, probs, a, idx, limit):
    """One sparse convolution step: merge the two copies shifted by -a and +a."""
    if abs(int(support[0])) + a >= _INT64_GUARD or abs(int(support[-1])) + a >= _INT64_GUARD:
        raise InfeasibleError(f"step {idx}: support values would overflow 64-bit integers")
    size = support.size
    if size == 1:
        return (np.array([support[0] - a, support[0] + a], dtype=np.int64),
                np.full(2, 0.5 * probs[0]))
    gap = int(support[1] - support[0])
    # arithmetic-progression support: when the shifted copies overlap (no
    # interior holes) their union is the same progression, widened
    if ((2 * a) % gap == 0 and (2 * a) // gap <= size
            and bool(np.all(np.diff(support) == gap))):
        shift = (2 * a) // gap
        projected = size + shift
        if projected > limit:
            raise InfeasibleError(
                f"step {idx}: projected support {projected} exceeds cap {limit}")
        new_support = np.arange(support[0] - a, support[-1] + a + 1, gap, dtype=np.int64)
        new_probs = np.zeros(projected, dtype=np.float64)
        half = 0.5 * probs
        new_probs[:size] += half
        new_probs[shift:shift + size] += half
        return new_support, new_probs
    lo = support - a
    hi = support + a
    pos = np.searchsorted(lo, hi)
    inside = pos < size
    overlap = int(np.count_nonzero(inside & (lo[np.minimum(pos, size - 1)] == hi)))
    projected = 2 * size - overlap
    if projected > limit:
        raise InfeasibleError(f"step {idx}: projected support {projected} exceeds cap {limit}")
    new_support = np.union1d(lo, hi)
    new_probs = np.zeros(new_support.size, dtype=np.float64)
    half = 0.5 * probs
    new_probs[np.searchsorted(new_support, lo)] += half
    new_probs[np.searchsorted(new_support, hi)] += half
    return new_support, new_probs


def modular_walk_pmf(steps, m: int, method: str = "cyclic") -> ModularPMF:
    """Exact law of the signed sum on Z/mZ.

    `method` is "cyclic" (dense convolution by rotation) or "spectral"
    (each step multiplies the lambda-th Fourier coefficient by
    cos(2 pi a lambda / m)); the two agree to 1e-10 and cross-check each other.
    """
    if m < 2:
        raise DomainError("modulus m must be >= 2")
    int_steps = _as_int_steps(steps)
    if method == "cyclic":
        probs = np.zeros(m, dtype=np.float64)
        probs[0] = 1.0
        for a in int_steps:
            s = a % m
            if s == 0:
                continue
            probs = 0.5 * (np.roll(probs, s) + np.roll(probs, -s))
        return ModularPMF(m, probs)
    if method == "spectral":
        lam = np.arange(m)
        coeffs = np.ones(m, dtype=np.float64)
        for a in int_steps:
            coeffs *= np.cos(2.0 * np.pi * (a % m) * lam / m)
        probs = np.fft.ifft(coeffs).real
        return ModularPMF(m, probs)
    raise ConfigurationError(f"unknown modular method {method!r}")


def reduce_mod(pmf: ExactPMF, m: int) -> ModularPMF:
    """Reduce an integer PMF modulo m."""
    if m < 2:
        raise DomainError("modulus m must be >= 2")
    probs = np.zeros(m, dtype=np.float64)
    support = np.asarray(pmf.support, dtype=np.int64)
    weights = np.asarray([float(p) for p in pmf.probs], dtype=np.float64)
    np.add.at(probs, support % m, weights)
    return ModularPMF(m, probs)


def summary_moments(steps) -> SummaryMoments:
    """Variance (= sum of squares), l2 norm, and plain total of the steps."""
    steps = list(steps)
    if all(float(a).is_integer() for a in steps):
        ints = [int(a) for a in steps]
        var = sum(a * a for a in ints)
        total = sum(ints)
        return SummaryMoments(var, math.sqrt(var), total)
    var = math.fsum(float(a) * float(a) for a in steps)
    total = math.fsum(float(a) for a in steps)
    return SummaryMoments(var, math.sqrt(var), total)


def tail_prob(pmf: ExactPMF, t: float):
    """Right-tail mass P(X >= t)."""
    if pmf.exact:
        return sum((p for v, p in zip(pmf.support, pmf.probs) if v >= t), Fraction(0))
    idx = int(np.searchsorted(pmf.support, t, side="left"))
    return float(math.fsum(pmf.probs[idx:]))


def abs_tail_prob(pmf: ExactPMF, t: float):
    """Two-sided tail mass P(|X| >= t)."""
    if t <= 0:
        return Fraction(1) if pmf.exact else 1.0
    if pmf.exact:
        return sum((p for v, p in zip(pmf.support, pmf.probs) if abs(v) >= t),
                   Fraction(0))
    support = np.asarray(pmf.support)
    mask = np.abs(support) >= t
    return float(math.fsum(np.asarray(pmf.probs)[mask]))
