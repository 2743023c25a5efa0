"""Step-size sequence families and arithmetic side-condition checkers.

Every family is a pure function of (spec, n): the same spec always yields
the identical prefix, and generate(spec, n) is a prefix of
generate(spec, m) for n < m.

Families
--------
power           a_n = n**alpha (optionally floored)
log_power       a_n = ln(n)**alpha (optionally floored; a_1 = 0 is allowed)
sqrt_block      consecutive blocks, the k-th of length 4**k / 2, alternating
                2**k + 1 and 2**k - 1 (starting high); a_n = Theta(sqrt(n))
fast_block      blocks of even length alternating r+1 and r, where the block
                length is calibrated so a planar simple random walk covers
                the origin-column segment reachable so far, and r clears the
                tabulated growth function
fast_increasing strictly increasing reals: blocks x_j + c_1, ..., x_j + c_m
                with c_1 = 0 and c_{m+1} - c_m = m^{-3/2}/sqrt(1 + ln m)
sparse_values   constant blocks of the odd squares p_i = (2i+1)**2 with
                block lengths >= p_{i+1}**2 and fixed parities
geometric       a_n = 2**floor(log2 f(n)) for a tabulated f >= 1
constant        a_n = alpha for every n (default 1)
custom          an explicit list of non-negative values
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError, InfeasibleError
from .streams import substream, wilson_interval

FAMILIES = (
    "power",
    "log_power",
    "sqrt_block",
    "fast_block",
    "fast_increasing",
    "sparse_values",
    "geometric",
    "constant",
    "custom",
)

# The cover-time calibration for fast_block runs on its own fixed stream so
# generated prefixes are reproducible and prefix-stable.
COVER_CALIBRATION_SEED = 0x5EB10C4A
COVER_CALIBRATION_REPLICATES = 240
COVER_CALIBRATION_STEP_BUDGET = 40_000_000


@dataclass(frozen=True)
class StepSequenceSpec:
    """Declarative description of a step-size family; the single source of a_n.

    `alpha` doubles as the level of the `constant` family. `growth_fn` is a
    tabulated non-decreasing function given as the values f(1), f(2), ...;
    indices beyond the table clamp to the last entry.
    """

    family: str
    alpha: float | None = None
    floor_values: bool = False
    growth_fn: tuple[float, ...] | None = None
    cover_confidence: float = 0.5
    custom_values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown sequence family {self.family!r}")
        if self.growth_fn is not None:
            object.__setattr__(self, "growth_fn", tuple(float(v) for v in self.growth_fn))
        if self.custom_values is not None:
            object.__setattr__(self, "custom_values", tuple(self.custom_values))
        if not 0.0 < self.cover_confidence < 1.0:
            raise ConfigurationError("cover_confidence must lie in (0, 1)")

    def to_dict(self) -> dict:
        out = {"family": self.family}
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.floor_values:
            out["floor_values"] = True
        if self.growth_fn is not None:
            out["growth_fn"] = list(self.growth_fn)
        if self.family == "fast_block":
            out["cover_confidence"] = self.cover_confidence
        if self.custom_values is not None:
            out["custom_values"] = list(self.custom_values)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StepSequenceSpec":
        if "family" not in data:
            raise ConfigurationError("sequence spec is missing the 'family' key")
        known = {"family", "alpha", "floor_values", "growth_fn", "cover_confidence",
                 "custom_values"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown sequence spec keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SequenceCounts:
    """Multiset histogram of an integer step-size prefix."""

    counts: dict[int, int]
    prefix_length: int


@dataclass
class IntsConditionReport:
    """Both sides of the two transience side-conditions at a value n."""

    n: int
    assump1_lhs: int
    assump1_rhs: int
    assump1_holds: bool
    assump2_lhs: int
    assump2_rhs: float
    assump2_holds: bool


@dataclass
class SparseConditionReport:
    """Per-value witness check for sparse-valued non-decreasing sequences.

    For each value s, `witnesses[s]` is some smaller value s' whose
    multiplicity is at least epsilon * s**2, or None when no witness exists.
    `harmonic_sum` is the partial sum of 1/s over the checked value set.
    `all_hold` ignores the smallest value, which can never have a witness.
    """

    epsilon: float
    harmonic_sum: float
    witnesses: dict[int, int | None]
    all_hold: bool


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigurationError(message)


class _Tabulated:
    """Non-decreasing tabulated function over 1-based indices, clamped at the end."""

    def __init__(self, table):
        _require(table is not None and len(table) > 0,
                 "this family requires a non-empty growth_fn table")
        vals = [float(v) for v in table]
        for a, b in zip(vals, vals[1:]):
            if b < a:
                raise ConfigurationError("growth_fn table must be non-decreasing")
        self.values = vals

    def __call__(self, i: int) -> float:
        if i < 1:
            raise DomainError("growth function indices start at 1")
        return self.values[min(i, len(self.values)) - 1]

    def first_index_at_least(self, target: float) -> int:
        """Smallest 1-based index with f(i) >= target; infeasible if never reached."""
        if self.values[-1] < target:
            raise InfeasibleError(
                f"growth_fn table tops out at {self.values[-1]} < required {target}")
        lo, hi = 1, len(self.values)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.values[mid - 1] >= target:
                hi = mid
            else:
                lo = mid + 1
        return lo


def generate(spec: StepSequenceSpec, n: int) -> list:
    """First n step sizes of the family described by `spec`.

    Deterministic, and prefix-stable: the result is a prefix of any longer
    generation from the same spec.
    """
    if n < 1:
        raise DomainError("sequence length n must be >= 1")
    fam = spec.family
    if fam == "power":
        return _power_prefix(spec, n)
    if fam == "log_power":
        return _log_power_prefix(spec, n)
    if fam == "sqrt_block":
        return _sqrt_block_prefix(n)
    if fam == "fast_block":
        return _fast_block_prefix(spec, n)
    if fam == "fast_increasing":
        return _fast_increasing_prefix(spec, n)
    if fam == "sparse_values":
        return _sparse_values_prefix(spec, n)
    if fam == "geometric":
        return _geometric_prefix(spec, n)
    if fam == "constant":
        return _constant_prefix(spec, n)
    if fam == "custom":
        return _custom_prefix(spec, n)
    raise ConfigurationError(f"unknown sequence family {fam!r}")


def _power_prefix(spec, n):
    _require(spec.alpha is not None, "power family requires alpha")
    alpha = spec.alpha
    if float(alpha).is_integer() and alpha >= 0:
        e = int(alpha)
        return [k**e for k in range(1, n + 1)]
    vals = [float(k) ** alpha for k in range(1, n + 1)]
    if spec.floor_values:
        return [int(math.floor(v)) for v in vals]
    return vals


def _log_power_prefix(spec, n):
    _require(spec.alpha is not None, "log_power family requires alpha")
    _require(spec.alpha > 0, "log_power requires alpha > 0")
    vals = [math.log(k) ** spec.alpha for k in range(1, n + 1)]
    if spec.floor_values:
        return [int(math.floor(v)) for v in vals]
    return vals


def sqrt_block_start(k: int) -> int:
    """1-based index of the first entry of the k-th alternating block."""
    if k < 1:
        raise DomainError("block index k must be >= 1")
    return (4**k + 2) // 6


def sqrt_block_window(k: int) -> tuple[int, int]:
    """Inclusive index range covered by the k-th block."""
    return sqrt_block_start(k), sqrt_block_start(k + 1) - 1


def recurrence_event_window(k: int) -> tuple[int, int]:
    """Index window of the (2k)-th block, where the k-th return event lives."""
    return sqrt_block_window(2 * k)


def _sqrt_block_prefix(n):
    out = []
    k = 1
    while len(out) < n:
        length = 4**k // 2
        hi, lo = 2**k + 1, 2**k - 1
        block = [hi if i % 2 == 0 else lo for i in range(length)]
        out.extend(block)
        k += 1
    return out[:n]


def _cover_probability(span: int, length: int, replicates: int,
                       rng: np.random.Generator) -> tuple[int, int]:
    """Hit count for a planar SSRW covering {(0, y): |y| <= span} within `length` steps."""
    need = 2 * span + 1
    hits = 0
    for _ in range(replicates):
        dirs = rng.integers(0, 4, size=length)
        dx = (dirs == 0).astype(np.int64) - (dirs == 1)
        dy = (dirs == 2).astype(np.int64) - (dirs == 3)
        x = np.cumsum(dx)
        y = np.cumsum(dy)
        seen = set(np.unique(y[(x == 0) & (np.abs(y) <= span)]).tolist())
        seen.add(0)  # the walk starts on the segment
        if len(seen) == need:
            hits += 1
    return hits, replicates


def _calibrate_cover_length(span: int, confidence: float, block_index: int) -> int:
    """Smallest power-of-two horizon whose estimated cover probability clears `confidence`.

    The estimate uses the Wilson lower bound on a fixed per-block stream;
    the simulation budget caps total simulated steps.
    """
    if span == 0:
        return 1
    length = 64
    spent = 0
    attempt = 0
    while True:
        cost = length * COVER_CALIBRATION_REPLICATES
        if spent + cost > COVER_CALIBRATION_STEP_BUDGET:
            raise InfeasibleError(
                f"fast_block cover-time calibration for block {block_index} "
                f"exceeded its sample budget (span {span}, next horizon {length})")
        rng = substream(COVER_CALIBRATION_SEED, (block_index << 20) | attempt)
        hits, trials = _cover_probability(span, length, COVER_CALIBRATION_REPLICATES, rng)
        spent += cost
        lo, _ = wilson_interval(hits, trials)
        if lo >= confidence:
            return length
        length *= 2
        attempt += 1


def _fast_block_prefix(spec, n):
    f = _Tabulated(spec.growth_fn)
    out: list[int] = []
    total = 0
    k = 1
    while len(out) < n:
        half = _calibrate_cover_length(total, spec.cover_confidence, k)
        r = max(0, math.ceil(f(len(out) + 2 * half)))
        block = [r + 1 if i % 2 == 0 else r for i in range(2 * half)]
        out.extend(block)
        total += (2 * r + 1) * half
        k += 1
    return out[:n]


def _fast_increasing_prefix(spec, n):
    f = _Tabulated(spec.growth_fn)
    out: list[float] = []
    prev_last = -1.0
    j = 1
    produced = 0
    while len(out) < n:
        block_len = j + 1
        x = max(f(produced + block_len), prev_last + 1.0, 0.0)
        offset = 0.0
        block = []
        for m in range(1, block_len + 1):
            block.append(x + offset)
            offset += m ** -1.5 / math.sqrt(1.0 + math.log(m))
        out.extend(block)
        prev_last = block[-1]
        produced += block_len
        j += 1
    return out[:n]


def _sparse_parity(block_index: int) -> int | None:
    """Required parity of the block length, or None when the length is free."""
    if block_index < 2:
        return None
    if block_index % 2 == 0:
        return (block_index // 2 + 1) % 2
    return ((block_index - 1) // 2) % 2


def _sparse_values_prefix(spec, n):
    f = _Tabulated(spec.growth_fn) if spec.growth_fn is not None else None
    out: list[int] = []
    if f is not None:
        # Leading zero steps cover indices where the envelope is still below p_1 = 9.
        lead = f.first_index_at_least(9.0) - 1
        out.extend([0] * min(lead, n))
    i = 1
    while len(out) < n:
        p_i = (2 * i + 1) ** 2
        p_next = (2 * (i + 1) + 1) ** 2
        length = p_next * p_next
        if f is not None:
            # The next block's value p_{i+1} must stay under the envelope, so
            # this block extends until f has reached p_{i+1}.
            min_end = f.first_index_at_least(float(p_next)) - 1
            length = max(length, min_end - len(out))
        want = _sparse_parity(i)
        if want is not None and length % 2 != want:
            length += 1
        out.extend([p_i] * length)
        i += 1
    return out[:n]


def _geometric_prefix(spec, n):
    f = _Tabulated(spec.growth_fn)
    out = []
    for k in range(1, n + 1):
        v = f(k)
        if v < 1.0:
            raise ConfigurationError("geometric family requires growth_fn >= 1")
        out.append(2 ** int(math.floor(math.log2(v))))
    return out


def _constant_prefix(spec, n):
    level = 1.0 if spec.alpha is None else spec.alpha
    if level < 0:
        raise ConfigurationError("constant family requires a non-negative level")
    if float(level).is_integer():
        return [int(level)] * n
    return [float(level)] * n


def _custom_prefix(spec, n):
    _require(spec.custom_values is not None, "custom family requires custom_values")
    values = spec.custom_values
    if n > len(values):
        raise ConfigurationError(
            f"custom sequence has {len(values)} values but {n} were requested")
    for idx, v in enumerate(values[:n], 1):
        if v < 0:
            raise DomainError(f"custom step {idx} is negative")
    return [int(v) if float(v).is_integer() else float(v) for v in values[:n]]


def integer_valued(spec: StepSequenceSpec) -> bool:
    """Whether the family produces integers (and so the exact engine applies)."""
    if spec.family in ("sqrt_block", "fast_block", "sparse_values", "geometric"):
        return True
    if spec.family in ("power", "log_power"):
        return spec.floor_values or (spec.family == "power"
                                     and spec.alpha is not None
                                     and float(spec.alpha).is_integer()
                                     and spec.alpha >= 0)
    if spec.family == "constant":
        return spec.alpha is None or float(spec.alpha).is_integer()
    if spec.family == "custom":
        return all(float(v).is_integer() for v in spec.custom_values or ())
    return False


def value_counts(seq) -> SequenceCounts:
    """Exact multiset histogram of an integer step-size prefix."""
    seq = list(seq)
    counts: Counter[int] = Counter()
    for idx, v in enumerate(seq, 1):
        iv = int(v)
        if iv != v:
            raise DomainError(f"entry {idx} is not an integer: {v!r}")
        if iv < 0:
            raise DomainError(f"entry {idx} is negative: {v!r}")
        counts[iv] += 1
    return SequenceCounts(dict(counts), len(seq))


def check_ints_conditions(counts: SequenceCounts, n: int) -> IntsConditionReport:
    """Evaluate both transience side-conditions at the value n.

    Left-hand sides are exact integers; the right-hand side of the second
    condition, 4 n^2 ln^3(n) L_n, is a 64-bit float (natural logarithm).
    An all-zero histogram fails both conditions.
    """
    if n < 2:
        raise DomainError("condition checks require n >= 2")
    table = counts.counts
    lhs1 = sum(c for i, c in table.items() if 0 < i <= n and math.gcd(i, n) == 1)
    rhs1 = 2 * n * n
    lhs2 = sum(i * i * c for i, c in table.items() if 0 < i < n)
    rhs2 = 4.0 * n * n * math.log(n) ** 3 * table.get(n, 0)
    return IntsConditionReport(
        n=n,
        assump1_lhs=lhs1,
        assump1_rhs=rhs1,
        assump1_holds=lhs1 >= rhs1,
        assump2_lhs=lhs2,
        assump2_rhs=rhs2,
        assump2_holds=lhs2 > 0 and lhs2 >= rhs2,
    )


def check_sparse_conditions(counts: SequenceCounts, epsilon: float,
                            valueset=None) -> SparseConditionReport:
    """Witness check: each value s needs some s' < s with L_{s'} >= epsilon * s**2."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    table = counts.counts
    values = sorted(valueset) if valueset is not None else sorted(table)
    witnesses: dict[int, int | None] = {}
    for s in values:
        found = None
        for cand in sorted(table):
            if cand >= s:
                break
            if table[cand] >= epsilon * s * s:
                found = cand
                break
        witnesses[s] = found
    positive = [s for s in values if s > 0]
    harmonic = math.fsum(1.0 / s for s in positive)
    smallest = values[0] if values else None
    all_hold = all(w is not None for s, w in witnesses.items() if s != smallest)
    return SparseConditionReport(epsilon, harmonic, witnesses, all_hold)


def read_sequence_file(path, n: int | None = None) -> list:
    """Load steps from a file: newline-delimited decimals, or a JSON spec object."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        spec = StepSequenceSpec.from_dict(json.loads(text))
        if n is None:
            raise ConfigurationError("a JSON sequence spec needs an explicit length n")
        return generate(spec, n)
    values = []
    for idx, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{idx}: cannot parse step {line!r}") from exc
        values.append(int(v) if v.is_integer() else v)
    if n is not None:
        if n > len(values):
            raise ConfigurationError(
                f"{path} holds {len(values)} steps but {n} were requested")
        values = values[:n]
    return values


def write_sequence_file(path, steps) -> None:
    lines = []
    for v in steps:
        lines.append(str(int(v)) if float(v).is_integer() else repr(float(v)))
    Path(path).write_text("\n".join(lines) + "\n")
