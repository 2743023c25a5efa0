"""Reproducible Monte Carlo for walks the exact engine cannot reach.

Replicate i draws from the substream (master_seed, i), so every estimate is
invariant under replicate execution order and worker count; aggregation is
commutative (integer counts only).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp, mpf

from .errors import ConfigurationError, DomainError, InfeasibleError
from .sequences import (StepSequenceSpec, generate, integer_valued,
                        recurrence_event_window)
from .streams import (GENERATOR_VERSION, SubstreamSampler, rademacher_signs,
                      substream, wilson_interval)

EXPERIMENTS = ("interval_hits", "q1_estimate", "embed2d", "coupling")
_CHUNK = 2048
_REAL_STEP_GRID = 16  # unit windows slide on a 1/16 grid for real-valued walks


@dataclass(frozen=True)
class McRunManifest:
    """Seed, replicate count, horizon, and sequence spec: the reproducibility contract."""

    master_seed: int
    replicates: int
    horizon: int
    spec: StepSequenceSpec
    experiment: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be >= 1")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")

    def to_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "replicates": self.replicates,
            "horizon": self.horizon,
            "spec": self.spec.to_dict(),
            "experiment": self.experiment,
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "McRunManifest":
        needed = {"master_seed", "replicates", "horizon", "spec", "experiment"}
        missing = needed - set(data)
        if missing:
            raise ConfigurationError(f"manifest is missing keys: {sorted(missing)}")
        return cls(
            master_seed=int(data["master_seed"]),
            replicates=int(data["replicates"]),
            horizon=int(data["horizon"]),
            spec=StepSequenceSpec.from_dict(data["spec"]),
            experiment=data["experiment"],
            params=dict(data.get("params", {})),
        )


@dataclass
class EventStats:
    hits: int
    replicates: int
    p_hat: float
    wilson_lo: float
    wilson_hi: float


@dataclass
class RecurrenceStats:
    """Per-window hit frequencies plus all pairwise joint hit counts."""

    per_event: dict[int, EventStats]
    joint: dict[tuple[int, int], int]
    replicates: int


@dataclass
class TwoDEmbedding:
    """Lattice path of a paired block walk and its visits to a fixed line."""

    path: list[tuple[int, int]]
    line: tuple[int, int, int]  # (A, B, c) encoding A*a + B*b + c = 0
    visits_to_line: int


@dataclass
class Q1Estimate:
    q1_hat: float
    stderr: float
    replicates: int
    n: int
    low_sample: bool  # estimator is upward biased when replicates < 100 / q1_hat


@dataclass
class FitResult:
    slope: float
    intercept: float
    r_squared: float


@dataclass
class CoupledPair:
    """Outcome of the two-walk alignment game started `offset_d` apart."""

    offset_d: float
    epsilon_target: float
    episodes_used: int
    final_gap: float
    episode_wins: list[bool]
    anti_steps: list[tuple[int, int]]  # (step index, sign taken by the first walk)
    end_time: int


def _steps_array(manifest: McRunManifest):
    steps = generate(manifest.spec, manifest.horizon)
    if integer_valued(manifest.spec):
        if sum(int(a) for a in steps) >= 1 << 62:
            raise InfeasibleError(
                "walk positions on this horizon would overflow 64-bit integers")
        return np.asarray(steps, dtype=np.int64)
    return np.asarray(steps, dtype=np.float64)


def simulate_walk(manifest: McRunManifest, replicate: int, steps=None) -> np.ndarray:
    """Positions X_0..X_horizon for one replicate; deterministic in (seed, replicate)."""
    if not 0 <= replicate < manifest.replicates:
        raise ConfigurationError(
            f"replicate {replicate} outside 0..{manifest.replicates - 1}")
    if steps is None:
        steps = _steps_array(manifest)
    if len(steps) < manifest.horizon:
        raise ConfigurationError(
            f"sequence provides {len(steps)} steps but horizon is {manifest.horizon}")
    rng = substream(manifest.master_seed, replicate)
    signs = rademacher_signs(rng, manifest.horizon)
    trace = np.empty(manifest.horizon + 1, dtype=steps.dtype)
    trace[0] = 0
    np.cumsum(signs * steps[: manifest.horizon], out=trace[1:])
    return trace


def _chunks(total: int, width: int):
    # keep each worker's sign matrix near 8M entries
    size = max(32, min(_CHUNK, 8_000_000 // max(1, width)))
    start = 0
    while start < total:
        yield range(start, min(start + size, total))
        start += size


def _map_chunks(worker, total, width, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, _chunks(total, width)))
    return [worker(chunk) for chunk in _chunks(total, width)]


def estimate_interval_hits(manifest: McRunManifest, C: float, block_windows,
                           threads: int = 1) -> RecurrenceStats:
    """Hit frequencies of {exists i in window: |X_i| <= C} for disjoint index windows.

    Windows are inclusive (start, end) ranges of step indices, 1-based; events
    are keyed 1..K in the given order. Wilson intervals at 99%.
    """
    if C < 0:
        raise DomainError("C must be non-negative")
    windows = [(int(s), int(e)) for s, e in block_windows]
    for s, e in windows:
        if not 1 <= s <= e <= manifest.horizon:
            raise ConfigurationError(f"window ({s}, {e}) outside 1..{manifest.horizon}")
    for (s1, e1), (s2, e2) in zip(sorted(windows), sorted(windows)[1:]):
        if s2 <= e1:
            raise ConfigurationError(
                f"windows ({s1},{e1}) and ({s2},{e2}) overlap")
    steps = _steps_array(manifest)
    K = len(windows)

    def worker(chunk):
        sampler = SubstreamSampler()
        signs = np.empty((len(chunk), manifest.horizon), dtype=np.int64)
        for row, rep in enumerate(chunk):
            signs[row] = sampler.signs(manifest.master_seed, rep, manifest.horizon)
        pos = np.cumsum(signs * steps[None, :], axis=1)
        hits = np.empty((len(chunk), K), dtype=bool)
        for j, (s, e) in enumerate(windows):
            hits[:, j] = (np.abs(pos[:, s - 1:e]) <= C).any(axis=1)
        counts = hits.sum(axis=0).astype(np.int64)
        joint = np.zeros((K, K), dtype=np.int64)
        for j in range(K):
            for k in range(j + 1, K):
                joint[j, k] = int(np.count_nonzero(hits[:, j] & hits[:, k]))
        return counts, joint

    partials = _map_chunks(worker, manifest.replicates, manifest.horizon, threads)
    counts = sum(c for c, _ in partials)
    joint = sum(j for _, j in partials)
    R = manifest.replicates
    per_event = {}
    for j in range(K):
        h = int(counts[j])
        lo, hi = wilson_interval(h, R)
        per_event[j + 1] = EventStats(h, R, h / R, lo, hi)
    joint_map = {(j + 1, k + 1): int(joint[j, k])
                 for j in range(K) for k in range(j + 1, K)}
    return RecurrenceStats(per_event, joint_map, R)


def kochen_stone_estimate(stats: RecurrenceStats, up_to_k: int) -> dict:
    """Plug-in first and second moments of Z = number of events hit, and their ratio."""
    if stats.replicates < 1:
        raise DomainError("no replicates recorded")
    keys = [k for k in sorted(stats.per_event) if k <= up_to_k]
    if not keys:
        raise DomainError(f"no events recorded at or below k={up_to_k}")
    R = stats.replicates
    z_mean = math.fsum(stats.per_event[k].p_hat for k in keys)
    cross = 0.0
    for j in keys:
        for k in keys:
            if j < k:
                cross += stats.joint.get((j, k), 0) / R
    z_second = z_mean + 2.0 * cross
    if z_second == 0.0:
        return {"z_mean": 0.0, "z_second_moment": 0.0, "ratio": 0.0}
    return {"z_mean": z_mean, "z_second_moment": z_second,
            "ratio": min(1.0, z_mean * z_mean / z_second)}


def estimate_q1(manifest: McRunManifest, n: int, replicates: int | None = None,
                threads: int = 1) -> Q1Estimate:
    """Empirical maximum unit-window frequency of X_n over the replicates.

    Integer-step walks anchor the windows at integers (each window holds one
    lattice point); real-step walks slide the window on a 1/16 grid, which
    biases the estimate upward by at most one grid cell of mass.
    """
    if n < 1 or n > manifest.horizon:
        raise ConfigurationError(f"n={n} outside 1..{manifest.horizon}")
    R = manifest.replicates if replicates is None else replicates
    steps = _steps_array(manifest)[:n]
    integral = steps.dtype.kind == "i"

    def worker(chunk):
        sampler = SubstreamSampler()
        signs = np.empty((len(chunk), n), dtype=np.int64)
        for row, rep in enumerate(chunk):
            signs[row] = sampler.signs(manifest.master_seed, rep, n)
        values = signs @ steps
        if integral:
            vals, cnts = np.unique(values, return_counts=True)
        else:
            vals, cnts = np.unique(np.floor(values * _REAL_STEP_GRID).astype(np.int64),
                                   return_counts=True)
        return vals, cnts

    totals: dict[int, int] = {}
    for vals, cnts in _map_chunks(worker, R, n, threads):
        for v, c in zip(vals.tolist(), cnts.tolist()):
            totals[v] = totals.get(v, 0) + c
    if integral:
        peak = max(totals.values())
    else:
        # largest mass of 16 consecutive 1/16-cells = one sliding unit window
        keys = np.array(sorted(totals), dtype=np.int64)
        csum = np.concatenate(([0], np.cumsum([totals[int(k)] for k in keys])))
        ends = np.searchsorted(keys, keys + (_REAL_STEP_GRID - 1), side="right")
        peak = int(np.max(csum[ends] - csum[: keys.size]))
    q1_hat = peak / R
    stderr = math.sqrt(q1_hat * (1.0 - q1_hat) / R)
    return Q1Estimate(q1_hat, stderr, R, n, low_sample=R * q1_hat < 100.0)


def block_pair_trace(manifest: McRunManifest, replicate: int, k: int,
                     steps=None) -> np.ndarray:
    """Positions of the paired walk Y_m = X_{2m} across the (2k)-th block."""
    start, end = recurrence_event_window(k)
    if end > manifest.horizon:
        raise ConfigurationError(
            f"horizon {manifest.horizon} does not reach block end {end}")
    trace = simulate_walk(manifest, replicate, steps=steps)
    return trace[start - 1:end + 1:2]


def embed_2d(trace, k: int) -> TwoDEmbedding:
    """Map a paired-block trace to the lattice: big steps move in x, small in y.

    `trace` holds the paired-walk positions across one (2k)-th block, whose
    increments all lie in {+-2**(2k+1), +-2}. Points on the returned line
    correspond exactly to zeros of the one-dimensional walk.
    """
    if k < 1:
        raise DomainError("block index k must be >= 1")
    trace = [int(v) for v in trace]
    if not trace:
        raise DomainError("trace must contain at least the block-start position")
    big = 2 ** (2 * k + 1)
    a = b = 0
    path = [(0, 0)]
    for idx, (prev, cur) in enumerate(zip(trace, trace[1:]), 1):
        inc = cur - prev
        if inc == big:
            a += 1
        elif inc == -big:
            a -= 1
        elif inc == 2:
            b += 1
        elif inc == -2:
            b -= 1
        else:
            raise DomainError(
                f"pair-step {idx}: increment {inc} not in {{+-{big}, +-2}}")
        path.append((a, b))
    c = trace[0]
    visits = sum(1 for (pa, pb) in path if big * pa + 2 * pb + c == 0)
    return TwoDEmbedding(path, (big, 2, c), visits)


def fit_exponent(points) -> FitResult:
    """Ordinary least squares in log-log coordinates over (n, value) points."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise DomainError("need at least 3 points to fit an exponent")
    for n, v in pts:
        if v <= 0:
            raise DomainError(f"non-positive value {v} at n={n}")
        if n <= 0:
            raise DomainError(f"non-positive n {n}")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.dot(resid, resid))
    centered = y - y.mean()
    ss_tot = float(np.dot(centered, centered))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(float(slope), float(intercept), r2)


# --------------------------------------------------------------------------
# The two-walk alignment game
# --------------------------------------------------------------------------

_DEFAULT_COUPLING_HORIZON = 10**60
_MAX_EPISODES = 10_000


class _SequenceView:
    """Random access to a_n for the coupling game.

    Monotone families (power with 0 < alpha < 1, log_power) get O(log n)
    searches via bisection, valid for arbitrarily large indices; custom
    sequences fall back to linear scans over their finite horizon.
    """

    def __init__(self, spec: StepSequenceSpec, horizon: int | None):
        self.spec = spec
        fam = spec.family
        if fam == "power":
            if spec.floor_values:
                raise ConfigurationError(
                    "floored power steps have unit gaps; the game needs vanishing gaps")
            if not (spec.alpha and 0.0 < spec.alpha < 1.0):
                raise ConfigurationError(
                    "coupling requires power alpha in (0, 1) for vanishing gaps")
            self.kind = "power"
            self.alpha = spec.alpha
            self.gap_floor = 2
            self.horizon = horizon or _DEFAULT_COUPLING_HORIZON
        elif fam == "log_power":
            if spec.floor_values:
                raise ConfigurationError(
                    "floored log-power steps have integer gaps; the game needs "
                    "vanishing gaps")
            if not (spec.alpha and spec.alpha > 0):
                raise ConfigurationError("log_power requires alpha > 0")
            self.kind = "log_power"
            self.alpha = spec.alpha
            self.gap_floor = max(3, int(math.ceil(math.exp(max(0.0, spec.alpha - 1.0)))) + 1)
            self.horizon = horizon or _DEFAULT_COUPLING_HORIZON
        elif fam == "custom":
            values = [float(v) for v in (spec.custom_values or ())]
            if len(values) < 3:
                raise ConfigurationError("custom coupling sequence needs >= 3 values")
            self.kind = "custom"
            self.values = values
            self.horizon = min(horizon or len(values), len(values))
            gaps = [abs(b - a) for a, b in zip(values, values[1:])]
            # suffix maxima let us check "all later gaps below delta/2" exactly
            self.suffix_gap = list(gaps)
            for i in range(len(gaps) - 2, -1, -1):
                self.suffix_gap[i] = max(self.suffix_gap[i], self.suffix_gap[i + 1])
        else:
            raise ConfigurationError(
                f"family {fam!r} does not provide unbounded steps with vanishing gaps")

    def a(self, n: int) -> mpf:
        if self.kind == "power":
            return mpf(n) ** mpf(self.alpha)
        if self.kind == "log_power":
            return mp.log(mpf(n)) ** mpf(self.alpha)
        return mpf(self.values[n - 1])

    def gap(self, n: int) -> mpf:
        return self.a(n) - self.a(n - 1)

    def first_gap_below(self, lo: int, half_delta: mpf) -> int:
        """Smallest n >= lo with every later gap below half_delta."""
        if self.kind == "custom":
            for n in range(max(lo, 2), self.horizon + 1):
                if self.suffix_gap[n - 2] < half_delta:
                    return n
            raise InfeasibleError(
                f"no index on the horizon has all later gaps below {float(half_delta)}")
        n = max(lo, self.gap_floor)
        if n > self.horizon:
            raise InfeasibleError("no indices left on the horizon")
        if self.gap(n) < half_delta:
            return n
        hi = n
        while self.gap(hi) >= half_delta:
            hi *= 2
            if hi > self.horizon:
                raise InfeasibleError(
                    f"gap threshold {float(half_delta)} unreachable within horizon")
        lo_b, hi_b = hi // 2, hi
        while hi_b - lo_b > 1:
            mid = (lo_b + hi_b) // 2
            if self.gap(mid) < half_delta:
                hi_b = mid
            else:
                lo_b = mid
        return hi_b

    def first_value_at_least(self, after: int, target: mpf) -> int:
        """Smallest m > after with a(m) >= target."""
        if self.kind == "custom":
            for m in range(after + 1, self.horizon + 1):
                if self.a(m) >= target:
                    return m
            raise InfeasibleError(
                f"no step on the horizon reaches value {float(target)}")
        if self.a(after + 1) >= target:
            return after + 1
        if self.a(self.horizon) < target:
            raise InfeasibleError(
                f"steps on the horizon never reach value {float(target)}")
        lo, hi = after + 1, 2 * (after + 1)
        while hi < self.horizon and self.a(hi) < target:
            lo, hi = hi, hi * 2
        hi = min(hi, self.horizon)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.a(mid) >= target:
                hi = mid
            else:
                lo = mid
        return hi


def simulate_coupling(spec: StepSequenceSpec, d: float, epsilon: float, seed: int,
                      replicate: int = 0, horizon: int | None = None,
                      dps: int = 60) -> CoupledPair:
    """Play the episode strategy aligning two walks started `d` apart to within epsilon.

    Episode i: with current signed gap d_i and delta_i = min(epsilon, |d_i|),
    pick n_i past which all step gaps are below delta_i / 2, find m_i with
    a(m_i) - a(n_i) inside [x - delta_i/2, x] for the strategy offset x, and
    anti-couple the signs at n_i and m_i (coupling them equal everywhere
    else). Each episode closes the gap into [0, epsilon] with probability at
    least 1/4. Arithmetic runs at `dps` significant digits so deep episode
    chains (whose gaps and indices grow geometrically) stay exact enough to
    place the window.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    view = _SequenceView(spec, horizon)
    rng = substream(seed, replicate)
    with mp.workdps(dps):
        D = mpf(float(d))
        eps = mpf(float(epsilon))
        anti: list[tuple[int, int]] = []
        wins: list[bool] = []
        if 0 <= D <= eps:
            return CoupledPair(float(d), float(epsilon), 0, float(D), wins, anti, 0)
        t = 0
        episodes = 0
        while episodes < _MAX_EPISODES:
            episodes += 1
            delta = min(eps, abs(D))
            try:
                n_i = view.first_gap_below(t + 1, delta / 2)
                x = D / 2 if D > 0 else -D / 2 + delta / 2
                target = view.a(n_i) + x - delta / 2
                m_i = view.first_value_at_least(n_i, target)
            except InfeasibleError as exc:
                raise InfeasibleError(
                    f"episode {episodes} (gap target delta={float(delta)}): {exc}"
                ) from exc
            if view.a(m_i) - view.a(n_i) > x:
                raise InfeasibleError(
                    f"episode {episodes}: step gaps past n={n_i} are too coarse for "
                    f"delta={float(delta)}")
            s1 = int(rng.integers(0, 2)) * 2 - 1
            D = D + 2 * s1 * view.a(n_i)
            anti.append((n_i, s1))
            if 0 <= D <= eps:
                wins.append(True)
                return CoupledPair(float(d), float(epsilon), episodes, float(D),
                                   wins, anti, n_i)
            s2 = int(rng.integers(0, 2)) * 2 - 1
            D = D + 2 * s2 * view.a(m_i)
            anti.append((m_i, s2))
            t = m_i
            if 0 <= D <= eps:
                wins.append(True)
                return CoupledPair(float(d), float(epsilon), episodes, float(D),
                                   wins, anti, m_i)
            wins.append(False)
        raise InfeasibleError(f"no alignment within {_MAX_EPISODES} episodes")


def replay_final_gap(spec: StepSequenceSpec, d: float, anti_steps,
                     horizon: int | None = None, dps: int = 60) -> float:
    """Re-run the gap recursion from the recorded anti-coupled signs.

    Equal-coupled steps cancel exactly, so the gap changes only at the
    recorded indices; this replays those updates in the original order.
    """
    view = _SequenceView(spec, horizon)
    with mp.workdps(dps):
        D = mpf(float(d))
        for idx, sign in anti_steps:
            D = D + 2 * sign * view.a(idx)
        return float(D)
