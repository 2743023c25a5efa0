import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rlab.errors import ConfigurationError, DomainError, InfeasibleError
from rlab.sequences import (StepSequenceSpec, check_ints_conditions,
                            check_sparse_conditions, generate,
                            read_sequence_file, recurrence_event_window,
                            sqrt_block_start, sqrt_block_window, value_counts,
                            write_sequence_file)


def spec(**kw):
    return StepSequenceSpec(**kw)


class TestGenerate:
    def test_power_identity(self):
        assert generate(spec(family="power", alpha=1), 3) == [1, 2, 3]

    def test_power_floor_non_integral(self):
        got = generate(spec(family="power", alpha=0.5, floor_values=True), 9)
        assert got == [int(math.floor(k ** 0.5)) for k in range(1, 10)]

    def test_power_integral_alpha_is_exact(self):
        assert generate(spec(family="power", alpha=3), 4) == [1, 8, 27, 64]

    def test_sqrt_block_listed_prefix(self):
        assert generate(spec(family="sqrt_block"), 11) == [3, 1, 5, 3, 5, 3, 5, 3, 5, 3, 9]
        assert generate(spec(family="sqrt_block"), 12)[-1] == 7

    def test_log_power_floor(self):
        assert generate(spec(family="log_power", alpha=2, floor_values=True), 3) == [0, 0, 1]

    def test_log_power_matches_direct_formula(self):
        got = generate(spec(family="log_power", alpha=1.5), 20)
        want = [math.log(k) ** 1.5 for k in range(1, 21)]
        assert got == pytest.approx(want, abs=0)

    def test_fast_increasing_offsets(self):
        # within a block the offsets are c_1 = 0, c_2 = 1, c_3 = 1 + 2^-1.5/sqrt(1+ln 2)
        got = generate(spec(family="fast_increasing", growth_fn=[0.0]), 5)
        c3 = 1.0 + 2.0 ** -1.5 / math.sqrt(1.0 + math.log(2.0))
        assert got[3] - got[2] == pytest.approx(1.0, abs=1e-15)
        assert got[4] - got[2] == pytest.approx(c3, abs=1e-12)
        assert c3 == pytest.approx(1.27172, abs=1e-4)

    def test_fast_increasing_strictly_increasing_and_above_envelope(self):
        table = [float(k) for k in range(1, 40)]
        got = generate(spec(family="fast_increasing", growth_fn=table), 30)
        assert all(b > a for a, b in zip(got, got[1:]))
        for n, a in enumerate(got, 1):
            assert a >= min(float(n), table[-1])

    def test_constant_family(self):
        assert generate(spec(family="constant", alpha=7), 4) == [7, 7, 7, 7]
        assert generate(spec(family="constant"), 2) == [1, 1]

    def test_geometric_power_of_two_below_envelope(self):
        table = [1, 2, 3, 5, 9, 17, 33]
        got = generate(spec(family="geometric", growth_fn=table), 7)
        assert got == [1, 2, 2, 4, 8, 16, 32]
        for a, f in zip(got, table):
            assert a <= f and 2 * a > f

    def test_custom_roundtrip_and_length_error(self):
        s = spec(family="custom", custom_values=(3, 1, 4.5))
        assert generate(s, 3) == [3, 1, 4.5]
        with pytest.raises(ConfigurationError):
            generate(s, 4)

    def test_missing_parameter_errors(self):
        with pytest.raises(ConfigurationError):
            generate(spec(family="power"), 3)
        with pytest.raises(ConfigurationError):
            generate(spec(family="geometric"), 3)
        with pytest.raises(ConfigurationError):
            generate(spec(family="custom"), 3)

    def test_n_must_be_positive(self):
        with pytest.raises(DomainError):
            generate(spec(family="sqrt_block"), 0)

    def test_all_families_non_negative(self):
        cases = [
            spec(family="power", alpha=0.7),
            spec(family="log_power", alpha=2, floor_values=True),
            spec(family="sqrt_block"),
            spec(family="sparse_values"),
            spec(family="geometric", growth_fn=[1, 4, 9, 16, 30, 60, 100]),
            spec(family="constant", alpha=0),
        ]
        for s in cases:
            assert all(a >= 0 for a in generate(s, 40))


@st.composite
def any_spec(draw):
    fam = draw(st.sampled_from(["power", "log_power", "sqrt_block", "sparse_values",
                                "geometric", "constant", "custom"]))
    if fam == "power":
        return spec(family="power", alpha=draw(st.sampled_from([0.5, 1, 2, 1.3])),
                    floor_values=draw(st.booleans()))
    if fam == "log_power":
        return spec(family="log_power", alpha=draw(st.sampled_from([1, 2, 2.5])),
                    floor_values=draw(st.booleans()))
    if fam == "sqrt_block":
        return spec(family="sqrt_block")
    if fam == "sparse_values":
        return spec(family="sparse_values")
    if fam == "geometric":
        k = draw(st.integers(1, 5))
        return spec(family="geometric", growth_fn=[1 + i * k for i in range(100)])
    if fam == "constant":
        return spec(family="constant", alpha=draw(st.integers(0, 5)))
    vals = draw(st.lists(st.integers(0, 9), min_size=40, max_size=60))
    return spec(family="custom", custom_values=tuple(vals))


class TestPrefixStability:
    @given(any_spec(), st.integers(1, 30), st.integers(0, 10))
    def test_shorter_is_prefix_of_longer(self, s, n, extra):
        # custom specs carry at least 40 values, so n + extra stays in range
        assert generate(s, n) == generate(s, n + extra)[:n]

    def test_fast_increasing_prefix(self):
        s = spec(family="fast_increasing", growth_fn=[1.0, 2.0, 4.0])
        assert generate(s, 9) == generate(s, 17)[:9]


class TestSqrtBlockShape:
    def test_block_starts_closed_form(self):
        for k in range(1, 11):
            assert sqrt_block_start(k) == (4 ** k + 2) // 6
        assert [sqrt_block_start(k) for k in (1, 2, 3)] == [1, 3, 11]

    def test_envelope_to_1e6(self):
        n = 10 ** 6
        a = np.asarray(generate(spec(family="sqrt_block"), n), dtype=np.float64)
        idx = np.arange(1, n + 1, dtype=np.float64)
        assert np.all(a >= np.sqrt(idx / 2.0))
        assert np.all(a <= 3.0 * np.sqrt(idx))

    def test_block_alternation(self):
        a = generate(spec(family="sqrt_block"), sqrt_block_window(5)[1])
        for k in range(1, 6):
            start, end = sqrt_block_window(k)
            block = a[start - 1:end]
            assert len(block) == 4 ** k // 2
            assert block[::2] == [2 ** k + 1] * (len(block) // 2)
            assert block[1::2] == [2 ** k - 1] * (len(block) // 2)

    def test_recurrence_event_window_is_even_block(self):
        assert recurrence_event_window(1) == (3, 10)
        assert recurrence_event_window(2) == (43, 170)


class TestSparseValues:
    def test_block_values_are_odd_squares(self):
        a = generate(spec(family="sparse_values"), 700)
        assert set(a) <= {9, 25}
        assert a[0] == 9

    def test_parity_and_length_conditions(self):
        # reconstruct block lengths from the generated run-length structure
        s = spec(family="sparse_values")
        lengths = []
        i = 1
        total = 0
        while len(lengths) < 6:
            p_next_sq = ((2 * (i + 1) + 1) ** 2) ** 2
            total += p_next_sq + 2  # upper bound on this block
            i += 1
            lengths.append(None)
        a = generate(s, total)
        runs = []
        cur, count = a[0], 0
        for v in a:
            if v == cur:
                count += 1
            else:
                runs.append((cur, count))
                cur, count = v, 1
        for i, (value, length) in enumerate(runs[:5], 1):
            assert value == (2 * i + 1) ** 2
            assert length >= ((2 * (i + 1) + 1) ** 2) ** 2
            if i >= 2 and i % 2 == 0:
                assert length % 2 == (i // 2 + 1) % 2
            if i >= 3 and i % 2 == 1:
                assert length % 2 == ((i - 1) // 2) % 2

    def test_envelope_constrains_blocks(self):
        # f reaches 9 at index 3 and 25 at index 1000: zeros first, long 9-block
        table = [1.0] * 2 + [9.0] * 997 + [25.0, 49.0, 81.0, 121.0]
        a = generate(spec(family="sparse_values", growth_fn=table), 1000)
        assert a[:2] == [0, 0]
        assert a[2] == 9
        assert all(v == 9 for v in a[2:999])


class TestFastBlock:
    def test_block_structure_at_low_confidence(self):
        s = spec(family="fast_block", growth_fn=[1.0], cover_confidence=0.02)
        a = generate(s, 40)
        assert a[:2] == [2, 1]
        # remaining entries alternate r+1, r in even-length blocks
        rest = a[2:]
        r = rest[1]
        assert rest[0] == r + 1
        for i, v in enumerate(rest):
            assert v in (r, r + 1)
            assert v == (r + 1 if i % 2 == 0 else r)

    def test_growth_envelope(self):
        table = [0.5 * k for k in range(1, 200)]
        s = spec(family="fast_block", growth_fn=table, cover_confidence=0.02)
        a = generate(s, 10)
        for n, v in enumerate(a, 1):
            assert v >= min(table[n - 1], v + 1) - v or v >= table[n - 1] - 1  # r >= ceil(f(end))
        # direct check: every entry clears f at its own index
        assert all(v >= table[n - 1] for n, v in enumerate(a, 1))

    def test_budget_exhaustion_names_block(self):
        s = spec(family="fast_block", growth_fn=[1.0])  # default confidence 1/2
        with pytest.raises(InfeasibleError, match="block 2"):
            generate(s, 5)


class TestValueCounts:
    def test_sqrt_block_first_ten(self):
        counts = value_counts(generate(spec(family="sqrt_block"), 10))
        assert counts.counts == {1: 1, 3: 5, 5: 4}
        assert counts.prefix_length == 10

    def test_constant(self):
        assert value_counts([7, 7, 7]).counts == {7: 3}

    def test_empty(self):
        c = value_counts([])
        assert c.counts == {} and c.prefix_length == 0

    def test_non_integer_rejected(self):
        with pytest.raises(DomainError):
            value_counts([1, 2.5])
        with pytest.raises(DomainError):
            value_counts([-1])

    def test_integral_floats_accepted(self):
        assert value_counts([2.0, 2.0]).counts == {2: 2}

    @given(st.lists(st.integers(0, 30), max_size=200))
    def test_counts_sum_to_prefix_length(self, seq):
        c = value_counts(seq)
        assert sum(c.counts.values()) == c.prefix_length == len(seq)


class TestIntsConditions:
    def test_uniform_million_counts(self):
        counts = value_counts([])
        counts.counts = {1: 10 ** 6, 2: 10 ** 6, 3: 10 ** 6, 4: 10 ** 6}
        counts.prefix_length = 4 * 10 ** 6
        rep = check_ints_conditions(counts, 4)
        assert rep.assump1_lhs == 2 * 10 ** 6  # gcd filter keeps 1 and 3
        assert rep.assump1_rhs == 32
        assert rep.assump1_holds

    def test_all_zero_fails_both(self):
        counts = value_counts([])
        rep = check_ints_conditions(counts, 5)
        assert not rep.assump1_holds and not rep.assump2_holds

    def test_log_squared_prefix_sides_match_scan(self):
        n_arr = np.arange(1, 10 ** 6 + 1)
        vals = np.floor(np.log(n_arr) ** 2).astype(np.int64)
        uniq, cnt = np.unique(vals, return_counts=True)
        counts = value_counts([])
        counts.counts = {int(u): int(c) for u, c in zip(uniq, cnt)}
        counts.prefix_length = 10 ** 6
        n = int(uniq.max())
        rep = check_ints_conditions(counts, n)
        # independent oracle for both left sides
        lhs1 = int(sum(c for i, c in counts.counts.items()
                       if 0 < i <= n and math.gcd(i, n) == 1))
        lhs2 = int(np.sum(vals[vals < n].astype(np.int64) ** 2))
        assert rep.assump1_lhs == lhs1
        assert rep.assump2_lhs == lhs2
        assert rep.assump1_holds  # holds at the top value for this prefix

    def test_small_n_rejected(self):
        with pytest.raises(DomainError):
            check_ints_conditions(value_counts([1, 2]), 1)


class TestSparseConditions:
    def test_slow_construction_has_witnesses(self):
        a = generate(spec(family="sparse_values"), 700 * 10)
        counts = value_counts(a)
        rep = check_sparse_conditions(counts, epsilon=1.0)
        values = sorted(counts.counts)
        for s in values[1:]:
            assert rep.witnesses[s] is not None
        assert rep.all_hold

    def test_single_value_fails(self):
        rep = check_sparse_conditions(value_counts([7, 7, 7]), epsilon=1.0)
        assert rep.witnesses[7] is None
        assert not rep.all_hold or len(rep.witnesses) == 1

    def test_explicit_witness(self):
        counts = value_counts([])
        counts.counts = {2: 100, 10: 1}
        rep = check_sparse_conditions(counts, epsilon=1.0)
        assert rep.witnesses[10] == 2  # 100 >= 1 * 10**2

    def test_bad_epsilon(self):
        with pytest.raises(DomainError):
            check_sparse_conditions(value_counts([1]), epsilon=0.0)


class TestSequenceFiles:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "seq.txt"
        write_sequence_file(path, [3, 1, 4.5])
        assert read_sequence_file(path) == [3, 1, 4.5]

    def test_json_spec_file(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text('{"family": "sqrt_block"}')
        assert read_sequence_file(path, n=4) == [3, 1, 5, 3]
        with pytest.raises(ConfigurationError):
            read_sequence_file(path)  # spec files need a length

    def test_spec_dict_roundtrip(self):
        s = spec(family="geometric", growth_fn=[1, 2, 4])
        assert StepSequenceSpec.from_dict(s.to_dict()) == s
        with pytest.raises(ConfigurationError):
            StepSequenceSpec.from_dict({"alpha": 1})
        with pytest.raises(ConfigurationError):
            StepSequenceSpec.from_dict({"family": "power", "bogus": 1})
