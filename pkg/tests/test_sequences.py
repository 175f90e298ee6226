import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from covsets.errors import TruncationError, UndefinedEstimateError
from covsets.sequences import (RadiusSequence, block_counts, bt_index_details,
                               bt_index_estimate, condition_c_check, default_gap_constant,
                               iroot, sparse_indices)

HALF = Fraction(1, 2)


def direct_block_counts(radii, b, K):
    counts = {k: 0 for k in range(1, K + 1)}
    for r in radii:
        for k in range(1, K + 1):
            if b ** (k - 1) <= r < b ** (k - 2):
                counts[k] += 1
    return counts


@given(st.integers(0, 10**40), st.integers(1, 7))
def test_iroot(x, n):
    r = iroot(x, n)
    assert r**n <= x < (r + 1) ** n


class TestRadiusSequence:
    def test_power_law_radii_are_grid_roundings(self):
        seq = RadiusSequence.power_law("1/2", 2, grid=30)
        for n in (1, 2, 3, 10, 1000):
            exact = n ** -2.0
            r = seq.radius(n)
            assert r.denominator <= 2**30
            assert r <= exact + 1e-15 and exact - r < 2.0**-30 + 1e-15

    def test_monotone_and_positive(self):
        for seq in (RadiusSequence.power_law("0.4", 3),
                    RadiusSequence.block_profile({3: 5, 5: 9, 6: 2}, 2)):
            radii = seq.materialize(16)
            assert all(r > 0 for r in radii)
            assert all(a >= b for a, b in zip(radii, radii[1:]))

    def test_explicit_validation(self):
        with pytest.raises(ValueError):
            RadiusSequence.explicit([HALF, Fraction(3, 4)])
        with pytest.raises(ValueError):
            RadiusSequence.explicit([0])
        with pytest.raises(TruncationError):
            RadiusSequence.explicit([HALF]).radius(2)

    def test_max_terms_truncation(self):
        seq = RadiusSequence.power_law("0.5", 2, max_terms=100)
        with pytest.raises(TruncationError):
            block_counts(seq, HALF, 20)

    @given(st.fractions(Fraction(1, 5), 2, max_denominator=7), st.integers(0, 30))
    def test_count_at_least_matches_scan(self, alpha, j):
        seq = RadiusSequence.power_law(alpha, 2, grid=40)
        r = Fraction(1, 2**j)
        count = seq.count_at_least(r)
        if count < 20000:
            assert all(seq.radius(n) >= r for n in range(max(1, count - 3), count + 1))
            assert seq.radius(count + 1) < r


class TestBlockCounts:
    def test_power_law_half(self):
        table = block_counts(RadiusSequence.power_law("1/2", 2), HALF, 30)
        for k in range(2, 31):
            expected = math.isqrt(2 ** (k - 1)) - math.isqrt(2 ** (k - 2))
            assert table.n(k) == expected

    def test_power_law_matches_direct_scan(self):
        seq = RadiusSequence.power_law("0.6", 3)
        table = block_counts(seq, Fraction(1, 3), 10)
        direct = direct_block_counts(seq.materialize(table.total + 5), Fraction(1, 3), 10)
        assert table.counts == direct

    def test_profile_reproduced(self):
        prof = {k: (2 ** math.floor(0.4 * k) if k % 2 == 0 else 0) for k in range(1, 31)}
        table = block_counts(RadiusSequence.block_profile(prof, 2), HALF, 30)
        assert table.counts == prof

    def test_explicit_list(self):
        seq = RadiusSequence.explicit([HALF, Fraction(1, 4), Fraction(1, 8)])
        table = block_counts(seq, HALF, 4)
        assert (table.n(2), table.n(3), table.n(4)) == (1, 1, 1)
        assert table.n(1) == 0

    def test_blocks_partition_the_index_range(self):
        table = block_counts(RadiusSequence.power_law("0.7", 2), HALF, 25)
        start = 1
        for k in range(1, 26):
            rng = table.block_indices(k)
            assert rng.start == start
            start = rng.stop
        assert start - 1 == table.total == sum(table.counts.values())

    def test_rejects_small_K_and_bad_b(self):
        seq = RadiusSequence.power_law("0.5", 2)
        with pytest.raises(ValueError):
            block_counts(seq, HALF, 2)
        with pytest.raises(ValueError):
            block_counts(seq, Fraction(2, 5), 10)

    def test_b_flag(self):
        seq = RadiusSequence.power_law("0.5", 4)
        assert block_counts(seq, HALF, 10).b_outside_theory_range
        assert not block_counts(seq, Fraction(1, 4), 10).b_outside_theory_range

    def test_csv_export(self):
        table = sparse_indices(block_counts(RadiusSequence.power_law("0.5", 2), HALF, 6), 1)
        lines = table.to_csv().splitlines()
        assert lines[0].startswith("# schema")
        assert lines[1] == "k,n_k,m_k,log_ratio"
        assert len(lines) == 8


class TestBTIndex:
    def test_power_law_04(self):
        table = block_counts(RadiusSequence.power_law("0.4", 2), HALF, 40)
        assert 0.38 <= bt_index_estimate(table, 20) <= 0.42

    def test_profile_half(self):
        prof = {k: math.floor(2 ** (0.5 * k)) for k in range(1, 41)}
        table = block_counts(RadiusSequence.block_profile(prof, 2), HALF, 40)
        assert bt_index_estimate(table, 20) == pytest.approx(0.5, abs=0.02)

    def test_three_terms(self):
        seq = RadiusSequence.explicit([HALF, Fraction(1, 4), Fraction(1, 8)])
        table = block_counts(seq, HALF, 4)
        ratios = [math.log(table.n(k)) / (k * math.log(2)) for k in (2, 3, 4)]
        assert bt_index_estimate(table, 3) == max(ratios)

    def test_raw_ratio_is_window_max(self):
        table = block_counts(RadiusSequence.power_law("0.4", 2), HALF, 40)
        det = bt_index_details(table, 20)
        assert det["raw"] == max(table.log_ratio(k) for k in range(21, 41))
        assert det["estimate"] == max(det["raw"], det["slope"])

    def test_empty_window(self):
        table = block_counts(RadiusSequence.block_profile({3: 4}, 2), HALF, 20)
        with pytest.raises(UndefinedEstimateError):
            bt_index_estimate(table, 5)

    def test_window_bounds(self):
        table = block_counts(RadiusSequence.power_law("0.4", 2), HALF, 10)
        with pytest.raises(ValueError):
            bt_index_estimate(table, 2)
        with pytest.raises(ValueError):
            bt_index_estimate(table, 11)

    @pytest.mark.parametrize("alpha", ["0.2", "0.4", "0.6", "0.8"])
    def test_converges_between_K_and_2K(self, alpha):
        seq = RadiusSequence.power_law(alpha, 2)
        e1 = bt_index_estimate(block_counts(seq, HALF, 30))
        e2 = bt_index_estimate(block_counts(seq, HALF, 60))
        assert abs(e1 - e2) < 0.05


class TestConditionC:
    def test_power_law_holds(self):
        table = block_counts(RadiusSequence.power_law("0.4", 2), HALF, 40)
        res = condition_c_check(table, 0.4, 0.1)
        assert res.holds_on_prefix
        assert res.witness[-1] == 40

    def test_geometric_gaps_fail(self):
        prof = {k: (2 ** (k // 2) if k in (2, 4, 8, 16, 32) else 1) for k in range(1, 41)}
        table = block_counts(RadiusSequence.block_profile(prof, 2), HALF, 40)
        res = condition_c_check(table, 0.5, 0.1)
        assert not res.holds_on_prefix
        assert res.witness == [2, 4, 8, 16, 32]

    def test_dense_from_five(self):
        prof = {k: 2 ** (k // 2) if k % 2 == 0 else round(2 ** (0.5 * k))
                for k in range(5, 41)}
        table = block_counts(RadiusSequence.block_profile(prof, 2), HALF, 40)
        res = condition_c_check(table, 0.5, 0.1)
        assert res.holds_on_prefix
        assert res.witness == list(range(5, 41))

    def test_empty_witness(self):
        table = block_counts(RadiusSequence.power_law("0.4", 2), HALF, 40)
        res = condition_c_check(table, 0.9, 0.05)
        assert res.witness == [] and not res.holds_on_prefix


class TestSparse:
    def _table(self, n, k=10):
        return block_counts(RadiusSequence.block_profile({k: n}, 2), HALF, k)

    def test_hundred_with_gap_ten(self):
        t = sparse_indices(self._table(100), 1)
        sel = list(t.sparse(10))
        assert t.m(10) == 10 and len(sel) == 10
        assert all(b - a == 10 for a, b in zip(sel, sel[1:]))

    def test_seven_with_gap_ten(self):
        assert sparse_indices(self._table(7), 1).m(10) == 1

    @given(st.integers(1, 500), st.integers(3, 30), st.integers(1, 4))
    def test_count_formula_for_integer_gaps(self, n, k, c):
        t = sparse_indices(self._table(n, k), c)
        assert t.m(k) == math.ceil(n / (c * k))

    @given(st.integers(1, 500), st.integers(3, 30), st.floats(0.05, 3.0))
    def test_gaps_and_maximality(self, n, k, c):
        t = sparse_indices(self._table(n, k), c)
        sel = list(t.sparse(k))
        gap = math.ceil(c * k - 1e-12)
        assert t.m(k) == math.ceil(n / gap)
        assert all(b - a >= gap for a, b in zip(sel, sel[1:]))
        chosen = set(sel)
        for i in t.block_indices(k):
            if i not in chosen:
                assert any(abs(i - j) < gap for j in sel)

    def test_sparse_subset_of_block(self):
        t = sparse_indices(block_counts(RadiusSequence.power_law("0.5", 2), HALF, 20), 0.3)
        for k in range(1, 21):
            if t.n(k):
                assert set(t.sparse(k)) <= set(t.block_indices(k))

    def test_default_gap_constant(self):
        assert default_gap_constant(1.0, 0.6, 3) == pytest.approx(0.8 / math.log(3))
        with pytest.raises(ValueError):
            default_gap_constant(0.5, 0.6, 3)
        with pytest.raises(ValueError):
            sparse_indices(self._table(5), 0)
