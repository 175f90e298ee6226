from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from covsets.errors import InsufficientSamplesError, ResourceError
from covsets.process import (OrbitSource, cylinder_measure, mixing_diagnostic, orbit_csv,
                             orbit_point, preset_space)
from covsets.space import Cube, DigitSpace

CANTOR = DigitSpace.cantor()


def test_shift_by_one():
    src = OrbitSource.from_digits(CANTOR, [0, 2] * 10)
    p = orbit_point(src, 2, 4)
    assert p.digits == (2, 0, 2, 0)
    assert p.value == Fraction(2, 3) + Fraction(2, 27)


def test_first_point_is_seed_truncation():
    src = OrbitSource(CANTOR, seed=9)
    p = orbit_point(src, 1, 12)
    assert p.digits == tuple(int(d) for d in src.digits(12))


def test_shift_identity():
    src = OrbitSource(DigitSpace.full(5), seed=3)
    for n in (1, 7, 50):
        a, b = orbit_point(src, n, 8), orbit_point(src, n + 1, 8)
        assert a.digits[1:] == b.digits[:-1]


def test_reproducible_and_query_order_independent():
    a, b = OrbitSource(CANTOR, 5, 2), OrbitSource(CANTOR, 5, 2)
    late = orbit_point(a, 10000, 6)
    early = orbit_point(b, 3, 6)
    assert orbit_point(a, 3, 6) == early
    assert orbit_point(b, 10000, 6) == late
    assert OrbitSource(CANTOR, 5, 3).digits(50).tolist() != a.digits(50).tolist()


def test_numerators_match_points():
    src = OrbitSource(DigitSpace.full(3), seed=1)
    ns = np.array([1, 2, 17, 400])
    nums = src.numerators(ns, 10)
    for n, v in zip(ns, nums):
        assert Fraction(int(v), 3**10) == orbit_point(src, int(n), 10).value


def test_depth_cap():
    with pytest.raises(ResourceError):
        orbit_point(OrbitSource(CANTOR, 0), 1, 17)


def test_first_digit_uniform():
    counts = {0: 0, 2: 0}
    for seed in range(10000):
        counts[orbit_point(OrbitSource(CANTOR, seed), 5, 1).digits[0]] += 1
    sigma = np.sqrt(10000 * 0.25)
    for c in counts.values():
        assert abs(c - 5000) < 3 * sigma


def test_stationarity():
    space = DigitSpace.full(3)
    tables = []
    for n in (1, 10, 100):
        cells = np.zeros(9)
        for seed in range(3000):
            d = orbit_point(OrbitSource(space, 77, seed), n, 2).digits
            cells[3 * d[0] + d[1]] += 1
        tables.append(cells)
    for cells in tables:
        assert stats.chisquare(cells).pvalue > 0.01
    assert stats.chi2_contingency(np.array(tables)).pvalue > 0.01


class TestMixing:
    def test_independent_beyond_cylinder_depth(self):
        rows = mixing_diagnostic(CANTOR, Cube((0,), 3), Cube((2,), 3), [5], trials=4000)
        assert rows[0].within_noise

    def test_perfect_dependence_at_zero(self):
        A = Cube((0, 2), 3)
        rows = mixing_diagnostic(CANTOR, A, A, [0], trials=2000)
        assert rows[0].estimate == pytest.approx(1 - 0.25)

    def test_measure_recovered(self):
        A = Cube((2, 0), 3)
        assert cylinder_measure(CANTOR, A) == 0.25
        assert cylinder_measure(CANTOR, Cube((1,), 3)) == 0.0
        freq = np.mean([orbit_point(OrbitSource(CANTOR, 1, t), 1, 2).digits == (2, 0)
                        for t in range(4000)])
        assert abs(freq - 0.25) < 3 * np.sqrt(0.25 * 0.75 / 4000)

    def test_needs_samples(self):
        with pytest.raises(InsufficientSamplesError):
            mixing_diagnostic(CANTOR, Cube((0,), 3), Cube((0,), 3), [1], trials=10)

    def test_unobservable_condition(self):
        with pytest.raises(InsufficientSamplesError):
            mixing_diagnostic(CANTOR, Cube((0,), 3), Cube((1,), 3), [1], trials=1000)


def test_presets_and_csv():
    assert preset_space("base2") == DigitSpace.full(2)
    assert preset_space("base3-cantor") == CANTOR
    assert preset_space("base-m-full", 5) == DigitSpace.full(5)
    with pytest.raises(ValueError):
        preset_space("gauss")
    text = orbit_csv(OrbitSource(CANTOR, 4), 5, 6)
    lines = text.splitlines()
    assert lines[0].startswith("# schema") and lines[1] == "n,numerator,denominator,value"
    assert len(lines) == 7
