import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgeboot.rearrange import Curve, CurveError, clip01, is_nondecreasing, rearrange_increasing


def curve(values):
    return Curve.make(range(len(values)), values)


class TestRearrange:
    def test_sorting(self):
        c = rearrange_increasing(curve([0.1, 0.3, 0.2]))
        assert c.values == (0.1, 0.2, 0.3)

    def test_fixed_point(self):
        c = curve([0.0, 0.25, 0.5, 1.0])
        assert rearrange_increasing(c) == c

    def test_grid_preserved(self):
        c = Curve.make([-1.0, 0.0, 2.5], [3.0, 1.0, 2.0])
        out = rearrange_increasing(c)
        assert out.grid == c.grid


class TestClip:
    def test_examples(self):
        assert clip01(curve([-0.01, 0.5, 1.02])).values == (0.0, 0.5, 1.0)

    def test_already_inside(self):
        c = curve([0.2, 0.4])
        assert clip01(c) == c


class TestValidation:
    def test_length_mismatch(self):
        with pytest.raises(CurveError):
            Curve((0.0, 1.0), (0.5,))

    def test_grid_must_increase(self):
        with pytest.raises(CurveError):
            Curve.make([0.0, 0.0, 1.0], [1, 2, 3])


_values = st.lists(st.floats(-0.5, 1.5, allow_nan=False), min_size=1, max_size=40)


class TestProperties:
    @given(_values)
    @settings(max_examples=150, deadline=None)
    def test_multiset_preserved(self, values):
        out = rearrange_increasing(curve(values))
        assert sorted(out.values) == sorted(values)
        assert is_nondecreasing(out.values)

    @given(_values)
    @settings(max_examples=150, deadline=None)
    def test_idempotent(self, values):
        once = rearrange_increasing(curve(values))
        assert rearrange_increasing(once) == once

    @given(_values)
    @settings(max_examples=150, deadline=None)
    def test_commutes_with_clip(self, values):
        c = curve(values)
        assert clip01(rearrange_increasing(c)) == rearrange_increasing(clip01(c))

    @given(_values)
    @settings(max_examples=150, deadline=None)
    def test_matches_kth_smallest_construction(self, values):
        out = rearrange_increasing(curve(values))
        brute = tuple(sorted(values)[k] for k in range(len(values)))
        assert out.values == brute

    @given(_values, st.randoms(use_true_random=False))
    @settings(max_examples=150, deadline=None)
    def test_never_farther_from_monotone_targets(self, values, rnd):
        # Hardy-Littlewood-Polya: rearrangement is a contraction toward any
        # nondecreasing target on the same grid
        target = sorted(rnd.uniform(-0.5, 1.5) for _ in values)
        original = np.asarray(values)
        rearranged = np.asarray(rearrange_increasing(curve(values)).values)
        t = np.asarray(target)
        assert np.sum((rearranged - t) ** 2) <= np.sum((original - t) ** 2) + 1e-12
