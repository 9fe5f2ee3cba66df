import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from peakfit.errors import GridError, PeakfitError
from peakfit.grid import UniformGrid, build_grid, default_grid, default_grid_size, linear_bin


class TestBuildGrid:
    def test_exact_span(self):
        g = build_grid([0.0, 10.0], 11)
        assert g.x0 == 0.0 and g.delta == 1.0

    def test_padding_fraction(self):
        g = build_grid([0.0, 10.0], 101, padding_fraction=0.1)
        assert g.x0 == pytest.approx(-1.0, abs=1e-12)
        assert g.delta == pytest.approx(0.12, abs=1e-12)

    def test_bandwidth_padding(self):
        g = build_grid([0.0, 10.0], 11, h_pad=0.5)
        assert g.x0 == pytest.approx(-1.5) and g.x_last == pytest.approx(11.5)

    def test_degenerate(self):
        with pytest.raises(GridError, match="degenerate grid"):
            build_grid([5.0, 5.0], 16)

    def test_nodes(self):
        g = UniformGrid(x0=-2.0, delta=0.5, m=9)
        assert np.allclose(g.nodes, -2.0 + 0.5 * np.arange(9))
        assert g.node(4) == 0.0

    def test_default_size_rule(self):
        # smallest power of two >= 1024 with delta <= h / 10
        m = default_grid_size(span=1000.0, h=0.1)
        assert m & (m - 1) == 0 and m >= 1024
        assert 1000.0 / (m - 1) <= 0.01 < 1000.0 / (m // 2 - 1)
        assert default_grid_size(span=1.0, h=1.0) == 1024

    def test_default_grid_covers_with_padding(self, rng):
        y = rng.normal(size=200)
        g = default_grid(y, h=0.3)
        assert g.x0 < y.min() - 0.9 and g.x_last > y.max() + 0.9


class TestLinearBin:
    grid = UniformGrid(x0=0.0, delta=0.5, m=8)

    def test_point_on_node(self):
        c = linear_bin([1.0], [1.0], self.grid)
        assert c[2] == 1.0 and np.count_nonzero(c) == 1

    def test_quarter_split(self):
        c = linear_bin([2.25 * 0.5], [1.0], self.grid)
        assert c[2] == pytest.approx(0.75) and c[3] == pytest.approx(0.25)
        assert np.count_nonzero(c) == 2

    def test_two_half_points(self):
        c = linear_bin([0.25, 0.75], [0.5, 0.5], self.grid)
        assert np.allclose(c, [0.25, 0.5, 0.25, 0, 0, 0, 0, 0])

    def test_last_node(self):
        c = linear_bin([self.grid.x_last], [1.0], self.grid)
        assert c[-1] == 1.0 and c.sum() == 1.0

    def test_off_grid_names_index(self):
        with pytest.raises(GridError, match=r"point off grid \(index 1\)"):
            linear_bin([1.0, 3.6], [0.5, 0.5], self.grid)

    def test_negative_weight(self):
        with pytest.raises(PeakfitError, match="index 0"):
            linear_bin([1.0, 2.0], [-0.5, 1.5], self.grid)


points = arrays(np.float64, st.integers(1, 200), elements=st.floats(-50, 50, allow_nan=False))


@given(points, st.integers(2, 600), st.integers(0, 2**31 - 1))
@settings(max_examples=200, deadline=None)
def test_mass_and_first_moment(y, m, seed):
    w = np.random.default_rng(seed).random(y.size) + 1e-3
    w /= w.sum()
    span = max(float(np.ptp(y)), 1e-3)
    g = UniformGrid(float(y.min()) - 0.1 * span, 1.2 * span / (m - 1), m)
    c = linear_bin(y, w, g)
    assert np.all(c >= 0)
    assert abs(c.sum() - w.sum()) <= 1e-12
    assert abs(np.dot(c, g.nodes) - np.dot(w, y)) <= 1e-10 * max(1.0, np.abs(y).max())


@given(st.floats(0, 1), st.integers(2, 50))
def test_locality(frac, m):
    g = UniformGrid(0.0, 1.0, m)
    c = linear_bin([frac * (m - 1)], [1.0], g)
    nz = np.flatnonzero(c)
    assert 1 <= nz.size <= 2
    if nz.size == 2:
        assert nz[1] - nz[0] == 1
