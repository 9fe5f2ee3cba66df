import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from peakfit.errors import PeakfitError
from peakfit.simulate import (SETUPS, Family, MixtureSpec, Pcg64Stream, parse_mixture,
                              sample_mixture)


def test_standard_normal_moments():
    y = sample_mixture(MixtureSpec.gaussian((1.0, 0.0, 1.0)), 100_000, 1)
    assert abs(y.mean()) < 0.02
    assert abs(y.std() - 1) < 0.02


def test_component_fraction():
    _, lab = sample_mixture(SETUPS["separated_pair"], 100_000, 0, return_labels=True)
    assert abs(np.mean(lab == 0) - 0.6) < 0.005


def test_cauchy_median_and_quartiles():
    y = sample_mixture(MixtureSpec.cauchy((1.0, 2.0, 0.5)), 100_000, 3)
    q1, med, q3 = np.percentile(y, [25, 50, 75])
    assert abs(med - 2.0) < 0.02
    assert abs((q3 - q1) / 2 - 0.5) < 0.02


def test_bitwise_deterministic():
    a = sample_mixture(SETUPS["cauchy_pair"], 1000, 42)
    b = sample_mixture(SETUPS["cauchy_pair"], 1000, 42)
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != sample_mixture(SETUPS["cauchy_pair"], 1000, 43).tobytes()


def test_uniform_formula_matches_raw():
    raw = np.random.PCG64(11).random_raw(8)
    expected = [(int(x) >> 11) * 2.0**-53 for x in raw]
    assert Pcg64Stream(11).uniform(8).tolist() == expected


def test_first_draw_by_hand():
    u = Pcg64Stream(9).uniform(3)
    expected = math.sqrt(-2 * math.log1p(-u[1])) * math.cos(2 * math.pi * u[2])
    y = sample_mixture(MixtureSpec.gaussian((1.0, 0.0, 1.0)), 1, 9)
    assert y[0] == expected


def test_prefix_stable():
    # each draw consumes a fixed block of uniforms
    a = sample_mixture(SETUPS["separated_pair"], 10, 5)
    b = sample_mixture(SETUPS["separated_pair"], 20, 5)
    np.testing.assert_array_equal(a, b[:10])


def test_n_validated():
    with pytest.raises(PeakfitError):
        sample_mixture(SETUPS["separated_pair"], 0, 0)


class TestMixtureSpec:
    def test_weights_sum(self):
        with pytest.raises(PeakfitError, match="weights must sum to 1"):
            MixtureSpec.gaussian((0.5, 0, 1), (0.4, 1, 1))

    def test_scale_positive(self):
        with pytest.raises(PeakfitError, match="scales"):
            MixtureSpec.gaussian((1.0, 0, 0))

    def test_pdf_integrates(self):
        x = np.linspace(-200, 200, 400_001)
        for spec in SETUPS.values():
            mass = spec.pdf(x).sum() * (x[1] - x[0])
            tail = 0.02 if spec.components[0].family is Family.CAUCHY else 1e-9
            assert abs(mass - 1) < tail


class TestParse:
    def test_basic(self):
        spec = parse_mixture("0.6:N(10,1),0.4:N(15,1)")
        assert spec == SETUPS["separated_pair"]

    def test_whitespace_and_cauchy(self):
        spec = parse_mixture(" 0.5 : C( -1 , 2.5 ) ,\t0.5:N(1e1,.5) ")
        c0, c1 = spec.components
        assert (c0.family, c0.location, c0.scale) == (Family.CAUCHY, -1.0, 2.5)
        assert (c1.family, c1.location, c1.scale) == (Family.GAUSSIAN, 10.0, 0.5)

    @pytest.mark.parametrize("bad, pos", [("0.6:X(1,1)", 0), ("1.0:N(0,1);", 10), ("", 0),
                                          ("0.5:N(0,1),", 11)])
    def test_errors_report_position(self, bad, pos):
        with pytest.raises(PeakfitError, match=f"position {pos}.*weight:Family"):
            parse_mixture(bad)

    def test_weight_error(self):
        with pytest.raises(PeakfitError, match="weights must sum to 1"):
            parse_mixture("0.6:N(10,1),0.3:N(15,1)")

    @settings(max_examples=100)
    @given(st.lists(st.tuples(st.sampled_from("NC"), st.floats(-50, 50), st.floats(0.01, 20)),
                    min_size=1, max_size=4))
    def test_str_round_trip(self, comps):
        w = 1.0 / len(comps)
        text = ",".join(f"{w!r}:{f}({loc!r},{s!r})" for f, loc, s in comps)
        spec = parse_mixture(text)
        assert [(c.family.value, c.location, c.scale) for c in spec.components] == comps
