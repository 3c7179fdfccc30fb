"""Hurst functions: construction, range arithmetic, Hoelder condition."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbm_lab.errors import DomainError
from mbm_lab.hurst import HurstFunction, check_condition_beta


class TestConstruction:
    def test_constant(self):
        h = HurstFunction.constant(0.6)
        assert h.eval(0.0) == 0.6
        assert h.eval(123.0) == 0.6
        assert (h.mu, h.nu) == (0.6, 0.6)

    def test_range_bounds_enforced(self):
        for bad in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(DomainError):
                HurstFunction.constant(bad)

    def test_linear(self):
        h = HurstFunction.linear(0.3, 0.7, t_end=2.0)
        assert h.eval(0.0) == pytest.approx(0.3)
        assert h.eval(1.0) == pytest.approx(0.5)
        assert h.eval(2.0) == pytest.approx(0.7)
        # clamped beyond t_end
        assert h.eval(5.0) == pytest.approx(0.7)
        assert (h.mu, h.nu) == (pytest.approx(0.3), pytest.approx(0.7))

    def test_sinusoidal_range(self):
        h = HurstFunction.sinusoidal(0.5, 0.25, 6.0, -3.6, beta=1.0)
        assert (h.mu, h.nu) == (pytest.approx(0.25), pytest.approx(0.75))
        # beta = 1 auto-declares the Lipschitz constant |amplitude * omega|
        assert h.holder_constant == pytest.approx(1.5)

    def test_piecewise_linear(self):
        h = HurstFunction.piecewise_linear([0.0, 0.5, 1.0], [0.3, 0.7, 0.4])
        assert h.eval(0.25) == pytest.approx(0.5)
        assert h.eval(0.75) == pytest.approx(0.55)

    def test_user_table_interpolates(self):
        h = HurstFunction.user_table([0.0, 1.0], [0.4, 0.6])
        assert h.eval(0.5) == pytest.approx(0.5)

    def test_roundtrip_dict(self):
        h = HurstFunction.sinusoidal(0.5, 0.2, 3.0, 0.7, beta=0.9,
                                     holder_constant=2.0)
        h2 = HurstFunction.from_dict(h.to_dict())
        ts = np.linspace(0, 2, 64)
        assert np.allclose(h.eval(ts), h2.eval(ts))
        assert h2.beta == h.beta and h2.holder_constant == h.holder_constant

    def test_from_dict_unknown_kind(self):
        with pytest.raises(DomainError):
            HurstFunction.from_dict({"kind": "quadratic", "value": 0.5})

    def test_from_dict_missing_param(self):
        with pytest.raises(DomainError):
            HurstFunction.from_dict({"kind": "sinusoidal", "center": 0.5})


class TestSupInf:
    def test_constant_window(self):
        h = HurstFunction.constant(0.42)
        assert h.sup_inf(0.0, 10.0) == (0.42, 0.42)

    def test_sinusoidal_exact_extrema(self):
        # window containing a peak of the sine: sup must be the true extremum,
        # not a grid maximum
        h = HurstFunction.sinusoidal(0.5, 0.2, 2 * np.pi, 0.0)
        sup, inf = h.sup_inf(0.0, 1.0)
        assert sup == pytest.approx(0.7, abs=1e-12)
        assert inf == pytest.approx(0.3, abs=1e-12)

    def test_sinusoidal_window_without_extremum(self):
        h = HurstFunction.sinusoidal(0.5, 0.2, 2 * np.pi, 0.0)
        sup, inf = h.sup_inf(0.05, 0.2)  # increasing branch only
        assert sup == pytest.approx(float(h.eval(0.2)))
        assert inf == pytest.approx(float(h.eval(0.05)))

    @given(st.floats(0.0, 3.0), st.floats(0.01, 2.0))
    def test_sup_inf_brackets_grid_values(self, a, width):
        h = HurstFunction.sinusoidal(0.5, 0.2, 5.0, 1.3)
        sup, inf = h.sup_inf(a, a + width)
        ts = np.linspace(a, a + width, 257)
        vals = h.eval(ts)
        assert sup >= vals.max() - 1e-12
        assert inf <= vals.min() + 1e-12


class TestConditionBeta:
    def test_requires_declaration(self):
        h = HurstFunction.sinusoidal(0.5, 0.2, 3.0, 0.0)  # no beta
        with pytest.raises(DomainError):
            check_condition_beta(h, np.linspace(0, 1, 32))

    def test_holds_for_lipschitz_sine(self):
        h = HurstFunction.sinusoidal(0.5, 0.2, 3.0, 0.0, beta=1.0)
        res = check_condition_beta(h, np.linspace(0, 1, 64))
        assert res.holds
        assert res.worst_ratio <= h.holder_constant * (1 + 1e-9)

    def test_rejected_when_nu_reaches_beta(self):
        # sup H = 0.75 with declared beta = 0.7 < nu is refused outright
        with pytest.raises(DomainError):
            HurstFunction.sinusoidal(0.5, 0.25, 1.0, 0.0, beta=0.7,
                                     holder_constant=10.0)

    def test_fails_for_undersized_constant(self):
        h = HurstFunction.sinusoidal(0.5, 0.2, 3.0, 0.0, beta=1.0,
                                     holder_constant=1e-3)
        res = check_condition_beta(h, np.linspace(0, 1, 64))
        assert not res.holds
