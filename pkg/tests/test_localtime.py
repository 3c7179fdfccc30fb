"""Occupation measures, local-time fields, and their closed-form oracles."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mbm_lab.errors import DomainError, GridRangeError
from mbm_lab.grids import TimeGrid, XGrid
from mbm_lab.localtime import (
    Ensemble,
    LocalTimeField,
    PiecewiseConstant,
    default_dx,
    dirichlet_integral,
    local_time_field,
    local_time_increment,
    local_time_moment,
    occupation_integral,
    occupation_series,
)
from mbm_lab.synth import SamplePath, gen_fbm

SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))


def _ramp_path(n=65, slope=1.0):
    g = TimeGrid(0.0, 1.0 / (n - 1), n)
    return SamplePath(g, slope * g.times(), {"hurst": {"value": 0.5}})


class TestPiecewiseConstant:
    def test_call_and_tails(self):
        f = PiecewiseConstant([0.0, 1.0, 2.0], [3.0, 5.0], left=-1.0, right=7.0)
        assert f(-0.5) == -1.0
        assert f(0.0) == 3.0
        assert f(1.5) == 5.0
        assert f(2.0) == 7.0
        assert np.array_equal(f(np.array([0.5, 1.0])), [3.0, 5.0])

    def test_antiderivative_closed_form(self):
        f = PiecewiseConstant([0.0, 1.0, 2.0], [3.0, 5.0])
        assert f.antiderivative(0.0) == 0.0
        assert f.antiderivative(1.0) == pytest.approx(3.0)
        assert f.antiderivative(1.5) == pytest.approx(5.5)
        # zero tails: flat beyond the span
        assert f.antiderivative(3.0) == pytest.approx(8.0)
        assert f.antiderivative(-2.0) == pytest.approx(0.0)

    def test_total_integral(self):
        assert PiecewiseConstant.indicator(-1.0, 1.0, 0.5).total_integral() == pytest.approx(1.0)
        with pytest.raises(DomainError):
            PiecewiseConstant.constant(2.0).total_integral()

    def test_shifted_scaled(self):
        f = PiecewiseConstant.indicator(-1.0, 1.0)
        g = f.shifted_scaled(shift=3.0, scale=0.5)
        # g(v) = f((v - 3) / 0.5): support [2.5, 3.5]
        assert g(3.0) == 1.0 and g(2.4) == 0.0 and g(3.6) == 0.0
        assert g.total_integral() == pytest.approx(0.5 * f.total_integral())
        with pytest.raises(DomainError):
            f.shifted_scaled(0.0, 0.0)

    def test_invariants(self):
        with pytest.raises(DomainError):
            PiecewiseConstant([0.0, 1.0], [1.0, 2.0])
        with pytest.raises(DomainError):
            PiecewiseConstant([0.0, 0.0], [1.0])
        with pytest.raises(DomainError):
            PiecewiseConstant.indicator(1.0, 1.0)

    def test_from_bins_roundtrip(self):
        xg = XGrid(-1.0, 0.5, 4)
        f = PiecewiseConstant.from_bins(xg, [1.0, 2.0, 3.0, 4.0])
        assert np.array_equal(f(xg.centers()), [1.0, 2.0, 3.0, 4.0])


class TestOccupation:
    def test_constant_integrand_is_elapsed_time(self, bm_paths):
        p = bm_paths[0]
        f = PiecewiseConstant.constant(3.0)
        assert occupation_integral(p, f, 1.0) == pytest.approx(3.0, abs=1e-12)
        assert occupation_integral(p, f, 0.25) == pytest.approx(0.75, abs=1e-12)

    def test_ramp_band_occupation(self):
        # B(s) = s spends exactly b - a time units in [a, b) within [0, 1]
        p = _ramp_path()
        s = occupation_series(p, 0.25, 0.5)
        assert s[-1] == pytest.approx(0.25, abs=1e-12)
        assert s[0] == 0.0
        assert np.all(np.diff(s) >= 0)

    def test_series_matches_indicator_integral(self, bm_paths):
        p = bm_paths[1]
        s = occupation_series(p, -0.3, 0.4)
        f = PiecewiseConstant.indicator(-0.3, 0.4)
        assert s[-1] == pytest.approx(occupation_integral(p, f, 1.0), abs=1e-12)

    def test_fractional_endpoint(self, bm_paths):
        # t between grid points integrates the final partial step exactly
        p = bm_paths[0]
        f = PiecewiseConstant.constant(1.0)
        t = 0.5 + 0.25 * p.grid.dt
        assert occupation_integral(p, f, t) == pytest.approx(t, abs=1e-12)

    def test_horizon_checks(self, bm_paths):
        f = PiecewiseConstant.constant(1.0)
        with pytest.raises(GridRangeError):
            occupation_integral(bm_paths[0], f, 1.5)
        with pytest.raises(DomainError):
            occupation_series(bm_paths[0], 0.5, 0.5)


class TestLocalTimeField:
    def test_ramp_density_is_one(self):
        # uniform motion at unit speed: occupation density 1 on the swept range
        p = _ramp_path(n=257)
        fld = local_time_field(p, dx=1.0 / 16)
        j_mid = fld.x_grid.bin_of(0.5)
        assert fld.table[-1, j_mid] == pytest.approx(1.0, abs=1e-9)
        assert fld.value(1.0, 0.5) == pytest.approx(1.0, abs=1e-9)

    def test_mass_conservation(self, bm_paths):
        fld = local_time_field(bm_paths[0])
        for t in (0.25, 0.5, 1.0):
            assert fld.total_mass(t) == pytest.approx(t, abs=1e-9)

    def test_monotone_in_time(self, bm_paths):
        fld = local_time_field(bm_paths[2])
        assert np.all(np.diff(fld.table, axis=0) >= -1e-15)

    def test_occupation_identity_on_bands(self, bm_paths):
        # dx * sum of field columns over a bin band equals the exact
        # occupation integral of that band's indicator
        p = bm_paths[3]
        fld = local_time_field(p)
        xg = fld.x_grid
        j0, j1 = 2, xg.m - 3
        f = PiecewiseConstant.indicator(xg.edges()[j0], xg.edges()[j1])
        band = float(fld.table[-1, j0:j1].sum() * xg.dx)
        assert band == pytest.approx(occupation_integral(p, f, 1.0), abs=1e-10)

    def test_column_and_increment_profile(self, bm_paths):
        fld = local_time_field(bm_paths[4])
        col = fld.column(0.0)
        assert col.shape == (fld.grid.n,)
        assert col[0] == 0.0
        prof = fld.increment_profile(0.25, 0.75)
        j = fld.x_grid.bin_of(0.0)
        assert prof[j] == pytest.approx(col[fld.grid.index_of(0.75)]
                                        - col[fld.grid.index_of(0.25)])
        assert local_time_increment(fld, 0.25, 0.75, 0.0) == pytest.approx(prof[j])
        with pytest.raises(DomainError):
            fld.increment_profile(0.75, 0.25)

    def test_explicit_grid_no_extend(self, bm_paths):
        tight = XGrid(-0.01, 0.005, 5)
        with pytest.raises(GridRangeError, match="exits the level grid"):
            local_time_field(bm_paths[0], x_grid=tight, auto_extend=False)
        # with extension the same grid is widened to cover the path
        fld = local_time_field(bm_paths[0], x_grid=tight, auto_extend=True)
        assert fld.total_mass(1.0) == pytest.approx(1.0, abs=1e-9)

    def test_max_bins_guard(self, bm_paths):
        with pytest.raises(DomainError, match="max_bins"):
            local_time_field(bm_paths[0], x_grid=XGrid(-2.0, 1e-4, 40001))
        # the automatic grid widens dx instead of overflowing
        fld = local_time_field(bm_paths[0], dx=1e-7, max_bins=200)
        assert fld.x_grid.m <= 200

    def test_default_dx_reads_meta(self, bm_paths, mbm_paths):
        assert default_dx(bm_paths[0]) == pytest.approx(bm_paths[0].grid.dt ** 0.5)
        assert default_dx(mbm_paths[0]) == pytest.approx(mbm_paths[0].grid.dt ** 0.5)


class TestMoments:
    def test_level_zero_mean_brownian(self, bm_paths):
        est = local_time_moment(bm_paths, m=1, h=1.0, t=0.0, at=0.0)
        assert est.mode == "fixed-x=0"
        tol = 3 * est.raw_se + 0.5 * est.dx  # sampling + binning slack
        assert abs(est.raw_mean - SQRT_2_OVER_PI) < tol

    def test_quarter_horizon_scaling(self, bm_paths):
        # E L(h, 0) = sqrt(2 h / pi)
        est = local_time_moment(bm_paths, m=1, h=0.25, t=0.0, at=0.0)
        target = SQRT_2_OVER_PI * 0.5
        assert abs(est.raw_mean - target) < 3 * est.raw_se + 0.5 * est.dx

    def test_path_point_mode(self, bm_paths):
        est = local_time_moment(bm_paths, m=2, h=0.5, t=0.25)
        assert est.mode == "path-point"
        assert est.n_replicas == len(bm_paths)
        # normalization: raw / h^{m(1 - H_sup)}
        ratio = est.normalized_mean / est.raw_mean
        assert ratio == pytest.approx(0.5 ** (-2 * 0.5), rel=1e-12)

    def test_refusals(self, bm_paths):
        with pytest.raises(DomainError, match="replicas"):
            local_time_moment(bm_paths[:50], m=1, h=0.5, t=0.0)
        with pytest.raises(DomainError, match="1..6"):
            local_time_moment(bm_paths, m=7, h=0.5, t=0.0)
        with pytest.raises(DomainError, match="h > 0"):
            local_time_moment(bm_paths, m=1, h=0.0, t=0.0)
        with pytest.raises(GridRangeError):
            local_time_moment(bm_paths, m=1, h=0.5, t=1.0 / 3.0)

    def test_ensemble_container(self, bm_paths):
        ens = Ensemble(replicas=list(bm_paths), master_seed=101)
        assert len(ens) == len(bm_paths)
        est = local_time_moment(ens, m=1, h=1.0, t=0.0, at=0.0)
        assert est.n_replicas == len(bm_paths)
        with pytest.raises(DomainError):
            local_time_moment(Ensemble(replicas=[1, 2, 3]), m=1, h=0.5, t=0.0)


class TestDirichletIntegral:
    def test_zero_exponents_give_simplex_volume(self):
        assert dirichlet_integral([0.0, 0.0], 1.0) == pytest.approx(0.5)
        assert dirichlet_integral([0.0] * 3, 2.0) == pytest.approx(8.0 / 6.0)

    def test_single_square_root(self):
        # int_0^h s^{-1/2} ds = 2 sqrt(h)
        assert dirichlet_integral([0.5], 0.25) == pytest.approx(1.0)
        assert dirichlet_integral([0.5], 4.0) == pytest.approx(4.0)

    def test_refusals(self):
        with pytest.raises(DomainError):
            dirichlet_integral([0.5, 1.0], 1.0)
        with pytest.raises(DomainError):
            dirichlet_integral([0.5], 0.0)
        with pytest.raises(DomainError):
            dirichlet_integral([], 1.0)


# one fixed Brownian path for the property test; the step function varies
_PROP_PATH = gen_fbm(0.5, TimeGrid(0.0, 1.0 / 128, 129), seed=5)
_PROP_FIELD = local_time_field(_PROP_PATH, dx=0.1)
_PROP_M = _PROP_FIELD.x_grid.m


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=_PROP_M, max_size=_PROP_M))
def test_occupation_identity_any_step_function(heights):
    """Exactness of the splitting: for every bin-aligned step function f,
    int f(B(s)) ds equals dx * sum_j f_j L(t, x_j)."""
    f = PiecewiseConstant.from_bins(_PROP_FIELD.x_grid, heights)
    lhs = occupation_integral(_PROP_PATH, f, 1.0)
    rhs = float((_PROP_FIELD.table[-1] * np.asarray(heights)).sum() * _PROP_FIELD.x_grid.dx)
    assert lhs == pytest.approx(rhs, abs=1e-10)
