"""Kernel and spectral synthesis under time-varying Hurst functions."""
import warnings

import numpy as np
import pytest
from numpy.random import SeedSequence

from mbm_lab.errors import DomainError
from mbm_lab.grids import TimeGrid
from mbm_lab.hurst import HurstFunction
from mbm_lab.synth import (
    HarmonizablePathGenerator,
    HarmonizableSpectrum,
    KernelPathGenerator,
    KernelQuadrature,
    gen_mbm_harmonizable,
    gen_mbm_moving_average,
    gen_mbm_riemann_liouville,
    increment_variance_exact,
    kernel_increment_cov,
    verify_variance_bounds,
)


@pytest.fixture(scope="module")
def h_sin():
    return HurstFunction.sinusoidal(0.5, 0.25, 6.0, -3.6, beta=1.0)


class TestExactSecondMoments:
    def test_brownian_kernel_variance_is_exact(self):
        # at H = 1/2 both kernels collapse to the Brownian indicator, whose
        # cell integrals the graded lattice reproduces exactly
        h = HurstFunction.constant(0.5)
        for rep in ("moving-average", "riemann-liouville"):
            v = kernel_increment_cov(h, 0.0, [0.7], rep)[0, 0]
            assert v == pytest.approx(0.7, abs=1e-12)

    def test_quadrature_refinement_converges(self, h_sin):
        ref = increment_variance_exact(h_sin, 0.3, 0.9, kq=KernelQuadrature(q=16))
        errs = [abs(increment_variance_exact(h_sin, 0.3, 0.9, kq=KernelQuadrature(q=q)) - ref)
                for q in (1, 2, 4)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-2

    def test_covariance_matrix_psd(self, h_sin):
        cov = kernel_increment_cov(h_sin, 0.0, [0.2, 0.4, 0.6, 0.8])
        assert np.linalg.eigvalsh(cov).min() > 0

    def test_increment_cov_domain_checks(self, h_sin):
        with pytest.raises(DomainError):
            kernel_increment_cov(h_sin, 0.5, [0.4])
        with pytest.raises(DomainError):
            kernel_increment_cov(h_sin, -0.1, [0.4])
        with pytest.raises(DomainError):
            kernel_increment_cov(h_sin, 0.0, [0.4], representation="harmonizable")
        with pytest.raises(DomainError):
            increment_variance_exact(h_sin, 0.9, 0.3)


class TestConstantHurstReduction:
    def test_sample_variance_matches_quadrature(self):
        # constant H = 0.6: the sampled construction must reproduce its own
        # exact discretized variance (z-test, frozen seeds, R = 1000)
        h = HurstFunction.constant(0.6)
        grid = TimeGrid(0.0, 1.0 / 16, 17)
        gen = KernelPathGenerator(h, grid)
        batch = gen.sample_batch(SeedSequence(55).spawn(1000))
        se_rel = np.sqrt(2 / 999)
        for idx in (4, 16):
            t = float(grid.times()[idx])
            exact = kernel_increment_cov(h, 0.0, [t])[0, 0]
            z = (batch[idx].var(ddof=1) - exact) / (exact * se_rel)
            assert abs(z) < 3.0


class TestKernelGenerator:
    def test_batch_equals_single(self, h_sin):
        # identical seeds give identical replicas regardless of batch shape
        # (up to BLAS reassociation across batch widths, hence atol not
        # bitwise equality here; bitwise determinism is tested below)
        grid = TimeGrid(0.0, 1.0 / 64, 65)
        gen = KernelPathGenerator(h_sin, grid)
        s1, s2 = SeedSequence(9).spawn(2)
        batch = gen.sample_batch([s1, s2])
        assert np.allclose(batch[:, 0], gen.sample(s1).values, rtol=0, atol=1e-12)
        assert np.allclose(batch[:, 1], gen.sample(s2).values, rtol=0, atol=1e-12)

    def test_two_generators_agree(self, h_sin):
        grid = TimeGrid(0.0, 1.0 / 64, 65)
        a = KernelPathGenerator(h_sin, grid).sample(3)
        b = KernelPathGenerator(h_sin, grid).sample(3)
        assert np.array_equal(a.values, b.values)

    def test_rejects_unknown_representation(self, h_sin):
        with pytest.raises(DomainError):
            KernelPathGenerator(h_sin, TimeGrid(0.0, 0.25, 5), representation="spectral")

    def test_meta_records_recipe(self, h_sin):
        grid = TimeGrid(0.0, 1.0 / 64, 65)
        p = gen_mbm_riemann_liouville(h_sin, grid, seed=1)
        assert p.meta["representation"] == "riemann-liouville"
        assert p.meta["hurst"]["kind"] == "sinusoidal"
        assert p.meta["pinned_at_start"] is False

    def test_past_truncation_warning(self):
        # high Hurst and a short window make the neglected tail significant
        h = HurstFunction.constant(0.9)
        grid = TimeGrid(0.0, 0.25, 5)
        gen = KernelPathGenerator(h, grid, KernelQuadrature(t_past=0.5))
        with pytest.warns(RuntimeWarning, match="past-truncation"):
            p = gen.sample(0)
        assert p.meta["tail_flagged"] is True

    def test_default_truncation_not_flagged_for_moderate_range(self):
        # the bound decays like t_past^(2 nu - 2): at nu = 0.6 the default
        # window is comfortably below threshold (at nu = 0.75 it is not, and
        # the generator says so -- see the fixture ensembles' warnings)
        h = HurstFunction.sinusoidal(0.5, 0.1, 6.0, -3.6, beta=1.0)
        grid = TimeGrid(0.0, 1.0 / 64, 65)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            p = gen_mbm_moving_average(h, grid, seed=2)
        assert p.meta["tail_flagged"] is False

    def test_wide_range_default_is_flagged(self, h_sin):
        # honest advisory: sup H = 0.75 keeps ~1% of worst-case variance in
        # the truncated tail at the default window; statistics remain
        # calibrated (checked against exact references elsewhere) but the
        # meta must not hide it
        grid = TimeGrid(0.0, 1.0 / 64, 65)
        with pytest.warns(RuntimeWarning, match="past-truncation"):
            p = gen_mbm_moving_average(h_sin, grid, seed=2)
        assert p.meta["tail_flagged"] is True


class TestHarmonizable:
    def test_variance_identity(self, h_sin):
        # closed-form spectral sum equals the generic exact-variance entry
        spec = HarmonizableSpectrum(n_freq=1024)
        gen = HarmonizablePathGenerator(h_sin, TimeGrid(0.0, 1.0 / 64, 65), spec)
        va = gen.variance_at(0.5)
        ve = increment_variance_exact(h_sin, 0.0, 0.5, representation="harmonizable",
                                      spectrum=spec)
        assert va == pytest.approx(ve, rel=1e-9)

    def test_sample_variance_matches(self, h_sin):
        spec = HarmonizableSpectrum(n_freq=1024)
        gen = HarmonizablePathGenerator(h_sin, TimeGrid(0.0, 1.0 / 64, 65), spec)
        batch = gen.sample_batch(SeedSequence(66).spawn(600))
        target = gen.variance_at(0.5)
        z = (batch[32].var(ddof=1) - target) / (target * np.sqrt(2 / 599))
        assert abs(z) < 3.0

    def test_wrapper_meta(self, h_sin):
        p = gen_mbm_harmonizable(h_sin, TimeGrid(0.0, 1.0 / 64, 65),
                                 seed=4, spectrum=HarmonizableSpectrum(n_freq=256))
        assert p.meta["representation"] == "harmonizable"
        assert p.values[0] == 0.0  # the spectral field vanishes at t = 0


class TestVarianceBounds:
    @pytest.mark.parametrize("h", [
        HurstFunction.linear(0.35, 0.65, t_end=1.0),
        HurstFunction.sinusoidal(0.5, 0.25, 6.0, -3.6, beta=1.0),
    ], ids=["linear", "sinusoidal"])
    def test_bounds_hold(self, h):
        rep = verify_variance_bounds(h, n_pairs=12, n_tuples=12, seed=0)
        assert rep.ok
        assert rep.lower_violations == 0
        assert rep.det_violations == 0
        assert rep.min_lower_margin > 1.0
