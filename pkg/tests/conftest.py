"""Shared fixtures: small deterministic ensembles reused across test modules.

Everything is seeded; session-scoped fixtures amortize synthesis cost.  The
sizes here are deliberately small -- statistical assertions in unit tests use
wide tolerances, and the full-size runs live in test_acceptance.py.
"""
import numpy as np
import pytest
from numpy.random import SeedSequence

from mbm_lab.grids import TimeGrid
from mbm_lab.hurst import HurstFunction
from mbm_lab.synth import KernelPathGenerator, KernelQuadrature, gen_fbm


@pytest.fixture(scope="session")
def unit_grid():
    return TimeGrid(0.0, 1.0 / 1024, 1025)


@pytest.fixture(scope="session")
def bm_paths(unit_grid):
    """200 Brownian paths on the unit grid (exact circulant synthesis)."""
    seeds = SeedSequence(101).spawn(200)
    return [gen_fbm(0.5, unit_grid, seed=s) for s in seeds]


@pytest.fixture(scope="session")
def fbm07_paths(unit_grid):
    seeds = SeedSequence(102).spawn(200)
    return [gen_fbm(0.7, unit_grid, seed=s) for s in seeds]


@pytest.fixture(scope="session")
def sinusoidal_hurst():
    """The workhorse Hurst function: H(0.6) = 0.5, range [0.25, 0.75]."""
    return HurstFunction.sinusoidal(center=0.5, amplitude=0.25, omega=6.0,
                                    phase=-3.6, beta=1.0)


@pytest.fixture(scope="session")
def mbm_paths(unit_grid, sinusoidal_hurst):
    """100 moving-average mBm paths on the unit grid."""
    gen = KernelPathGenerator(sinusoidal_hurst, unit_grid, KernelQuadrature())
    seeds = SeedSequence(103).spawn(100)
    return gen.paths_from_batch(gen.sample_batch(seeds), seeds)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
