"""Local asymptotic self-similarity (LASS) of paths and local times.

Around a center time t0, the rescaled path

    B_rho(u) = (B(t0 + rho*u) - B(t0)) / rho^H(t0),   u in [0, 1],

converges in law, as rho -> 0, to a fractional Brownian motion with the
frozen exponent H(t0).  The local time inherits this: the rescaled process

    Y_rho(t, x) = [L(t0 + rho*t, rho^H0 x + B(t0)) - L(t0, rho^H0 x + B(t0))]
                  / rho^(1 - H0)

converges in law to the fBm-H0 local time at level x.  This module builds
the rescaled objects (by windowed re-synthesis at resolution rho/grid_n, or
by slicing an existing path), compares laws with a permutation energy-
distance test, and evaluates the two occupation-functional limits: the
normalized occupation integral (1/lambda^(1-H0)) int_0^{lambda t} f(B_rho)
and its single-limit weighted version driven by a theta/psi scaling pair.

Comparisons are always law-to-law: reference fBm local times run through the
same estimator with the same level-bin policy, so discretization bias cancels
instead of masquerading as a distributional difference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigError, DomainError, GridRangeError
from .grids import TimeGrid
from .hurst import HurstFunction, check_condition_beta
from .localtime import LocalTimeField, PiecewiseConstant, local_time_field, occupation_integral
from .synth import HarmonizablePathGenerator, KernelPathGenerator, KernelQuadrature, SamplePath, gen_fbm

__all__ = [
    "ScalingPair",
    "RescaledFamily",
    "YCurve",
    "FddResult",
    "ConvergenceReport",
    "rescale_path",
    "rescale_ensemble",
    "rescale_slice",
    "rescaled_local_time",
    "fdd_distance",
    "verify_lass_localtime",
    "occupation_functional",
    "weighted_occupation_functional",
    "indicator_profile",
    "triangle_profile",
    "gaussian_profile",
    "PROFILE_LIBRARY",
]

_MIN_FDD_REPLICAS = 200


# ----------------------------------------------------------------------
# scaling pairs theta(rho) = rho^a, psi(rho) = rho^b
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingPair:
    """Exponent pair for the single-limit weighted occupation functional.

    theta(rho) = rho^a spreads the level argument, psi(rho) = rho^b
    normalizes the integral.  Admissibility: psi/theta = rho^(1-H0) exactly
    (b - a = 1 - h0) and theta must vanish faster than rho^H0 (a > h0).
    """

    a: float
    b: float
    h0: float

    def __post_init__(self):
        if not (0.0 < self.h0 < 1.0):
            raise ConfigError([("scaling.h0", f"H(t0) must lie in (0,1), got {self.h0}")])
        problems = []
        if abs((self.b - self.a) - (1.0 - self.h0)) > 1e-12:
            problems.append(("scaling", f"b - a = {self.b - self.a!r} must equal 1 - H(t0) = {1.0 - self.h0!r}"))
        if not self.a > self.h0:
            problems.append(("scaling.a",
                             f"theta(rho)/rho^H(t0) must vanish as rho -> 0, which requires "
                             f"a > H(t0); got a = {self.a!r} with H(t0) = {self.h0!r}"))
        if problems:
            raise ConfigError(problems)

    def theta(self, rho: float) -> float:
        return float(rho) ** self.a

    def psi(self, rho: float) -> float:
        return float(rho) ** self.b


# ----------------------------------------------------------------------
# rescaled paths
# ----------------------------------------------------------------------

def _resolution_floor(t0: float, grid_n: int) -> float:
    # Below ~10 ulp of the center time, the window times t0 + rho*u collapse
    # onto each other in float64 and the synthesis grid is meaningless.
    return 10.0 * grid_n * np.finfo(float).eps * max(1.0, t0)


def _unit_grid(grid_n: int) -> TimeGrid:
    return TimeGrid(t0=0.0, dt=1.0 / grid_n, n=grid_n + 1)


def _rescaled_meta(h: HurstFunction, t0: float, rho: float, h0: float,
                   representation: str, seed) -> dict:
    return {
        "representation": representation,
        "seed": repr(seed),
        "rescaled_from": {"t0": t0, "rho": rho},
        "hurst": {"kind": "rescaled", "value": h0, "mu": h.mu, "nu": h.nu},
    }


def _window_generator(h: HurstFunction, t0: float, rho: float, grid_n: int,
                      representation: str, kq: KernelQuadrature | None,
                      horizon: float = 1.0):
    window = TimeGrid(t0=t0, dt=rho * horizon / grid_n, n=grid_n + 1)
    if representation == "harmonizable":
        return HarmonizablePathGenerator(h, window)
    return KernelPathGenerator(h, window, kq=kq or KernelQuadrature(),
                               representation=representation)


def rescale_ensemble(h: HurstFunction, t0: float, rho: float, grid_n: int, seeds,
                     representation: str = "moving-average",
                     kq: KernelQuadrature | None = None,
                     horizon: float = 1.0) -> list[SamplePath]:
    """Replicas of the rescaled path B_rho on [0, horizon], freshly synthesized.

    One windowed generator (kernel rows built once) serves all replicas; each
    seed drives an independent noise stream.
    """
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    floor = _resolution_floor(t0, grid_n)
    if rho < floor:
        raise DomainError(
            f"rho = {rho:g} is below the synthesis resolution floor {floor:.3e} "
            f"for t0 = {t0:g}, grid_n = {grid_n}; refused")
    seeds = list(seeds)
    h0 = float(h.eval(t0))
    gen = _window_generator(h, t0, rho, grid_n, representation, kq, horizon)
    block = gen.sample_batch(seeds)
    block = (block - block[0]) / rho ** h0
    unit = TimeGrid(t0=0.0, dt=horizon / grid_n, n=grid_n + 1)
    out = []
    for j, s in enumerate(seeds):
        meta = _rescaled_meta(h, t0, rho, h0, representation, s)
        out.append(SamplePath(unit, np.ascontiguousarray(block[:, j]), meta))
    return out


def rescale_path(h: HurstFunction, t0: float, rho: float, grid_n: int, seed,
                 representation: str = "moving-average",
                 kq: KernelQuadrature | None = None) -> SamplePath:
    """One rescaled path u -> (B(t0 + rho*u) - B(t0)) / rho^H(t0) on [0, 1]."""
    return rescale_ensemble(h, t0, rho, grid_n, [seed], representation, kq)[0]


def rescale_slice(path: SamplePath, t0: float, rho: float,
                  h0: float | None = None) -> SamplePath:
    """Rescale an existing path over [t0, t0 + rho] to the unit interval.

    Unlike ``rescale_path`` this reuses the given samples (t0 and rho must be
    grid aligned), so the result is a deterministic transform of the input:
    the form needed by the change-of-variables identity between local times.
    """
    g = path.grid
    k0 = g.index_of(t0)
    k1 = g.index_of(t0 + rho)
    if k1 - k0 < 2:
        raise DomainError(f"window [{t0}, {t0 + rho}] spans fewer than 2 grid steps")
    if h0 is None:
        meta_h = path.meta.get("hurst", {})
        if "value" not in meta_h:
            raise DomainError("pass h0 explicitly: path metadata does not pin a Hurst value")
        h0 = float(meta_h["value"])
    vals = (path.values[k0:k1 + 1] - path.values[k0]) / rho ** h0
    n = k1 - k0 + 1
    meta = dict(path.meta)
    meta["rescaled_from"] = {"t0": t0, "rho": rho}
    meta["hurst"] = {"kind": "rescaled", "value": h0,
                     "mu": path.meta.get("hurst", {}).get("mu", h0),
                     "nu": path.meta.get("hurst", {}).get("nu", h0)}
    return SamplePath(TimeGrid(t0=0.0, dt=1.0 / (n - 1), n=n), vals, meta)


@dataclass
class RescaledFamily:
    """The rescaled objects of one center time over a decreasing rho ladder."""

    t0: float
    rhos: tuple
    h0: float
    paths: list = field(default_factory=list)

    def __post_init__(self):
        r = np.asarray(self.rhos, dtype=float)
        if np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise DomainError("rhos must be positive and strictly decreasing")
        self.rhos = tuple(float(v) for v in r)

    @classmethod
    def build(cls, h: HurstFunction, t0: float, rhos, grid_n: int = 1024, seed=0,
              representation: str = "moving-average") -> "RescaledFamily":
        h0 = float(h.eval(t0))
        fam = cls(t0=t0, rhos=tuple(rhos), h0=h0)
        for i, rho in enumerate(fam.rhos):
            fam.paths.append(rescale_path(h, t0, rho, grid_n, seed=(seed, i),
                                          representation=representation))
        return fam

    def local_time_curves(self, x: float = 0.0) -> list["YCurve"]:
        out = []
        for rho, p in zip(self.rhos, self.paths):
            fld = local_time_field(p)
            col = fld.column(x)
            out.append(YCurve(u=p.times(), values=col, level=x, rho=rho, x=x))
        return out


# ----------------------------------------------------------------------
# rescaled local time from an unrescaled field
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class YCurve:
    """Y_rho(. , x) on the unit time grid."""

    u: np.ndarray
    values: np.ndarray
    level: float
    rho: float
    x: float

    def at(self, t: float) -> float:
        if not (0.0 <= t <= self.u[-1] + 1e-12):
            raise GridRangeError(f"t = {t} outside the rescaled window [0, {self.u[-1]:g}]")
        return float(np.interp(t, self.u, self.values))


def rescaled_local_time(fld: LocalTimeField, path: SamplePath, t0: float, rho: float,
                        x: float, hurst: HurstFunction | None = None) -> YCurve:
    """Y_rho(t, x) computed from the unrescaled local-time field.

    The level is rho^H0 x + B(t0) in original coordinates; the curve is the
    local-time increment from t0, renormalized by rho^(1 - H0), on the unit
    time grid.
    """
    g = fld.grid
    if hurst is not None:
        h0 = float(hurst.eval(t0))
    else:
        meta_h = path.meta.get("hurst", {})
        if "value" not in meta_h:
            raise DomainError("pass a HurstFunction: path metadata does not pin one")
        h0 = float(meta_h["value"])
    level = rho ** h0 * x + path.value_at(t0)
    k0 = g.index_of(t0)
    k1 = g.index_of(t0 + rho)
    col = fld.column(level)
    y = (col[k0:k1 + 1] - col[k0]) / rho ** (1.0 - h0)
    u = (g.times()[k0:k1 + 1] - t0) / rho
    return YCurve(u=u, values=y, level=level, rho=rho, x=x)


# ----------------------------------------------------------------------
# energy-distance two-sample comparison
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class FddResult:
    distance: float
    p_value: float
    n_permutations: int
    n_a: int
    n_b: int


def _energy_from_blocks(aa_sum: float, bb_sum: float, total: float, na: int, nb: int) -> float:
    ab_sum = (total - aa_sum - bb_sum) / 2.0
    return 2.0 * ab_sum / (na * nb) - aa_sum / (na * na) - bb_sum / (nb * nb)


def fdd_distance(sample_a: np.ndarray, sample_b: np.ndarray,
                 n_permutations: int = 500, seed=0) -> FddResult:
    """Multivariate energy distance with a permutation p-value.

    Both samples are replica-by-coordinate matrices over the same coordinate
    set.  The statistic is 2 E|A - B| - E|A - A'| - E|B - B'| in Euclidean
    norm (V-statistic form, so identical samples give exactly zero); the
    p-value is (1 + #{permuted >= observed}) / (1 + n_permutations).
    """
    a = np.atleast_2d(np.asarray(sample_a, dtype=float))
    b = np.atleast_2d(np.asarray(sample_b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise DomainError(f"coordinate sets differ: {a.shape[1]} vs {b.shape[1]}")
    na, nb = a.shape[0], b.shape[0]
    if na < _MIN_FDD_REPLICAS or nb < _MIN_FDD_REPLICAS:
        raise DomainError(f"need at least {_MIN_FDD_REPLICAS} replicas per sample, got {na} and {nb}")
    pooled = np.vstack([a, b])
    dmat = cdist(pooled, pooled)
    total = float(dmat.sum())
    idx_a = np.arange(na)
    idx_b = np.arange(na, na + nb)
    aa = float(dmat[np.ix_(idx_a, idx_a)].sum())
    bb = float(dmat[np.ix_(idx_b, idx_b)].sum())
    observed = _energy_from_blocks(aa, bb, total, na, nb)
    rng = np.random.default_rng(seed)
    count = 0
    perm = np.arange(na + nb)
    for _ in range(n_permutations):
        rng.shuffle(perm)
        pa, pb = perm[:na], perm[na:]
        aa_p = float(dmat[np.ix_(pa, pa)].sum())
        bb_p = float(dmat[np.ix_(pb, pb)].sum())
        if _energy_from_blocks(aa_p, bb_p, total, na, nb) >= observed - 1e-15:
            count += 1
    p = (count + 1) / (n_permutations + 1)
    return FddResult(distance=float(observed), p_value=float(p),
                     n_permutations=n_permutations, n_a=na, n_b=nb)


# ----------------------------------------------------------------------
# convergence of rescaled local times
# ----------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    t0: float
    x: float
    h0: float
    rhos: tuple
    t_coords: tuple
    distances: list
    p_values: list
    n_replicas: int
    condition_beta_holds: bool
    threshold: float

    @property
    def final_p(self) -> float:
        return self.p_values[-1]

    @property
    def nonincreasing(self) -> bool:
        return all(b <= a + 1e-15 for a, b in zip(self.distances, self.distances[1:]))

    @property
    def verdict(self) -> str:
        ok = self.nonincreasing and self.final_p > self.threshold
        return "converging" if ok else "not-converging"

    def to_dict(self) -> dict:
        return {
            "t0": self.t0, "x": self.x, "h0": self.h0,
            "rhos": list(self.rhos), "t_coords": list(self.t_coords),
            "distances": list(self.distances), "p_values": list(self.p_values),
            "n_replicas": self.n_replicas,
            "condition_beta_holds": self.condition_beta_holds,
            "threshold": self.threshold,
            "final_p": self.final_p,
            "nonincreasing": self.nonincreasing,
            "verdict": self.verdict,
        }


def _localtime_coords(paths: list[SamplePath], x: float, t_coords,
                      dx: float | None = None) -> np.ndarray:
    t_idx = None
    out = np.empty((len(paths), len(t_coords)))
    for i, p in enumerate(paths):
        fld = local_time_field(p, dx=dx)
        if t_idx is None:
            t_idx = [p.grid.index_of(t) for t in t_coords]
        col = fld.column(x)
        out[i] = col[t_idx]
    return out


def verify_lass_localtime(h: HurstFunction, t0: float, x: float, rhos,
                          t_coords=(0.25, 0.5, 1.0), n_replicas: int = 500,
                          seed=0, representation: str = "moving-average",
                          grid_n: int = 1024, threshold: float = 0.01,
                          reference_h: float | None = None,
                          n_permutations: int = 500) -> ConvergenceReport:
    """Distance of law between Y_rho(t_j, x) and the fBm-H(t0) local time.

    For each rho on the (decreasing) ladder, replicas of the rescaled path
    are synthesized in the window [t0, t0 + rho], their local times read at
    the unit-grid coordinates t_j, and compared by permutation energy
    distance against fresh fBm-H(t0) local-time replicas produced by the
    identical estimator.  ``reference_h`` overrides the reference exponent
    (negative-control use).
    """
    rhos = tuple(float(r) for r in rhos)
    if any(b >= a for a, b in zip(rhos, rhos[1:])) or any(r <= 0 for r in rhos):
        raise DomainError("rhos must be positive and strictly decreasing")
    probe = np.linspace(t0, t0 + rhos[0], 257)
    beta_check = check_condition_beta(h, probe)
    h0 = float(h.eval(t0))
    ref_h = h0 if reference_h is None else float(reference_h)
    unit = _unit_grid(grid_n)
    # Both samples use the bin width implied by H(t0), even when the reference
    # exponent is overridden, so the estimator is identical on the two sides.
    bin_dx = unit.dt ** h0
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(3 * len(rhos))
    distances, p_values = [], []
    for i, rho in enumerate(rhos):
        ss_mbm, ss_ref, ss_perm = children[3 * i: 3 * i + 3]
        paths = rescale_ensemble(h, t0, rho, grid_n, ss_mbm.spawn(n_replicas), representation)
        sample_a = _localtime_coords(paths, x, t_coords, dx=bin_dx)
        ref_paths = [gen_fbm(ref_h, unit, s) for s in ss_ref.spawn(n_replicas)]
        sample_b = _localtime_coords(ref_paths, x, t_coords, dx=bin_dx)
        res = fdd_distance(sample_a, sample_b, n_permutations=n_permutations, seed=ss_perm)
        distances.append(res.distance)
        p_values.append(res.p_value)
    return ConvergenceReport(t0=t0, x=x, h0=h0, rhos=rhos, t_coords=tuple(t_coords),
                             distances=distances, p_values=p_values,
                             n_replicas=n_replicas,
                             condition_beta_holds=bool(beta_check.holds),
                             threshold=threshold)


# ----------------------------------------------------------------------
# occupation functionals
# ----------------------------------------------------------------------

def indicator_profile(a: float = -1.0, b: float = 1.0, height: float = 1.0) -> PiecewiseConstant:
    return PiecewiseConstant.indicator(a, b, height)


def triangle_profile(center: float = 0.0, half_width: float = 1.0, height: float = 1.0,
                     n_cells: int = 256) -> PiecewiseConstant:
    """Tent function rendered to a piecewise-constant profile (cell midpoints)."""
    if half_width <= 0 or n_cells < 2:
        raise DomainError("triangle profile needs positive half_width and >= 2 cells")
    edges = np.linspace(center - half_width, center + half_width, n_cells + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    vals = height * (1.0 - np.abs(mids - center) / half_width)
    return PiecewiseConstant(edges=edges, values=vals)


def gaussian_profile(sigma: float = 1.0, radius: float = 3.0, height: float = 1.0,
                     n_cells: int = 512) -> PiecewiseConstant:
    """Truncated Gaussian bump rendered to a piecewise-constant profile."""
    if sigma <= 0 or radius <= 0 or n_cells < 2:
        raise DomainError("gaussian profile needs positive sigma, radius and >= 2 cells")
    edges = np.linspace(-radius * sigma, radius * sigma, n_cells + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    vals = height * np.exp(-0.5 * (mids / sigma) ** 2)
    return PiecewiseConstant(edges=edges, values=vals)


PROFILE_LIBRARY = {
    "indicator": indicator_profile,
    "triangle": triangle_profile,
    "gaussian": gaussian_profile,
}


def _check_profile(f: PiecewiseConstant) -> None:
    if not isinstance(f, PiecewiseConstant):
        raise DomainError("f must come from the closed profile library (piecewise constant, compact support)")
    if abs(f.total_integral()) < 1e-300:
        raise DomainError("profile must have nonzero integral")


def occupation_functional(f: PiecewiseConstant, h: HurstFunction, t0: float, rho: float,
                          lam: float, t: float, seeds, representation: str = "moving-average",
                          grid_n: int = 1024, kq: KernelQuadrature | None = None) -> np.ndarray:
    """Replicas of (1/lambda^(1-H0)) int_0^{lambda t} f(B_rho(s)) ds.

    The rescaled path is synthesized on [0, lambda*t] directly (grid_n points
    per unit time), and the integral is evaluated exactly on the linear
    interpolant, so the only approximations are path synthesis and the
    profile's own rendering.
    """
    _check_profile(f)
    if lam < 1.0:
        raise DomainError(f"lambda must be >= 1, got {lam}")
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    horizon = lam * t
    h0 = float(h.eval(t0))
    n_cells = max(2, int(round(grid_n * horizon)))
    paths = rescale_ensemble(h, t0, rho, n_cells, list(seeds), representation, kq,
                             horizon=horizon)
    out = np.empty(len(paths))
    for i, p in enumerate(paths):
        out[i] = occupation_integral(p, f, horizon) / lam ** (1.0 - h0)
    return out


def weighted_occupation_functional(f: PiecewiseConstant, h: HurstFunction, t0: float,
                                   rho: float, y: float, scaling: ScalingPair, t: float,
                                   seeds, representation: str = "moving-average",
                                   grid_n: int = 1024, xi: float | None = None,
                                   kq: KernelQuadrature | None = None) -> np.ndarray:
    """Replicas of (1/psi(rho)) int_{t0}^{t0+rho t} f((B(s) - B(t0) - rho^H0 y)/theta(rho)) ds.

    Substituting s = t0 + rho u turns this into an exact occupation integral
    of the rescaled path against the shifted/scaled profile
    g(v) = f((v - y) / rho^(a - H0)), multiplied by rho / psi(rho).
    """
    _check_profile(f)
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    h0 = float(h.eval(t0))
    if abs(scaling.h0 - h0) > 1e-9:
        raise ConfigError([("scaling.h0", f"pair declares H(t0) = {scaling.h0!r} but H({t0:g}) = {h0!r}")])
    sup_h = h.sup_inf(t0, t0 + rho * t)[0]
    xi_cap = 1.0 / (2.0 * sup_h) - 0.5
    if xi is not None and not (0.0 < xi < xi_cap):
        raise ConfigError([("xi", f"xi = {xi!r} outside the admissible range (0, {xi_cap:g}) "
                                  f"set by sup H = {sup_h:g} over the window")])
    n_cells = max(2, int(round(grid_n * t)))
    paths = rescale_ensemble(h, t0, rho, n_cells, list(seeds), representation, kq,
                             horizon=t)
    width = rho ** (scaling.a - h0)
    g = f.shifted_scaled(shift=y, scale=width)
    factor = rho / scaling.psi(rho)
    out = np.empty(len(paths))
    for i, p in enumerate(paths):
        out[i] = factor * occupation_integral(p, g, t)
    return out
