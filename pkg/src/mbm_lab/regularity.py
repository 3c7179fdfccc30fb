"""Path and local-time regularity statistics.

Almost-sure regularity theorems are probed through scale ladders: a ratio
statistic is evaluated on a geometric ladder of window sizes delta, and
running extrema along the ladder stand in for limsup/liminf.  The statistics
and their normalizers:

* local modulus (of the local time at a level, or at the moving path point):
    [L(t + delta, x) - L(t, x)] / [ delta^(1 - H(t)) (log log 1/delta)^H(t) ]
* uniform modulus over a window, at a fixed level:
    sup_k |L(t_k + delta, x) - L(t_k, x)|
        / [ delta^(1 - H_sup) (log 1/delta)^H_sup ]
* Chung-type law at a point (liminf proxy, running minimum):
    sup_{s in [t0, t0+delta]} |B(s) - B(t0)| / (delta / log log 1/delta)^H(t0)
* law of the iterated logarithm at a point (limsup proxy, running maximum):
    sup_{s in [t0, t0+delta]} |B(s) - B(t0)| / [ delta^H(t0) (log log 1/delta)^(1/2) ]
* space modulus of the local time over a fixed time window:
    |L(I, x) - L(I, y)| / |x - y|^alpha

Ratios are reported as curves; nothing asserts the almost-sure constants
directly.  Constants enter only through ``v_constant`` (the small-scale
standard deviation constant of each representation) and through bracket
checks performed by callers.  ``exponent_shift`` adds to the power of delta
in the denominator, the sensitivity knob used to confirm that the stated
exponents, and only they, keep the curves bounded.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .errors import DomainError
from .grids import TimeGrid
from .hurst import HurstFunction
from .localtime import Ensemble, LocalTimeField, local_time_field, occupation_series
from .synth import SamplePath

__all__ = [
    "ModulusCurve",
    "HolderEstimate",
    "RangeCheck",
    "FittedConstant",
    "fitted_constant",
    "delta_ladder",
    "local_modulus_statistic",
    "uniform_modulus_statistic",
    "chung_statistic",
    "lil_statistic",
    "v_constant",
    "holder_exponent_estimate",
    "range_inequality_check",
    "space_modulus_statistic",
]

# Windows below 3 grid steps are refused: a sup over fewer points is not a
# meaningful oscillation.
_MIN_STEPS = 3


@dataclass
class ModulusCurve:
    """Ratio curves on a scale ladder: one row per replica.

    ``running`` carries the running extremum along the ladder (minimum for
    liminf-type statistics, maximum for limsup-type) when the statistic has
    one; ``envelope`` is the across-replica maximum per scale.
    """

    deltas: np.ndarray
    values: np.ndarray
    normalizer: str
    running: np.ndarray | None = None

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))

    @property
    def envelope(self) -> np.ndarray:
        return self.values.max(axis=0)

    @property
    def n_replicas(self) -> int:
        return self.values.shape[0]

    def running_end(self) -> np.ndarray:
        """Final running extremum of each replica (the limit proxy)."""
        if self.running is None:
            raise DomainError("this statistic has no running extremum")
        return self.running[:, -1]

    def ensemble_median(self) -> np.ndarray:
        """Per-scale median ratio across replicas.

        Bracket checks of liminf/limsup constants are made on the extremum of
        this curve: per-replica running extrema over a dense ladder are pulled
        away from the constant by excursions at intermediate scales that only
        leave the picture asymptotically, while the median ratio sits near the
        constant at every scale once the iterated logarithm exceeds one.
        """
        return np.median(self.values, axis=0)


@dataclass(frozen=True)
class HolderEstimate:
    alpha: float
    ci_low: float
    ci_high: float
    r_squared: float
    n_scales: int
    n_replicas: int
    per_replica: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class RangeCheck:
    delta: float
    sup_local_time: float
    oscillation: float
    rhs: float
    slack: float
    holds: bool


def delta_ladder(delta_max: float = 1e-1, delta_min: float = 1e-4,
                 ratio: float = 2.0 ** -0.25, dt: float | None = None) -> np.ndarray:
    """Geometric scale ladder from delta_max down to max(delta_min, 10*dt)."""
    if dt is not None:
        delta_min = max(delta_min, 10.0 * dt)
    if not (0 < delta_min < delta_max):
        raise DomainError("need 0 < delta_min < delta_max (after the 10*dt floor)")
    n = int(np.floor(np.log(delta_min / delta_max) / np.log(ratio))) + 1
    ladder = delta_max * ratio ** np.arange(n)
    return ladder


def _as_list(objs, want):
    if isinstance(objs, Ensemble):
        objs = objs.replicas
    if isinstance(objs, want):
        objs = [objs]
    objs = list(objs)
    if not objs or not all(isinstance(o, want) for o in objs):
        raise DomainError(f"expected {want.__name__} replicas")
    return objs


def _check_deltas(deltas, dt: float, available: float) -> np.ndarray:
    d = np.asarray(deltas, dtype=float)
    if np.any(np.diff(d) >= 0):
        raise DomainError("deltas must be strictly decreasing")
    if d[0] >= 0.35:
        raise DomainError("deltas must stay below 0.35 so iterated logarithms are positive")
    if d[-1] < _MIN_STEPS * dt - 1e-12:
        raise DomainError(
            f"smallest delta {d[-1]:g} is below {_MIN_STEPS} grid steps ({_MIN_STEPS * dt:g}); refused")
    if d[0] > available + 1e-12:
        raise DomainError(f"largest delta {d[0]:g} exceeds the available window {available:g}")
    return d


def _hurst_at(paths_meta: dict, hurst: HurstFunction | None, t: float) -> float:
    if hurst is not None:
        return float(hurst.eval(t))
    meta_h = paths_meta.get("hurst", {})
    if "value" in meta_h:
        return float(meta_h["value"])
    raise DomainError("pass a HurstFunction: the path metadata does not pin one")


# ----------------------------------------------------------------------
# local-time moduli
# ----------------------------------------------------------------------

def local_modulus_statistic(replicas, t: float, deltas, mode="path-point",
                            hurst: HurstFunction | None = None, dx: float | None = None,
                            exponent_shift: float = 0.0) -> ModulusCurve:
    """Local-time increment ratios at a level, on a decreasing delta ladder.

    mode is "path-point" (level follows B(t) replica by replica) or a fixed
    level.  The denominator is delta^(1 - H(t) + exponent_shift) times
    (log log 1/delta)^H(t).  Replicas are sampled paths (local time read from
    a centered level band of width dx) or, for a fixed level only, local-time
    fields (level bin of the field).
    """
    if isinstance(replicas, Ensemble):
        replicas = replicas.replicas
    if isinstance(replicas, (SamplePath, LocalTimeField)):
        replicas = [replicas]
    replicas = list(replicas)
    from_fields = isinstance(replicas[0], LocalTimeField)
    if from_fields and isinstance(mode, str):
        raise DomainError("path-point mode needs sampled paths; fields only carry the level grid")
    want = LocalTimeField if from_fields else SamplePath
    replicas = _as_list(replicas, want)
    g = replicas[0].grid
    d = _check_deltas(deltas, g.dt, g.t_max - t)
    meta = replicas[0].meta.get("source", replicas[0].meta) if from_fields else replicas[0].meta
    h_t = _hurst_at(meta, hurst, t)
    k_t = g.index_of(t)
    k_d = k_t + np.rint(d / g.dt).astype(int)
    denom = d ** (1.0 - h_t + exponent_shift) * np.log(np.log(1.0 / d)) ** h_t
    values = np.empty((len(replicas), d.size))
    if from_fields:
        for i, fld in enumerate(replicas):
            col = fld.column(float(mode))
            values[i] = (col[k_d] - col[k_t]) / denom
    else:
        bin_dx = dx or _default_dx_of(replicas[0])
        for i, p in enumerate(replicas):
            level = p.values[k_t] if isinstance(mode, str) else float(mode)
            series = occupation_series(p, level - bin_dx / 2, level + bin_dx / 2)
            values[i] = (series[k_d] - series[k_t]) / bin_dx / denom
    label = (f"delta^(1-H+{exponent_shift:g}) (loglog 1/delta)^H" if exponent_shift
             else "delta^(1-H) (loglog 1/delta)^H")
    return ModulusCurve(d, values, label)


def uniform_modulus_statistic(replicas, x: float, deltas,
                              hurst: HurstFunction | None = None,
                              exponent_shift: float = 0.0,
                              dx: float | None = None) -> ModulusCurve:
    """Window-uniform local-time increment ratios at a fixed level.

    For each delta, the numerator is the sup over all grid pairs at lag delta
    of |L(t + delta, x) - L(t, x)|; the denominator uses the Hurst sup over
    the window and a single (not iterated) logarithm.  Replicas are
    local-time fields (level bin of x) or sampled paths (centered level band
    of width dx, which coincides with the field column whenever x sits on a
    bin center -- the memory-lean route for very fine grids).
    """
    if isinstance(replicas, Ensemble):
        replicas = replicas.replicas
    if isinstance(replicas, (SamplePath, LocalTimeField)):
        replicas = [replicas]
    replicas = list(replicas)
    from_fields = isinstance(replicas[0], LocalTimeField)
    want = LocalTimeField if from_fields else SamplePath
    replicas = _as_list(replicas, want)
    g = replicas[0].grid
    d = _check_deltas(deltas, g.dt, g.horizon)
    if hurst is not None:
        h_sup = hurst.sup_inf(g.t0, g.t_max)[0]
    else:
        meta = replicas[0].meta.get("source", replicas[0].meta) if from_fields else replicas[0].meta
        meta_h = meta.get("hurst", {})
        h_sup = float(meta_h.get("nu", meta_h.get("value", 0.5)))
    lags = np.rint(d / g.dt).astype(int)
    denom = d ** (1.0 - h_sup + exponent_shift) * np.log(1.0 / d) ** h_sup
    values = np.empty((len(replicas), d.size))
    for i, rep in enumerate(replicas):
        if from_fields:
            col = rep.column(x)
        else:
            bin_dx = dx or _default_dx_of(rep)
            col = occupation_series(rep, x - bin_dx / 2, x + bin_dx / 2) / bin_dx
        for j, lag in enumerate(lags):
            values[i, j] = np.abs(col[lag:] - col[:-lag]).max() / denom[j]
    label = (f"delta^(1-Hsup+{exponent_shift:g}) (log 1/delta)^Hsup" if exponent_shift
             else "delta^(1-Hsup) (log 1/delta)^Hsup")
    return ModulusCurve(d, values, label)


def space_modulus_statistic(fields, t1: float, t2: float, alpha: float,
                            spacings=None, hurst: HurstFunction | None = None) -> ModulusCurve:
    """Spatial increment ratios |L(I,x) - L(I,y)| / |x-y|^alpha of the
    local time over the time window I = [t1, t2], per level spacing.

    The window must be short (at most a tenth of the field horizon).  When a
    Hurst function is supplied, alpha is checked against the admissible range
    alpha < min(1/(2 sup_I H) - 1/2, 1); an inadmissible alpha is still
    computed but flagged with a warning.
    """
    fields = _as_list(fields, LocalTimeField)
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    g = fields[0].grid
    if t2 - t1 > 0.1 * g.horizon + 1e-12:
        raise DomainError(
            f"window length {t2 - t1:g} exceeds a tenth of the horizon {g.horizon:g}; "
            "the spatial modulus is a short-interval statistic")
    if hurst is not None:
        sup_h = hurst.sup_inf(t1, t2)[0]
        alpha_cap = min(1.0 / (2.0 * sup_h) - 0.5, 1.0)
        if alpha >= alpha_cap:
            warnings.warn(
                f"alpha = {alpha:g} is outside the admissible range (0, {alpha_cap:g}) "
                f"for sup H = {sup_h:g}; the ratio curve will not stay bounded",
                RuntimeWarning)
    xg = fields[0].x_grid
    if spacings is None:
        spacings = [1, 2, 4, 8, 16, 32]
    lags = np.asarray(spacings, dtype=int)
    if np.any(lags < 1) or np.any(lags >= xg.m):
        raise DomainError("spacings must be >= 1 bin and inside the level grid")
    gaps = lags * xg.dx
    values = np.empty((len(fields), lags.size))
    for i, fld in enumerate(fields):
        prof = fld.increment_profile(t1, t2)
        for j, lag in enumerate(lags):
            values[i, j] = np.abs(prof[lag:] - prof[:-lag]).max() / gaps[j] ** alpha
    return ModulusCurve(gaps[np.argsort(-gaps)], values[:, np.argsort(-gaps)],
                        f"|x - y|^{alpha:g}")


# ----------------------------------------------------------------------
# pointwise laws for the path
# ----------------------------------------------------------------------

def _window_sup_curve(path: SamplePath, t0: float, d: np.ndarray) -> np.ndarray:
    """sup_{s in [t0, t0+delta]} |B(s) - B(t0)| for each delta in d."""
    g = path.grid
    k0 = g.index_of(t0)
    dev = np.abs(path.values[k0:] - path.values[k0])
    cummax = np.maximum.accumulate(dev)
    idx = np.rint(d / g.dt).astype(int)
    return cummax[idx]


def chung_statistic(paths, t0: float, deltas, hurst: HurstFunction | None = None,
                    pure_scaling: bool = False) -> ModulusCurve:
    """Chung-law ratio curves with running minima (liminf proxy).

    ratio(delta) = sup_{[t0, t0+delta]} |B - B(t0)| / (delta / log log 1/delta)^H(t0).

    With ``pure_scaling=True`` the iterated logarithm is dropped and the
    denominator is delta^H(t0) alone.  That variant is exactly invariant in
    law under delta -> c*delta for Brownian paths (the iterated-log factor is
    scale dependent, so the full ratio is only asymptotically so); it is the
    one to use for distributional self-similarity tests.
    """
    paths = _as_list(paths, SamplePath)
    g = paths[0].grid
    d = _check_deltas(deltas, g.dt, g.t_max - t0)
    h0 = _hurst_at(paths[0].meta, hurst, t0)
    if pure_scaling:
        denom = d ** h0
        label = "delta^H(t0)"
    else:
        denom = (d / np.log(np.log(1.0 / d))) ** h0
        label = "(delta / loglog 1/delta)^H(t0)"
    values = np.stack([_window_sup_curve(p, t0, d) for p in paths]) / denom
    running = np.minimum.accumulate(values, axis=1)
    return ModulusCurve(d, values, label, running=running)


def lil_statistic(paths, t0: float, deltas, hurst: HurstFunction | None = None,
                  exponent_shift: float = 0.0) -> ModulusCurve:
    """Iterated-logarithm ratio curves with running maxima (limsup proxy).

    ratio(delta) = sup_{[t0, t0+delta]} |B - B(t0)|
                   / [ delta^(H(t0) + exponent_shift) (log log 1/delta)^(1/2) ].
    """
    paths = _as_list(paths, SamplePath)
    g = paths[0].grid
    d = _check_deltas(deltas, g.dt, g.t_max - t0)
    h0 = _hurst_at(paths[0].meta, hurst, t0)
    denom = d ** (h0 + exponent_shift) * np.sqrt(np.log(np.log(1.0 / d)))
    values = np.stack([_window_sup_curve(p, t0, d) for p in paths]) / denom
    running = np.maximum.accumulate(values, axis=1)
    label = (f"delta^(H(t0)+{exponent_shift:g}) (loglog 1/delta)^(1/2)" if exponent_shift
             else "delta^H(t0) (loglog 1/delta)^(1/2)")
    return ModulusCurve(d, values, label, running=running)


@dataclass(frozen=True)
class FittedConstant:
    value: float
    ci_low: float
    ci_high: float
    n_replicas: int
    n_bootstrap: int


def fitted_constant(curve: ModulusCurve, kind: str = "running",
                    n_bootstrap: int = 500, seed: int = 0) -> FittedConstant:
    """Median fitted constant of a ratio statistic, with a bootstrap CI.

    kind "running" uses the final running extremum per replica (for
    liminf/limsup statistics); kind "end" the raw ratio at the smallest
    scale.  The theorems prove such constants exist; this reports them as
    outputs, never asserts them.
    """
    if kind == "running":
        per = curve.running_end()
    elif kind == "end":
        per = curve.values[:, -1]
    else:
        raise DomainError(f"unknown kind {kind!r}")
    if per.size < 2:
        raise DomainError("need at least 2 replicas to fit a constant")
    rng = np.random.default_rng(seed)
    boots = np.median(per[rng.integers(0, per.size, size=(n_bootstrap, per.size))], axis=1)
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return FittedConstant(value=float(np.median(per)), ci_low=float(lo), ci_high=float(hi),
                          n_replicas=per.size, n_bootstrap=n_bootstrap)


# ----------------------------------------------------------------------
# representation constants
# ----------------------------------------------------------------------

def _ma_kernel_tail_integral(h_value: float, epsrel: float = 1e-11) -> float:
    """int_0^inf ((1+v)^(H-1/2) - v^(H-1/2))^2 dv by adaptive quadrature."""
    a = h_value - 0.5

    def f(v):
        return ((1.0 + v) ** a - v ** a) ** 2

    i1, _ = quad(f, 0.0, 1.0, epsrel=epsrel, epsabs=0.0, limit=200)
    i2, _ = quad(f, 1.0, np.inf, epsrel=epsrel, epsabs=0.0, limit=200)
    return i1 + i2


def v_constant(h_value: float, representation: str, grouping: str = "printed",
               epsrel: float = 1e-11) -> float:
    """Small-scale standard deviation constant of each representation.

    harmonizable: sqrt(pi / (H Gamma(2H) sin(pi H))).  moving-average, as
    printed: (sqrt(I) + 1/(2H)) / Gamma(H + 1/2) with
    I = int_0^inf ((1+v)^(H-1/2) - v^(H-1/2))^2 dv; the alternative
    grouping="root-sum" reads sqrt(I + 1/(2H)) / Gamma(H + 1/2), the usual
    unit-variance normalizing constant.  The two groupings agree at H = 1/2
    (both equal 1) and differ elsewhere; both are exposed because the printed
    form is typographically ambiguous.
    """
    if not (0.0 < h_value < 1.0):
        raise DomainError(f"H must lie in (0,1), got {h_value}")
    if representation == "harmonizable":
        return float(np.sqrt(np.pi / (h_value * gamma_fn(2 * h_value) * np.sin(np.pi * h_value))))
    if representation == "moving-average":
        integral = _ma_kernel_tail_integral(h_value, epsrel)
        if grouping == "printed":
            return float((np.sqrt(integral) + 1.0 / (2 * h_value)) / gamma_fn(h_value + 0.5))
        if grouping == "root-sum":
            return float(np.sqrt(integral + 1.0 / (2 * h_value)) / gamma_fn(h_value + 0.5))
        raise DomainError(f"unknown grouping {grouping!r}")
    raise DomainError(f"no small-scale constant for representation {representation!r}")


# ----------------------------------------------------------------------
# Hoelder exponent regression
# ----------------------------------------------------------------------

def holder_exponent_estimate(objs, t0: float, delta_max: float = 0.05,
                             n_scales: int = 8) -> HolderEstimate:
    """Log-log regression of oscillations over dyadic scales.

    For path replicas the oscillation is sup_{|s - t0| <= delta}|B(s)-B(t0)|
    (recovering the pointwise path exponent H(t0)); for local-time field
    replicas it is sup_x [L(t0 + delta, x) - L(t0, x)] (recovering the
    local-time time exponent 1 - H(t0)).  The estimate is the mean of
    per-replica slopes with a normal 95 percent interval from their spread.

    ``objs`` may be any iterable; replicas are consumed one at a time, so a
    generator of field objects never holds more than one table in memory.
    """
    if n_scales < 8:
        raise DomainError(f"need at least 8 dyadic scales, got {n_scales}")
    if isinstance(objs, Ensemble):
        objs = objs.replicas
    if isinstance(objs, (SamplePath, LocalTimeField)):
        objs = [objs]
    it = iter(objs)
    try:
        first = next(it)
    except StopIteration:
        raise DomainError("need at least one replica") from None
    if not isinstance(first, (SamplePath, LocalTimeField)):
        raise DomainError("replicas must be sampled paths or local-time fields")
    d = delta_max * 2.0 ** -np.arange(n_scales)
    g = first.grid
    if d[-1] < _MIN_STEPS * g.dt - 1e-12:
        raise DomainError(f"smallest dyadic scale {d[-1]:g} under {_MIN_STEPS} grid steps; refused")
    k0 = g.index_of(t0)
    if isinstance(first, SamplePath):
        idx = np.rint(d / g.dt).astype(int)

        def osc_of(p):
            dev = np.abs(p.values - p.values[k0])
            fwd = np.maximum.accumulate(dev[k0:])
            bwd = np.maximum.accumulate(dev[k0::-1])
            hi = np.minimum(idx, fwd.size - 1)
            lo = np.minimum(idx, bwd.size - 1)
            return np.maximum(fwd[hi], bwd[lo])
    elif isinstance(first, LocalTimeField):
        idx = k0 + np.rint(d / g.dt).astype(int)

        def osc_of(fld):
            return (fld.table[idx] - fld.table[k0]).max(axis=1)
    osc = np.array([osc_of(first)] + [osc_of(o) for o in it])
    if np.any(osc <= 0):
        # Degenerate regression: a replica with zero oscillation at some
        # scale has no log-log slope.  Flag rather than fail.
        return HolderEstimate(alpha=float("nan"), ci_low=float("nan"), ci_high=float("nan"),
                              r_squared=float("nan"), n_scales=n_scales, n_replicas=osc.shape[0],
                              per_replica=np.full(osc.shape[0], np.nan), degenerate=True)
    logs = np.log(osc)
    logd = np.log(d)
    slopes = np.polyfit(logd, logs.T, 1)[0]
    mean_curve = logs.mean(axis=0)
    fit = np.polyval(np.polyfit(logd, mean_curve, 1), logd)
    ss_res = float(np.sum((mean_curve - fit) ** 2))
    ss_tot = float(np.sum((mean_curve - mean_curve.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    n = osc.shape[0]
    half = 1.96 * slopes.std(ddof=1) / np.sqrt(n) if n > 1 else float("nan")
    alpha = float(slopes.mean())
    return HolderEstimate(alpha=alpha, ci_low=alpha - half, ci_high=alpha + half,
                          r_squared=r2, n_scales=n_scales, n_replicas=n,
                          per_replica=slopes)


# ----------------------------------------------------------------------
# the range inequality
# ----------------------------------------------------------------------

def _default_dx_of(path: SamplePath) -> float:
    from .localtime import default_dx
    return default_dx(path)


def range_inequality_check(path: SamplePath, t0: float, delta: float,
                           dx: float | None = None) -> RangeCheck:
    """Pathwise check of delta <= 2 sup_x L([t0, t0+delta], x) * osc.

    The discretized sup over bins underestimates the continuum sup by at most
    a factor 1 + dx / osc (the occupied range can exceed the oscillation by
    one bin on each side), so the inequality is asserted with that slack.
    """
    g = path.grid
    k0 = g.index_of(t0)
    k1 = k0 + int(round(delta / g.dt))  # snap the window end to the grid
    if k1 >= g.n:
        raise DomainError(f"window [{t0}, {t0 + delta}] exceeds the horizon {g.t_max:g}")
    if k1 - k0 < _MIN_STEPS:
        raise DomainError(f"window [{t0}, {t0 + delta}] spans fewer than {_MIN_STEPS} grid steps")
    sub_vals = path.values[k0:k1 + 1]
    sub_grid = TimeGrid(t0=float(g.t0 + k0 * g.dt), dt=g.dt, n=k1 - k0 + 1)
    sub = SamplePath(sub_grid, sub_vals, dict(path.meta))
    bin_dx = dx or _default_dx_of(path)
    fld = local_time_field(sub, dx=bin_dx)
    sup_lt = float(fld.table[-1].max())
    osc = float(np.abs(sub_vals - sub_vals[0]).max())
    slack = 1.0 + (fld.x_grid.dx / osc if osc > 0 else np.inf)
    rhs = 2.0 * sup_lt * osc * slack
    return RangeCheck(delta=float(k1 - k0) * g.dt, sup_local_time=sup_lt, oscillation=osc,
                      rhs=rhs, slack=slack, holds=bool((k1 - k0) * g.dt <= rhs * (1 + 1e-12)))
