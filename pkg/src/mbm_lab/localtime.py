"""Local times from occupation measures of sampled paths.

The occupation measure of the piecewise-linear interpolant of a sampled path
is computed exactly: within each time step the interpolant moves linearly
from one value to the next, so the time it spends in any level band is the
band overlap divided by the total move, times dt.  Splitting each step across
level bins this way conserves occupation mass exactly (the overlaps
telescope), which gives the discrete occupation identity

    int_0^t f(B(s)) ds  =  sum_j f(x_j) L(t, x_j) dx

up to floating-point roundoff for every piecewise-constant f.  The local time
field L(t, x) is the per-bin occupation divided by the bin width dx, i.e. the
density of the occupation measure.

``local_time_moment`` estimates moments of local-time increments over an
ensemble, both raw and normalized by h^(1 - H_sup) with H_sup the Hurst sup
over the increment window.  ``dirichlet_integral`` evaluates the simplex
integral

    int_{t < s_1 < ... < s_m < t + h} prod (s_j - s_{j-1})^(-b_j) ds
        = h^(m - sum b) prod Gamma(1 - b_j) / Gamma(1 + m - sum b)

through log-gamma, the combinatorial backbone of the local-time moment
machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, GridRangeError
from .grids import TimeGrid, XGrid
from .hurst import HurstFunction
from .synth import SamplePath

__all__ = [
    "PiecewiseConstant",
    "LocalTimeField",
    "Ensemble",
    "MomentEstimate",
    "default_dx",
    "local_time_field",
    "occupation_series",
    "occupation_integral",
    "local_time_increment",
    "local_time_moment",
    "dirichlet_integral",
]

_MAX_BINS = 4000
_MIN_MOMENT_REPLICAS = 100


# ----------------------------------------------------------------------
# piecewise-constant level functions
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseConstant:
    """A piecewise-constant function of the level variable.

    ``values[i]`` holds on [edges[i], edges[i+1]); ``left``/``right`` extend
    the function below the first and from the last edge.  The antiderivative
    is evaluated in closed form, which is what makes occupation integrals
    exact for this class of integrands.
    """

    edges: np.ndarray
    values: np.ndarray
    left: float = 0.0
    right: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "edges", np.asarray(self.edges, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.edges.ndim != 1 or self.edges.size != self.values.size + 1:
            raise DomainError("need len(edges) == len(values) + 1")
        if np.any(np.diff(self.edges) <= 0):
            raise DomainError("edges must be strictly increasing")
        cum = np.concatenate([[0.0], np.cumsum(self.values * np.diff(self.edges))])
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def indicator(cls, a: float, b: float, height: float = 1.0) -> "PiecewiseConstant":
        if not (a < b):
            raise DomainError(f"need a < b, got [{a}, {b}]")
        return cls(np.array([a, b]), np.array([height]))

    @classmethod
    def constant(cls, c: float) -> "PiecewiseConstant":
        return cls(np.array([0.0, 1.0]), np.array([c]), left=c, right=c)

    @classmethod
    def from_bins(cls, x_grid: XGrid, values) -> "PiecewiseConstant":
        return cls(x_grid.edges(), np.asarray(values, dtype=float))

    def __call__(self, v):
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        idx = np.searchsorted(self.edges, arr, side="right") - 1
        out = np.where(idx < 0, self.left,
                       np.where(idx >= self.values.size, self.right,
                                self.values[np.clip(idx, 0, self.values.size - 1)]))
        return float(out[0]) if np.isscalar(v) else out

    def antiderivative(self, v):
        """F(v) = int_{edges[0]}^{v} f, extended linearly outside the span."""
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        inner = np.interp(arr, self.edges, self._cum)
        below = arr < self.edges[0]
        above = arr > self.edges[-1]
        out = inner
        out = np.where(below, self.left * (arr - self.edges[0]), out)
        out = np.where(above, self._cum[-1] + self.right * (arr - self.edges[-1]), out)
        return float(out[0]) if np.isscalar(v) else out

    def total_integral(self) -> float:
        if self.left != 0.0 or self.right != 0.0:
            raise DomainError("total integral defined only for compactly supported functions")
        return float(self._cum[-1])

    def shifted_scaled(self, shift: float, scale: float) -> "PiecewiseConstant":
        """The function v -> f((v - shift) / scale) for scale > 0."""
        if scale <= 0:
            raise DomainError("scale must be positive")
        return PiecewiseConstant(shift + scale * self.edges, self.values, self.left, self.right)


# ----------------------------------------------------------------------
# occupation splitting core
# ----------------------------------------------------------------------

def _step_bounds(path: SamplePath):
    v = path.values
    return np.minimum(v[:-1], v[1:]), np.maximum(v[:-1], v[1:])


def occupation_series(path: SamplePath, lo: float, hi: float) -> np.ndarray:
    """Cumulative time the interpolated path spends in the band [lo, hi).

    Returns an array aligned with the path grid: series[k] is the occupation
    of the band on [t0, t_k]; series[0] = 0.  Flat steps count fully when the
    value lies in the band (band closed on the left).
    """
    if not (hi > lo):
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    lo_c, hi_c = _step_bounds(path)
    dt = path.grid.dt
    move = hi_c - lo_c
    flat = move == 0.0
    overlap = np.clip(np.minimum(hi_c, hi) - np.maximum(lo_c, lo), 0.0, None)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(flat, 0.0, overlap / np.where(flat, 1.0, move))
    frac[flat] = ((lo_c[flat] >= lo) & (lo_c[flat] < hi)).astype(float)
    out = np.empty(path.grid.n)
    out[0] = 0.0
    np.cumsum(frac * dt, out=out[1:])
    return out


def occupation_integral(path: SamplePath, f: PiecewiseConstant, t: float) -> float:
    """int_{t0}^{t} f(B(s)) ds for the interpolated path, exact for
    piecewise-constant f, via the closed-form antiderivative of f.

    t may fall between grid times; the final partial step is integrated over
    the interpolant exactly as well.
    """
    g = path.grid
    if not (g.t0 <= t <= g.t_max + 1e-12 * max(1.0, g.t_max)):
        raise GridRangeError(f"time {t} outside horizon [{g.t0}, {g.t_max}]")
    pos = (t - g.t0) / g.dt
    k = min(int(np.floor(pos + 1e-9)), g.n - 1)
    frac = pos - k

    def steps_value(a, b, width):
        move = b - a
        flat = move == 0.0
        contrib = np.empty(a.size)
        if np.any(~flat):
            contrib[~flat] = (f.antiderivative(b[~flat]) - f.antiderivative(a[~flat])) / move[~flat]
        if np.any(flat):
            contrib[flat] = f(a[flat])
        return float(np.sum(contrib) * width)

    v = path.values
    total = steps_value(v[:k], v[1:k + 1], g.dt) if k > 0 else 0.0
    if frac > 1e-9 and k + 1 < g.n:
        v_t = v[k] + frac * (v[k + 1] - v[k])
        total += steps_value(np.array([v[k]]), np.array([v_t]), frac * g.dt)
    return total


# ----------------------------------------------------------------------
# the local-time field
# ----------------------------------------------------------------------

def default_dx(path: SamplePath) -> float:
    """Bin width matched to the typical one-step oscillation dt^H_mean."""
    meta_h = path.meta.get("hurst", {})
    if "value" in meta_h:
        h_mean = float(meta_h["value"])
    else:
        h_mean = 0.5 * (float(meta_h.get("mu", 0.5)) + float(meta_h.get("nu", 0.5)))
    return float(path.grid.dt ** h_mean)


def _auto_x_grid(path: SamplePath, dx: float, max_bins: int) -> XGrid:
    lo = float(path.values.min())
    hi = float(path.values.max())
    span = max(hi - lo, dx)
    # anchoring below pads up to 6 bins beyond span / dx; keep room for them
    if span / dx > max_bins - 6:
        dx = span / (max_bins - 6)
    # anchor bins so that integer multiples of dx are bin centers (levels such
    # as 0 then sit at a bin center, which halves the binning bias there)
    j_lo = int(np.floor(lo / dx - 0.5)) - 1
    j_hi = int(np.ceil(hi / dx + 0.5)) + 1
    return XGrid(x_min=(j_lo - 0.5) * dx, dx=dx, m=j_hi - j_lo + 1)


@dataclass
class LocalTimeField:
    """Cumulative local time table: table[k, j] = L(t_k, x_j).

    Row k is the occupation density over [t0, t_k]; row 0 is zero, rows are
    monotone in k, and sum_j table[k, j] * dx equals t_k - t0 exactly up to
    roundoff (mass conservation of the splitting rule).
    """

    grid: TimeGrid
    x_grid: XGrid
    table: np.ndarray
    meta: dict = field(default_factory=dict)

    def value(self, t: float, x: float) -> float:
        return float(self.table[self.grid.index_of(t), self.x_grid.bin_of(x)])

    def column(self, x: float) -> np.ndarray:
        """L(., x) as a series aligned with the time grid."""
        return self.table[:, self.x_grid.bin_of(x)]

    def total_mass(self, t: float) -> float:
        return float(self.table[self.grid.index_of(t)].sum() * self.x_grid.dx)

    def increment_profile(self, t1: float, t2: float) -> np.ndarray:
        """L(t2, x) - L(t1, x) over all bins."""
        k1, k2 = self.grid.index_of(t1), self.grid.index_of(t2)
        if k2 < k1:
            raise DomainError(f"need t1 <= t2, got {t1} > {t2}")
        return self.table[k2] - self.table[k1]


def local_time_field(path: SamplePath, x_grid: XGrid | None = None, dx: float | None = None,
                     auto_extend: bool = True, max_bins: int = _MAX_BINS) -> LocalTimeField:
    """Local time of the interpolated path on uniform level bins.

    With no ``x_grid``, bins of width ``dx`` (default dt^H_mean) are laid out
    to cover the sampled range.  With an explicit grid and auto_extend=False,
    a path leaving the bins raises GridRangeError reporting the first exit
    time and level.
    """
    if x_grid is None:
        x_grid = _auto_x_grid(path, dx or default_dx(path), max_bins)
    else:
        lo, hi = float(path.values.min()), float(path.values.max())
        if not x_grid.covers(lo, hi):
            if auto_extend:
                extra_lo = int(np.ceil(max(x_grid.x_min - lo, 0.0) / x_grid.dx)) + 1
                extra_hi = int(np.ceil(max(hi - x_grid.x_max, 0.0) / x_grid.dx)) + 1
                x_grid = XGrid(x_grid.x_min - extra_lo * x_grid.dx, x_grid.dx,
                               x_grid.m + extra_lo + extra_hi)
            else:
                outside = (path.values < x_grid.x_min) | (path.values > x_grid.x_max)
                k = int(np.argmax(outside))
                raise GridRangeError(
                    f"path exits the level grid at t={path.grid.t0 + k * path.grid.dt:g} "
                    f"(level {path.values[k]:g} outside [{x_grid.x_min:g}, {x_grid.x_max:g}])")
    if x_grid.m > max_bins:
        raise DomainError(f"level grid has {x_grid.m} bins, exceeding max_bins={max_bins}")

    n, m = path.grid.n, x_grid.m
    dt = path.grid.dt
    edges = x_grid.edges()
    lo_c, hi_c = _step_bounds(path)
    move = hi_c - lo_c
    j_lo = np.clip(((lo_c - x_grid.x_min) // x_grid.dx).astype(int), 0, m - 1)
    j_hi = np.clip(((hi_c - x_grid.x_min) // x_grid.dx).astype(int), 0, m - 1)

    inc = np.zeros((n - 1, m))
    rows = np.arange(n - 1)
    flat = move == 0.0
    if np.any(flat):
        inc[rows[flat], j_lo[flat]] = dt
    span = j_hi - j_lo
    live0 = ~flat
    for off in range(int(span.max()) + 1 if span.size else 0):
        sel = live0 & (span >= off)
        if not np.any(sel):
            break
        j = j_lo[sel] + off
        ov = np.minimum(hi_c[sel], edges[j + 1]) - np.maximum(lo_c[sel], edges[j])
        inc[rows[sel], j] += dt * ov / move[sel]

    table = np.empty((n, m))
    table[0] = 0.0
    np.cumsum(inc, axis=0, out=table[1:])
    table[1:] /= x_grid.dx
    meta = {"dx": x_grid.dx, "source": dict(path.meta)}
    return LocalTimeField(path.grid, x_grid, table, meta)


def local_time_increment(fld: LocalTimeField, t1: float, t2: float, x: float) -> float:
    """L(t2, x) - L(t1, x) at the bin containing x."""
    k1, k2 = fld.grid.index_of(t1), fld.grid.index_of(t2)
    if k2 < k1:
        raise DomainError(f"need t1 <= t2, got {t1} > {t2}")
    j = fld.x_grid.bin_of(x)
    return float(fld.table[k2, j] - fld.table[k1, j])


# ----------------------------------------------------------------------
# ensembles and increment moments
# ----------------------------------------------------------------------

@dataclass
class Ensemble:
    """A bag of replica objects (paths or fields) with shared provenance."""

    replicas: list
    kind: str = "paths"
    master_seed: int | None = None
    config: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.replicas)


def _as_path_list(paths) -> list[SamplePath]:
    if isinstance(paths, Ensemble):
        paths = paths.replicas
    paths = list(paths)
    if not paths or not isinstance(paths[0], SamplePath):
        raise DomainError("need an ensemble of sampled paths")
    return paths


@dataclass(frozen=True)
class MomentEstimate:
    m: int
    h: float
    t: float
    mode: str
    n_replicas: int
    raw_mean: float
    raw_se: float
    normalized_mean: float
    normalized_se: float
    h_sup: float
    dx: float


def local_time_moment(paths, m: int, h: float, t: float, hurst: HurstFunction | None = None,
                      at="path-point", dx: float | None = None) -> MomentEstimate:
    """Monte Carlo m-th moment of the local-time increment L(t+h, x) - L(t, x).

    ``at`` is either the string "path-point" (the level tracks B(t), one bin
    per replica centered there) or a fixed level.  The normalized column
    rescales increments by h^(1 - H_sup) with H_sup = sup H over [t, t+h].
    Requires at least 100 replicas and 1 <= m <= 6.
    """
    paths = _as_path_list(paths)
    if len(paths) < _MIN_MOMENT_REPLICAS:
        raise DomainError(f"need at least {_MIN_MOMENT_REPLICAS} replicas, got {len(paths)}")
    if not (1 <= m <= 6):
        raise DomainError(f"moment order must be in 1..6, got {m}")
    if h <= 0:
        raise DomainError(f"need h > 0, got {h}")
    if hurst is not None:
        h_sup = hurst.sup_inf(t, t + h)[0]
    else:
        meta_h = paths[0].meta.get("hurst", {})
        h_sup = float(meta_h.get("nu", meta_h.get("value", 0.5)))
    bin_dx = dx or default_dx(paths[0])
    mode = "path-point" if isinstance(at, str) else f"fixed-x={float(at):g}"
    samples = np.empty(len(paths))
    for i, p in enumerate(paths):
        level = p.value_at(t) if isinstance(at, str) else float(at)
        series = occupation_series(p, level - bin_dx / 2, level + bin_dx / 2)
        k1, k2 = p.grid.index_of(t), p.grid.index_of(t + h)
        samples[i] = (series[k2] - series[k1]) / bin_dx
    raw = samples ** m
    norm = (samples / h ** (1.0 - h_sup)) ** m
    n = len(paths)
    return MomentEstimate(
        m=m, h=h, t=t, mode=mode, n_replicas=n,
        raw_mean=float(raw.mean()), raw_se=float(raw.std(ddof=1) / np.sqrt(n)),
        normalized_mean=float(norm.mean()), normalized_se=float(norm.std(ddof=1) / np.sqrt(n)),
        h_sup=float(h_sup), dx=float(bin_dx))


# ----------------------------------------------------------------------
# the simplex power integral
# ----------------------------------------------------------------------

def dirichlet_integral(b, h: float) -> float:
    """Closed form of the ordered-simplex power integral.

    int over t < s_1 < ... < s_m < t+h of prod (s_j - s_{j-1})^(-b_j) ds
    (s_0 = t) equals h^(m - sum b) prod Gamma(1 - b_j) / Gamma(1 + m - sum b).
    Requires every b_j < 1 (integrability) and h > 0; evaluated in log space.
    """
    b_arr = np.asarray(b, dtype=float)
    if b_arr.ndim != 1 or b_arr.size == 0:
        raise DomainError("b must be a nonempty 1-d sequence")
    if np.any(b_arr >= 1.0):
        bad = int(np.argmax(b_arr >= 1.0))
        raise DomainError(f"b[{bad}]={b_arr[bad]} is not integrable (need b_j < 1)")
    if h <= 0:
        raise DomainError(f"need h > 0, got {h}")
    m = b_arr.size
    s = float(b_arr.sum())
    log_val = (m - s) * np.log(h) + gammaln(1.0 - b_arr).sum() - gammaln(1.0 + m - s)
    return float(np.exp(log_val))
