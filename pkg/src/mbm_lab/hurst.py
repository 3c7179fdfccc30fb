"""Time-varying Hurst exponent functions H : [0, inf) -> (0, 1).

A ``HurstFunction`` packages the functional form (constant, linear ramp,
sinusoidal, piecewise linear, or an interpolated user table), declared range
bounds 0 < mu <= nu < 1, and an optional Hoelder regularity declaration
|H(t) - H(s)| <= K |t - s|^beta with nu < beta <= 1.  The range bounds are
computed exactly from the parameters (all supported kinds have closed-form
extrema) and every evaluation is guaranteed to stay inside [mu, nu].

Ramps and interpolated tables are continued as constants outside their knot
span so that H is defined for every t >= 0 and the declared range stays valid
on the whole half line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = ["HurstFunction", "ConditionBetaResult", "check_condition_beta"]

_KINDS = ("constant", "linear", "sinusoidal", "piecewise-linear", "user-table")

# Pair budget for the Hoelder-condition scan; beyond this, pairs are subsampled.
_MAX_PAIRS = 10_000


@dataclass(frozen=True)
class ConditionBetaResult:
    holds: bool
    worst_ratio: float
    beta: float
    constant: float
    n_pairs: int


@dataclass(frozen=True)
class HurstFunction:
    """A Hurst exponent function with exact range bounds.

    Use the classmethod constructors (``constant``, ``linear``, ``sinusoidal``,
    ``piecewise_linear``, ``user_table``) rather than the raw constructor.
    """

    kind: str
    params: dict
    mu: float
    nu: float
    beta: float | None = None
    holder_constant: float | None = None
    # knot arrays for the interpolated kinds, precomputed by the constructors
    _knots_t: np.ndarray | None = field(default=None, repr=False, compare=False)
    _knots_h: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        problems = []
        if self.kind not in _KINDS:
            problems.append(f"unknown kind {self.kind!r}")
        if not (0.0 < self.mu <= self.nu < 1.0):
            problems.append(f"range bounds must satisfy 0 < mu <= nu < 1, got mu={self.mu}, nu={self.nu}")
        if self.beta is not None:
            if not (self.nu < self.beta <= 1.0):
                problems.append(f"Hoelder condition requires nu < beta <= 1, got nu={self.nu}, beta={self.beta}")
            if self.holder_constant is None or not (self.holder_constant > 0):
                problems.append("a declared beta needs a positive holder_constant")
        if problems:
            raise DomainError("; ".join(problems))

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------

    @classmethod
    def constant(cls, value: float, beta: float | None = None,
                 holder_constant: float | None = None) -> "HurstFunction":
        if beta is not None and holder_constant is None:
            holder_constant = 1e-12  # any positive constant works for a constant H
        return cls("constant", {"value": float(value)}, float(value), float(value),
                   beta, holder_constant)

    @classmethod
    def linear(cls, h_start: float, h_end: float, t_end: float = 1.0,
               beta: float | None = None, holder_constant: float | None = None) -> "HurstFunction":
        """Linear ramp from h_start at t=0 to h_end at t=t_end, then constant."""
        if t_end <= 0:
            raise DomainError(f"t_end must be positive, got {t_end}")
        knots_t = np.array([0.0, float(t_end)])
        knots_h = np.array([float(h_start), float(h_end)])
        if beta is not None and holder_constant is None:
            slope = abs(h_end - h_start) / t_end
            holder_constant = slope if beta == 1.0 else None
        params = {"h_start": float(h_start), "h_end": float(h_end), "t_end": float(t_end)}
        return cls("linear", params, float(min(h_start, h_end)), float(max(h_start, h_end)),
                   beta, holder_constant, _knots_t=knots_t, _knots_h=knots_h)

    @classmethod
    def sinusoidal(cls, center: float, amplitude: float, omega: float, phase: float = 0.0,
                   beta: float | None = None, holder_constant: float | None = None) -> "HurstFunction":
        """H(t) = center + amplitude * sin(omega * t + phase)."""
        if omega <= 0:
            raise DomainError(f"omega must be positive, got {omega}")
        amp = abs(float(amplitude))
        if beta is not None and holder_constant is None and beta == 1.0:
            holder_constant = amp * omega
        params = {"center": float(center), "amplitude": float(amplitude),
                  "omega": float(omega), "phase": float(phase)}
        return cls("sinusoidal", params, float(center) - amp, float(center) + amp,
                   beta, holder_constant)

    @classmethod
    def piecewise_linear(cls, times, values, beta: float | None = None,
                         holder_constant: float | None = None) -> "HurstFunction":
        knots_t, knots_h = cls._checked_knots(times, values)
        params = {"times": [float(t) for t in knots_t], "values": [float(v) for v in knots_h]}
        return cls("piecewise-linear", params, float(knots_h.min()), float(knots_h.max()),
                   beta, holder_constant, _knots_t=knots_t, _knots_h=knots_h)

    @classmethod
    def user_table(cls, times, values, beta: float | None = None,
                   holder_constant: float | None = None) -> "HurstFunction":
        """Tabulated H with linear interpolation between samples."""
        knots_t, knots_h = cls._checked_knots(times, values)
        params = {"times": [float(t) for t in knots_t], "values": [float(v) for v in knots_h]}
        return cls("user-table", params, float(knots_h.min()), float(knots_h.max()),
                   beta, holder_constant, _knots_t=knots_t, _knots_h=knots_h)

    @staticmethod
    def _checked_knots(times, values):
        knots_t = np.asarray(times, dtype=float)
        knots_h = np.asarray(values, dtype=float)
        if knots_t.ndim != 1 or knots_t.shape != knots_h.shape or knots_t.size < 2:
            raise DomainError("knots need matching 1-d arrays with at least two entries")
        if np.any(np.diff(knots_t) <= 0):
            raise DomainError("knot times must be strictly increasing")
        if knots_t[0] < 0:
            raise DomainError("knot times must be nonnegative")
        return knots_t, knots_h

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        """Evaluate H at scalar or array t >= 0."""
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise DomainError("H is defined on t >= 0 only")
        if self.kind == "constant":
            out = np.full_like(arr, self.params["value"])
        elif self.kind == "sinusoidal":
            p = self.params
            out = p["center"] + p["amplitude"] * np.sin(p["omega"] * arr + p["phase"])
        else:
            # np.interp continues the first/last knot value outside the span
            out = np.interp(arr, self._knots_t, self._knots_h)
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out

    def sup_inf(self, a: float, b: float) -> tuple[float, float]:
        """Exact (sup, inf) of H over [a, b].

        Closed-form for every supported kind: endpoints plus interior critical
        points for the sinusoid, endpoints plus interior knots for the
        interpolated kinds.
        """
        if b < a:
            raise DomainError(f"need a <= b, got [{a}, {b}]")
        if a < 0:
            raise DomainError("H is defined on t >= 0 only")
        if self.kind == "constant":
            v = self.params["value"]
            return v, v
        candidates = [a, b]
        if self.kind == "sinusoidal":
            p = self.params
            # extrema of sin(omega t + phase) at omega t + phase = pi/2 + k pi
            k_lo = np.ceil((p["omega"] * a + p["phase"] - np.pi / 2) / np.pi)
            k_hi = np.floor((p["omega"] * b + p["phase"] - np.pi / 2) / np.pi)
            ks = np.arange(k_lo, k_hi + 1)
            if ks.size:
                candidates.extend(((np.pi / 2 + np.pi * ks - p["phase"]) / p["omega"]).tolist())
        else:
            inside = (self._knots_t > a) & (self._knots_t < b)
            candidates.extend(self._knots_t[inside].tolist())
        vals = self.eval(np.asarray(candidates))
        return float(vals.max()), float(vals.min())

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "mu": self.mu, "nu": self.nu, **self.params}
        if self.beta is not None:
            d["beta"] = self.beta
            d["holder_constant"] = self.holder_constant
        return d

    @classmethod
    def from_dict(cls, spec: dict) -> "HurstFunction":
        """Rebuild from the dictionary form produced by ``to_dict`` (also the
        configuration file encoding)."""
        d = dict(spec)
        kind = d.pop("kind", None)
        beta = d.pop("beta", None)
        k_const = d.pop("holder_constant", None)
        d.pop("mu", None)
        d.pop("nu", None)
        try:
            if kind == "constant":
                return cls.constant(d["value"], beta, k_const)
            if kind == "linear":
                return cls.linear(d["h_start"], d["h_end"], d.get("t_end", 1.0), beta, k_const)
            if kind == "sinusoidal":
                return cls.sinusoidal(d["center"], d["amplitude"], d["omega"],
                                      d.get("phase", 0.0), beta, k_const)
            if kind == "piecewise-linear":
                return cls.piecewise_linear(d["times"], d["values"], beta, k_const)
            if kind == "user-table":
                return cls.user_table(d["times"], d["values"], beta, k_const)
        except KeyError as exc:
            raise DomainError(f"hurst spec of kind {kind!r} is missing parameter {exc}") from exc
        raise DomainError(f"unknown hurst kind {kind!r}")


def check_condition_beta(h: HurstFunction, grid_times, seed: int = 0) -> ConditionBetaResult:
    """Scan grid pairs for the declared Hoelder condition on H.

    Checks |H(t) - H(s)| <= K |t - s|^beta over all pairs of the supplied grid
    times, subsampling uniformly at random (deterministic in ``seed``) when the
    number of pairs exceeds 10^4.  ``holds`` also requires the declared range
    bound nu to sit strictly below beta.
    """
    if h.beta is None:
        raise DomainError("no Hoelder condition declared on this Hurst function")
    times = np.asarray(grid_times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise DomainError("need a 1-d grid with at least two times")
    n = times.size
    total = n * (n - 1) // 2
    if total <= _MAX_PAIRS:
        ii, jj = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, n, size=_MAX_PAIRS)
        jj = rng.integers(0, n, size=_MAX_PAIRS)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
    hv = h.eval(times)
    gaps = np.abs(times[ii] - times[jj])
    ratios = np.abs(hv[ii] - hv[jj]) / gaps ** h.beta
    worst = float(ratios.max()) if ratios.size else 0.0
    holds = (h.nu < h.beta) and (worst <= h.holder_constant * (1.0 + 1e-9))
    return ConditionBetaResult(holds=bool(holds), worst_ratio=worst, beta=h.beta,
                               constant=h.holder_constant, n_pairs=int(ii.size))
