"""Experiment configuration: a small versioned JSON schema with exhaustive
validation.

A configuration file describes one experiment: the Hurst function, the path
generator and its grid, the ensemble size and master seed, the statistics to
run with their parameters, and the decision thresholds.  ``parse_config``
either returns a fully validated :class:`ExperimentConfig` or raises
:class:`~mbm_lab.errors.ConfigError` carrying *all* violations, each tagged
with the path of the offending field, so a bad file can be fixed in one pass.

Every run is seeded explicitly; there is no ambient randomness anywhere in
the pipeline.  Statistic parameters are validated here, at configuration
time, against the same admissibility rules the library enforces (scaling
exponent arithmetic, profile library membership, declared Hoelder condition
on H), so a config that parses will not be rejected later on formal grounds.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ConfigError, DomainError
from .grids import TimeGrid
from .hurst import HurstFunction
from .lass import PROFILE_LIBRARY, ScalingPair
from .synth import HarmonizableSpectrum, KernelQuadrature

__all__ = [
    "SCHEMA_VERSION",
    "REPRESENTATIONS",
    "STATISTIC_NAMES",
    "Thresholds",
    "StatisticSpec",
    "ExperimentConfig",
    "parse_config",
    "apply_overrides",
    "default_out_dir",
]

SCHEMA_VERSION = "mbm-lab/1"
REPRESENTATIONS = ("moving-average", "harmonizable", "riemann-liouville", "fbm-exact")

_OUT_ENV = "MBM_LAB_OUT"


def default_out_dir() -> str:
    """Output directory used when the config does not name one (env override
    ``MBM_LAB_OUT`` only; no other environment is consulted)."""
    return os.environ.get(_OUT_ENV, "mbm-lab-out")


@dataclass(frozen=True)
class Thresholds:
    """Decision thresholds; every cutoff used by a verdict lives here."""

    p_value: float = 0.01
    replica_failure_budget: float = 0.01
    chung_bracket: tuple[float, float] = (0.85, 1.45)
    lil_bracket: tuple[float, float] = (1.0, 1.9)

    def to_dict(self) -> dict:
        return {
            "p_value": self.p_value,
            "replica_failure_budget": self.replica_failure_budget,
            "chung_bracket": list(self.chung_bracket),
            "lil_bracket": list(self.lil_bracket),
        }


@dataclass(frozen=True)
class StatisticSpec:
    """One selected statistic: registry name plus validated parameters."""

    name: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}


@dataclass(frozen=True)
class ExperimentConfig:
    version: str
    seed: int
    replicas: int
    hurst: HurstFunction
    representation: str
    grid: TimeGrid
    quadrature: KernelQuadrature
    spectrum: HarmonizableSpectrum
    statistics: tuple[StatisticSpec, ...]
    thresholds: Thresholds
    out_dir: str

    def to_dict(self) -> dict:
        """Round-trippable echo of the configuration (written into reports)."""
        return {
            "version": self.version,
            "seed": self.seed,
            "replicas": self.replicas,
            "hurst": self.hurst.to_dict(),
            "representation": self.representation,
            "grid": {"t0": self.grid.t0, "dt": self.grid.dt, "n": self.grid.n},
            "quadrature": {"t_past": self.quadrature.t_past, "q": self.quadrature.q},
            "spectrum": {
                "omega_max": self.spectrum.omega_max,
                "n_freq": self.spectrum.n_freq,
            },
            "statistics": [s.to_dict() for s in self.statistics],
            "thresholds": self.thresholds.to_dict(),
            "out_dir": self.out_dir,
        }


# --------------------------------------------------------------------------
# validation helpers — each returns the parsed value and appends violations
# --------------------------------------------------------------------------

class _Collector:
    def __init__(self) -> None:
        self.violations: list[tuple[str, str]] = []

    def add(self, path: str, message: str) -> None:
        self.violations.append((path, message))

    def raise_if_any(self) -> None:
        if self.violations:
            raise ConfigError(self.violations)


def _want_number(col: _Collector, obj: dict, key: str, path: str, *,
                 default=None, required: bool = False,
                 positive: bool = False, integer: bool = False):
    if key not in obj:
        if required:
            col.add(f"{path}.{key}", "required field is missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        col.add(f"{path}.{key}", f"expected a number, got {v!r}")
        return default
    if integer and int(v) != v:
        col.add(f"{path}.{key}", f"expected an integer, got {v!r}")
        return default
    if positive and not v > 0:
        col.add(f"{path}.{key}", f"must be positive, got {v!r}")
        return default
    if not math.isfinite(float(v)):
        col.add(f"{path}.{key}", f"must be finite, got {v!r}")
        return default
    return int(v) if integer else float(v)


def _check_keys(col: _Collector, obj: dict, allowed: set, path: str) -> None:
    for key in obj:
        if key not in allowed:
            col.add(f"{path}.{key}", f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _number_list(col: _Collector, value, path: str, *, positive: bool = False,
                 decreasing: bool = False) -> list | None:
    if not isinstance(value, (list, tuple)) or not value:
        col.add(path, f"expected a non-empty list of numbers, got {value!r}")
        return None
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(float(v)):
            col.add(f"{path}[{i}]", f"expected a finite number, got {v!r}")
            return None
        if positive and not v > 0:
            col.add(f"{path}[{i}]", f"must be positive, got {v!r}")
            return None
        out.append(float(v))
    if decreasing and any(b >= a for a, b in zip(out, out[1:])):
        col.add(path, f"must be strictly decreasing, got {out!r}")
        return None
    return out


# --------------------------------------------------------------------------
# statistic registry: name -> (required keys, optional keys, cross validator)
# --------------------------------------------------------------------------

def _val_orders(col: _Collector, params: dict, path: str, key: str,
                lo: int = 1, hi: int = 6) -> None:
    orders = params.get(key)
    if orders is None:
        return
    vals = _number_list(col, orders, f"{path}.{key}", positive=True)
    if vals is None:
        return
    bad = [v for v in vals if int(v) != v or not (lo <= v <= hi)]
    if bad:
        col.add(f"{path}.{key}", f"orders must be integers in [{lo}, {hi}], got {bad!r}")
    else:
        params[key] = [int(v) for v in vals]


def _val_ladder(col: _Collector, params: dict, path: str) -> None:
    dmax = params.get("delta_max")
    dmin = params.get("delta_min")
    if dmax is not None and dmin is not None and dmin >= dmax:
        col.add(f"{path}.delta_min", f"delta_min {dmin!r} must lie below delta_max {dmax!r}")


def _val_profile(col: _Collector, params: dict, path: str, key: str = "profile") -> None:
    name = params.get(key)
    if name is not None and name not in PROFILE_LIBRARY:
        col.add(f"{path}.{key}",
                f"unknown profile {name!r} (library: {', '.join(sorted(PROFILE_LIBRARY))})")


def _val_rhos(col: _Collector, params: dict, path: str) -> None:
    rhos = params.get("rhos")
    if rhos is not None:
        vals = _number_list(col, rhos, f"{path}.rhos", positive=True, decreasing=True)
        if vals is not None:
            params["rhos"] = vals


def _val_scaling(col: _Collector, params: dict, path: str, hurst: HurstFunction | None) -> None:
    pair = params.get("scaling")
    if pair is None:
        return
    if not isinstance(pair, dict) or set(pair) - {"a", "b"}:
        col.add(f"{path}.scaling", f"expected an object with keys a, b; got {pair!r}")
        return
    a = _want_number(col, pair, "a", f"{path}.scaling", required=True)
    b = _want_number(col, pair, "b", f"{path}.scaling", required=True)
    t0 = params.get("t0", 0.0)
    if a is None or b is None or hurst is None or not isinstance(t0, (int, float)):
        return
    try:
        h0 = float(hurst.eval(float(t0)))
        ScalingPair(a=float(a), b=float(b), h0=h0)
    except ConfigError as exc:
        for sub_path, msg in exc.violations:
            col.add(f"{path}.{sub_path}", msg)
    except DomainError as exc:
        col.add(f"{path}.t0", str(exc))


_STAT_REGISTRY: dict[str, tuple[set, set, Callable | None]] = {
    "occupation-identity": (set(), {"t", "n_bins"}, None),
    "constant-h-reduction": (set(), {"times"}, None),
    "variance-bounds": (set(), {"n_pairs", "m_orders"},
                        lambda c, p, pa, h: _val_orders(c, p, pa, "m_orders", 2, 3)),
    "levy-moments": (set(), {"m_orders"},
                     lambda c, p, pa, h: _val_orders(c, p, pa, "m_orders", 1, 6)),
    "moment-domination": (set(), {"m_orders", "fit_orders", "h", "t"},
                          lambda c, p, pa, h: (_val_orders(c, p, pa, "m_orders", 2, 6),
                                               _val_orders(c, p, pa, "fit_orders", 2, 6))),
    "dirichlet-quadrature": (set(), {"n_instances", "max_order"}, None),
    "holder-exponent": ({"target"}, {"t0", "tolerance", "expected", "delta_max", "dx"},
                        lambda c, p, pa, h: None if p.get("target") in ("path", "local-time")
                        else c.add(f"{pa}.target",
                                   f"must be 'path' or 'local-time', got {p.get('target')!r}")),
    "chung": (set(), {"t0", "delta_max", "delta_min", "bracket"},
              lambda c, p, pa, h: _val_ladder(c, p, pa)),
    "lil": (set(), {"t0", "delta_max", "delta_min", "bracket", "exponent_shift"},
            lambda c, p, pa, h: _val_ladder(c, p, pa)),
    "modulus-local": (set(), {"t", "mode", "delta_max", "delta_min", "exponent_shift"},
                      lambda c, p, pa, h: _val_ladder(c, p, pa)),
    "modulus-uniform": (set(), {"x", "delta_max", "delta_min", "exponent_shift"},
                        lambda c, p, pa, h: _val_ladder(c, p, pa)),
    "lass-localtime": ({"t0"}, {"x", "rhos", "reference_h", "t_coords", "n_permutations"},
                       lambda c, p, pa, h: _val_rhos(c, p, pa)),
    "occupation-functional": ({"t0"}, {"profile", "rho", "lambdas", "t"},
                              lambda c, p, pa, h: _val_profile(c, p, pa)),
    "weighted-functional": ({"t0", "scaling"}, {"profile", "rho", "y", "t", "xi"},
                            lambda c, p, pa, h: (_val_profile(c, p, pa),
                                                 _val_scaling(c, p, pa, h))),
    "v-constants": (set(), {"h_values", "representations", "grouping"}, None),
}

STATISTIC_NAMES = tuple(sorted(_STAT_REGISTRY))


def _parse_statistics(col: _Collector, raw, hurst: HurstFunction | None) -> tuple:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        col.add("statistics", f"expected a list, got {type(raw).__name__}")
        return ()
    out = []
    for i, entry in enumerate(raw):
        path = f"statistics[{i}]"
        if not isinstance(entry, dict):
            col.add(path, f"expected an object, got {type(entry).__name__}")
            continue
        name = entry.get("name")
        if name not in _STAT_REGISTRY:
            col.add(f"{path}.name",
                    f"unknown statistic {name!r} (known: {', '.join(STATISTIC_NAMES)})")
            continue
        required, optional, validator = _STAT_REGISTRY[name]
        params = {k: v for k, v in entry.items() if k != "name"}
        for key in params:
            if key not in required | optional:
                col.add(f"{path}.{key}",
                        f"unknown parameter for {name} "
                        f"(allowed: {', '.join(sorted(required | optional))})")
        for key in required:
            if key not in params:
                col.add(f"{path}.{key}", f"required parameter of {name} is missing")
        if validator is not None:
            validator(col, params, path, hurst)
        out.append(StatisticSpec(name=name, params=params))
    return tuple(out)


def _parse_hurst(col: _Collector, raw) -> HurstFunction | None:
    if raw is None:
        col.add("hurst", "required section is missing")
        return None
    if not isinstance(raw, dict):
        col.add("hurst", f"expected an object, got {type(raw).__name__}")
        return None
    try:
        h = HurstFunction.from_dict(raw)
    except DomainError as exc:
        col.add("hurst", str(exc))
        return None
    if h.beta is not None and h.nu >= h.beta:
        col.add("hurst.beta",
                f"declared Hoelder condition (H_beta) requires sup H < beta, "
                f"but sup H = {h.nu:g} >= beta = {h.beta:g}")
    return h


def _parse_grid(col: _Collector, raw) -> TimeGrid | None:
    if raw is None:
        col.add("grid", "required section is missing")
        return None
    if not isinstance(raw, dict):
        col.add("grid", f"expected an object, got {type(raw).__name__}")
        return None
    _check_keys(col, raw, {"t0", "dt", "n"}, "grid")
    t0 = _want_number(col, raw, "t0", "grid", default=0.0)
    dt = _want_number(col, raw, "dt", "grid", required=True, positive=True)
    n = _want_number(col, raw, "n", "grid", required=True, positive=True, integer=True)
    if dt is None or n is None:
        return None
    try:
        return TimeGrid(t0=float(t0), dt=float(dt), n=int(n))
    except DomainError as exc:
        col.add("grid", str(exc))
        return None


def _parse_thresholds(col: _Collector, raw) -> Thresholds:
    if raw is None:
        return Thresholds()
    if not isinstance(raw, dict):
        col.add("thresholds", f"expected an object, got {type(raw).__name__}")
        return Thresholds()
    _check_keys(col, raw, {"p_value", "replica_failure_budget", "chung_bracket",
                           "lil_bracket"}, "thresholds")
    p = _want_number(col, raw, "p_value", "thresholds", default=0.01, positive=True)
    budget = _want_number(col, raw, "replica_failure_budget", "thresholds",
                          default=0.01, positive=True)
    brackets = {}
    for key, fallback in (("chung_bracket", (0.85, 1.45)), ("lil_bracket", (1.0, 1.9))):
        if key in raw:
            vals = _number_list(col, raw[key], f"thresholds.{key}", positive=True)
            if vals is not None and (len(vals) != 2 or vals[0] >= vals[1]):
                col.add(f"thresholds.{key}", f"expected [low, high] with low < high, got {vals!r}")
                vals = None
            brackets[key] = tuple(vals) if vals else fallback
        else:
            brackets[key] = fallback
    if p is not None and p >= 1:
        col.add("thresholds.p_value", f"must lie in (0, 1), got {p!r}")
    return Thresholds(p_value=p if p else 0.01,
                      replica_failure_budget=budget if budget else 0.01,
                      chung_bracket=brackets["chung_bracket"],
                      lil_bracket=brackets["lil_bracket"])


_TOP_KEYS = {"version", "seed", "replicas", "hurst", "representation", "grid",
             "quadrature", "spectrum", "statistics", "thresholds", "out_dir"}


def parse_config(source: dict | str | os.PathLike) -> ExperimentConfig:
    """Parse and validate a configuration given as a dict, JSON text path, or
    path-like.  Raises :class:`ConfigError` listing *all* violations."""
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError([("$", f"cannot read config file: {exc}")]) from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([("$", f"invalid JSON: {exc}")]) from exc
    else:
        raw = source
    if not isinstance(raw, dict):
        raise ConfigError([("$", f"top level must be an object, got {type(raw).__name__}")])

    col = _Collector()
    _check_keys(col, raw, _TOP_KEYS, "$")

    version = raw.get("version")
    if version is None:
        col.add("version", "required field is missing")
    elif version != SCHEMA_VERSION:
        col.add("version", f"unsupported schema version {version!r} (expected {SCHEMA_VERSION!r})")

    seed = _want_number(col, raw, "seed", "$", required=True, integer=True)
    if seed is not None and seed < 0:
        col.add("$.seed", f"must be a non-negative integer, got {seed!r}")
        seed = None
    replicas = _want_number(col, raw, "replicas", "$", default=100, positive=True, integer=True)

    representation = raw.get("representation", "moving-average")
    if representation not in REPRESENTATIONS:
        col.add("representation",
                f"unknown representation {representation!r} "
                f"(known: {', '.join(REPRESENTATIONS)})")

    hurst = _parse_hurst(col, raw.get("hurst"))
    grid = _parse_grid(col, raw.get("grid"))

    kq_raw = raw.get("quadrature", {})
    quadrature = KernelQuadrature()
    if not isinstance(kq_raw, dict):
        col.add("quadrature", f"expected an object, got {type(kq_raw).__name__}")
    else:
        _check_keys(col, kq_raw, {"t_past", "q"}, "quadrature")
        t_past = _want_number(col, kq_raw, "t_past", "quadrature", default=100.0, positive=True)
        q = _want_number(col, kq_raw, "q", "quadrature", default=4, positive=True, integer=True)
        if t_past is not None and q is not None:
            quadrature = KernelQuadrature(t_past=float(t_past), q=int(q))

    sp_raw = raw.get("spectrum", {})
    spectrum = HarmonizableSpectrum()
    if not isinstance(sp_raw, dict):
        col.add("spectrum", f"expected an object, got {type(sp_raw).__name__}")
    else:
        _check_keys(col, sp_raw, {"omega_max", "n_freq"}, "spectrum")
        omega_max = _want_number(col, sp_raw, "omega_max", "spectrum",
                                 default=HarmonizableSpectrum.omega_max, positive=True)
        n_freq = _want_number(col, sp_raw, "n_freq", "spectrum",
                              default=HarmonizableSpectrum.n_freq, positive=True, integer=True)
        if omega_max is not None and n_freq is not None:
            spectrum = HarmonizableSpectrum(omega_max=float(omega_max), n_freq=int(n_freq))

    statistics = _parse_statistics(col, raw.get("statistics"), hurst)
    thresholds = _parse_thresholds(col, raw.get("thresholds"))

    out_dir = raw.get("out_dir", default_out_dir())
    if not isinstance(out_dir, str) or not out_dir:
        col.add("out_dir", f"expected a non-empty string, got {out_dir!r}")
        out_dir = default_out_dir()

    col.raise_if_any()
    assert hurst is not None and grid is not None and seed is not None
    return ExperimentConfig(
        version=SCHEMA_VERSION,
        seed=int(seed),
        replicas=int(replicas),
        hurst=hurst,
        representation=representation,
        grid=grid,
        quadrature=quadrature,
        spectrum=spectrum,
        statistics=statistics,
        thresholds=thresholds,
        out_dir=out_dir,
    )


def apply_overrides(raw: dict, *, seed: int | None = None, out: str | None = None,
                    replicas: int | None = None) -> dict:
    """Overlay command-line flag values on a raw config dict (flags win)."""
    merged = dict(raw)
    if seed is not None:
        merged["seed"] = seed
    if out is not None:
        merged["out_dir"] = out
    if replicas is not None:
        merged["replicas"] = replicas
    return merged
