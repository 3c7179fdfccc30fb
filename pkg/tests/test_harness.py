"""Tests for the experiment harness: seeded ensembles, statistic dispatch,
crash isolation, and exit-code aggregation."""

import numpy as np
import pytest

import mbm_lab.harness as harness
import mbm_lab.lass
from mbm_lab.config import SCHEMA_VERSION, parse_config
from mbm_lab.errors import ConfigError, DomainError, SynthesisError
from mbm_lab.harness import (
    EXIT_ERROR,
    EXIT_FAIL,
    EXIT_PASS,
    ExperimentReport,
    StatResult,
    mc_ensemble,
    replica_seeds,
    run_experiment,
    run_statistic,
)


def make_config(**overrides) -> dict:
    raw = {
        "version": SCHEMA_VERSION,
        "seed": 11,
        "replicas": 30,
        "hurst": {"kind": "constant", "value": 0.5},
        "representation": "moving-average",
        "grid": {"t0": 0.0, "dt": 1.0 / 256, "n": 257},
    }
    raw.update(overrides)
    return raw


class TestReplicaSeeds:
    def test_deterministic_and_distinct(self):
        a = replica_seeds(42, 16)
        b = replica_seeds(42, 16)
        assert [s.spawn_key for s in a] == [s.spawn_key for s in b]
        assert [s.entropy for s in a] == [s.entropy for s in b]
        states = {tuple(s.generate_state(4)) for s in a}
        assert len(states) == 16  # pairwise distinct streams

    def test_spawn_key_identifies_replica(self):
        seeds = replica_seeds(7, 3)
        assert [s.spawn_key for s in seeds] == [(0,), (1,), (2,)]

    def test_negative_count_refused(self):
        with pytest.raises(DomainError, match="non-negative"):
            replica_seeds(0, -1)


class TestMcEnsemble:
    def test_reproducible_from_master_seed(self):
        cfg = parse_config(make_config(replicas=5))
        e1 = mc_ensemble(cfg)
        e2 = mc_ensemble(cfg)
        assert len(e1.replicas) == 5
        for p, q in zip(e1.replicas, e2.replicas):
            assert np.array_equal(p.values, q.values)

    def test_different_master_seed_differs(self):
        e1 = mc_ensemble(parse_config(make_config(replicas=3)))
        e2 = mc_ensemble(parse_config(make_config(replicas=3, seed=12)))
        assert not np.array_equal(e1.replicas[0].values, e2.replicas[0].values)

    def test_replica_count_override(self):
        cfg = parse_config(make_config(replicas=10))
        assert len(mc_ensemble(cfg, replicas=4).replicas) == 4

    def test_fbm_exact_requires_constant_hurst(self):
        cfg = parse_config(make_config(
            representation="fbm-exact",
            hurst={"kind": "linear", "h_start": 0.4, "h_end": 0.6}))
        with pytest.raises(ConfigError, match="requires a constant Hurst"):
            mc_ensemble(cfg)

    def test_fbm_exact_ensemble(self):
        cfg = parse_config(make_config(representation="fbm-exact", replicas=4))
        ens = mc_ensemble(cfg)
        assert len(ens.replicas) == 4
        assert all(p.values[0] == 0.0 for p in ens.replicas)
        assert ens.config["representation"] == "fbm-exact"

    def test_failure_budget_tolerates_and_records_drops(self, monkeypatch):
        cfg = parse_config(make_config(
            replicas=100, thresholds={"replica_failure_budget": 0.05}))

        class LeakyGen:
            def sample_batch(self, seeds):
                block = np.zeros((cfg.grid.n, len(seeds)))
                block[0, 3] = np.nan  # one bad replica out of 100: within budget
                return block

            def paths_from_batch(self, batch, seeds):
                from mbm_lab.synth import SamplePath
                return [SamplePath(cfg.grid, batch[:, r], {}) for r in range(len(seeds))]

        monkeypatch.setattr(harness, "_make_generator", lambda c: LeakyGen())
        ens = mc_ensemble(cfg)
        assert len(ens.replicas) == 99
        assert ens.config["failed_replicas"] == [3]

    def test_failure_budget_aborts_when_exceeded(self, monkeypatch):
        cfg = parse_config(make_config(
            replicas=100, thresholds={"replica_failure_budget": 0.01}))

        class BadGen:
            def sample_batch(self, seeds):
                block = np.zeros((cfg.grid.n, len(seeds)))
                block[0, :5] = np.nan  # five bad replicas: over the 1% budget
                return block

            def paths_from_batch(self, batch, seeds):
                from mbm_lab.synth import SamplePath
                return [SamplePath(cfg.grid, batch[:, r], {}) for r in range(len(seeds))]

        monkeypatch.setattr(harness, "_make_generator", lambda c: BadGen())
        with pytest.raises(SynthesisError, match="over the 1% budget"):
            mc_ensemble(cfg)


class TestDispatchAndExitCodes:
    def test_unknown_statistic_becomes_error(self):
        cfg = parse_config(make_config())
        from mbm_lab.config import StatisticSpec
        res = run_statistic(cfg, StatisticSpec(name="occupation-identity",
                                               params={}))
        assert res.verdict in ("pass", "fail")
        ghost = run_statistic(cfg, StatisticSpec(name="ghost", params={}))
        assert ghost.verdict == "error"
        assert "no handler" in ghost.error

    def test_crash_is_isolated_as_error_verdict(self):
        # levy-moments refuses a non-Brownian center; the handler's exception
        # must surface as an 'error' verdict with traceback, not a crash.
        raw = make_config(
            hurst={"kind": "constant", "value": 0.7},
            statistics=[{"name": "levy-moments"},
                        {"name": "occupation-identity"}])
        report = run_experiment(parse_config(raw))
        verdicts = {r.name: r.verdict for r in report.results}
        assert verdicts["levy-moments"] == "error"
        assert verdicts["occupation-identity"] == "pass"
        failing = [r for r in report.results if r.verdict == "error"]
        assert "requires constant H = 0.5" in failing[0].error
        assert report.exit_code == EXIT_ERROR

    def test_empty_statistics_exit_zero(self):
        report = run_experiment(parse_config(make_config()))
        assert report.results == []
        assert report.exit_code == EXIT_PASS

    def test_only_filter(self):
        raw = make_config(statistics=[{"name": "occupation-identity"},
                                      {"name": "v-constants"}])
        cfg = parse_config(raw)
        report = run_experiment(cfg, only="v-constants")
        assert [r.name for r in report.results] == ["v-constants"]
        with pytest.raises(ConfigError, match="not selected"):
            run_experiment(cfg, only="chung")

    def test_exit_code_ranking(self):
        cfg = parse_config(make_config())
        ok = StatResult(name="a", verdict="pass")
        bad = StatResult(name="b", verdict="fail")
        err = StatResult(name="c", verdict="error", error="boom")
        assert ExperimentReport(cfg, [ok]).exit_code == EXIT_PASS
        assert ExperimentReport(cfg, [ok, bad]).exit_code == EXIT_FAIL
        assert ExperimentReport(cfg, [ok, bad, err]).exit_code == EXIT_ERROR


class TestStatisticHandlers:
    def test_occupation_identity_passes_exactly(self):
        raw = make_config(statistics=[{"name": "occupation-identity"}])
        report = run_experiment(parse_config(raw))
        res = report.results[0]
        assert res.verdict == "pass"
        assert res.summary["max_relative_error"] <= 1e-12
        assert res.summary["n_replicas"] == 30
        kind, header, rows = res.curves["occupation-identity"]
        assert kind == "table" and header == ["replica", "max_rel_err"]
        assert len(rows) == 30
        assert report.exit_code == EXIT_PASS

    def test_constant_h_reduction_requires_constant(self):
        raw = make_config(
            hurst={"kind": "linear", "h_start": 0.4, "h_end": 0.6},
            statistics=[{"name": "constant-h-reduction"}])
        report = run_experiment(parse_config(raw))
        assert report.results[0].verdict == "error"
        assert report.exit_code == EXIT_ERROR

    def test_constant_h_reduction_passes_for_brownian(self):
        raw = make_config(replicas=400,
                          statistics=[{"name": "constant-h-reduction"}])
        res = run_experiment(parse_config(raw)).results[0]
        assert res.verdict == "pass"
        assert res.summary["max_abs_z"] <= 3.0
        assert res.summary["fitted_scale"] == 1.0

    def test_dirichlet_quadrature_handler(self):
        raw = make_config(statistics=[{"name": "dirichlet-quadrature",
                                       "n_instances": 4}])
        res = run_experiment(parse_config(raw)).results[0]
        assert res.verdict == "pass"
        assert res.summary["max_relative_error"] <= 1e-6

    def test_v_constants_handler(self):
        raw = make_config(statistics=[{"name": "v-constants"}])
        res = run_experiment(parse_config(raw)).results[0]
        assert res.verdict == "pass"
        rows = res.curves["v-constants"][2]
        printed = {(h, rep): val for h, rep, _, val in rows}
        assert printed[(0.5, "moving-average")] == 1.0
        assert printed[(0.5, "harmonizable")] == pytest.approx(
            np.sqrt(2 * np.pi), rel=1e-9)

    def test_lil_exponent_shift_fails_bracket(self):
        # Perturbing the normalizing exponent by +0.2 blows the running-sup
        # far above the bracket: the verdict must be a statistical failure
        # (exit 2), not an error.
        raw = make_config(
            replicas=100,
            grid={"t0": 0.6, "dt": 0.012 / 1024, "n": 1025},
            statistics=[{"name": "lil", "t0": 0.6, "delta_max": 1e-2,
                         "delta_min": 1e-4, "exponent_shift": 0.2}])
        report = run_experiment(parse_config(raw))
        res = report.results[0]
        assert res.verdict == "fail"
        assert res.summary["median_running_sup"] > res.summary["bracket"][1]
        assert report.exit_code == EXIT_FAIL

    def test_chung_handler_respects_bracket_override(self):
        raw = make_config(
            replicas=80,
            grid={"t0": 0.6, "dt": 0.012 / 1024, "n": 1025},
            statistics=[{"name": "chung", "t0": 0.6, "delta_max": 1e-2,
                         "delta_min": 1e-4, "bracket": [0.2, 3.0]}])
        res = run_experiment(parse_config(raw)).results[0]
        assert res.verdict == "pass"
        assert 0.2 <= res.summary["median_running_inf"] <= 3.0
        kind, header, rows = res.curves["chung-curve"]
        assert kind == "modulus"
        assert header == ["delta", "ensemble_median", "envelope"]

    def test_weighted_functional_handler(self, monkeypatch):
        monkeypatch.setattr(mbm_lab.lass, "_MIN_FDD_REPLICAS", 50)
        raw = make_config(
            replicas=60,
            statistics=[{"name": "weighted-functional", "t0": 0.5,
                         "scaling": {"a": 1.0, "b": 1.5}, "rho": 1e-4,
                         "y": 0.0}])
        res = run_experiment(parse_config(raw)).results[0]
        assert res.verdict == "pass"
        assert res.summary["smoothing_width"] == pytest.approx(1e-4 ** 0.5)
        rows = res.curves["weighted-functional"][2]
        assert len(rows) == 1 and rows[0][0] == 0.0

    def test_holder_exponent_handler_path_target(self):
        raw = make_config(
            replicas=60,
            grid={"t0": 0.0, "dt": 1.0 / 4096, "n": 4097},
            representation="fbm-exact",
            statistics=[{"name": "holder-exponent", "target": "path",
                         "t0": 0.5, "delta_max": 0.1, "tolerance": 0.12}])
        res = run_experiment(parse_config(raw)).results[0]
        assert res.verdict == "pass"
        rows = res.curves["holder-exponent"][2]
        assert len(rows) == 1
        t0, alpha, lo, hi, expected, within = rows[0]
        assert expected == 0.5 and within == 1
        assert lo < alpha < hi
