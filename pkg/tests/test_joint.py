import json

import numpy as np
import pytest

from bhnoma.baselines import run_scheduler
from bhnoma.linkmodel import validate_plan
from bhnoma.optimizer.joint import prepare, run_joint_optimization
from bhnoma.report import RunReport, check_report
from bhnoma.scenario import ScenarioConfig

TINY = ScenarioConfig(beam_count=2, max_active_beams=1, window_slots=2, users_per_beam=2,
                      subcarriers_per_beam=1, max_carriers_per_user=1)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_tiny_run_is_valid_and_monotone(seed):
    report, result = run_joint_optimization(TINY, seed, return_result=True)
    validate_plan(result.plan, TINY)
    assert report.dinkelbach["monotone"]
    assert all(all(b <= a for a, b in zip(tr, tr[1:])) for tr in result.dinkelbach_traces)
    assert all(b <= a for a, b in zip(report.objective_trace, report.objective_trace[1:]))
    assert report.objective == report.recomputed_objective()
    assert check_report(json.loads(report.to_json())) == []


def test_runs_are_deterministic(small_cfg):
    a = run_joint_optimization(small_cfg, 7).to_json(with_clock=False)
    b = run_joint_optimization(small_cfg, 7).to_json(with_clock=False)
    assert a == b
    assert run_joint_optimization(small_cfg, 8).to_json(with_clock=False) != a


def test_report_round_trips(small_cfg):
    report = run_joint_optimization(small_cfg, 2)
    back = RunReport.from_json(report.to_json())
    assert back == report


@pytest.mark.parametrize("seed", range(1, 7))
def test_noma_service_beats_orthogonal_service(small_cfg, seed):
    assert run_scheduler("unoma", small_cfg, seed).objective <= run_scheduler("oma", small_cfg, seed).objective


@pytest.mark.parametrize("seed", range(1, 5))
def test_no_user_is_overserved_by_more_than_one_slot(small_cfg, seed):
    report, result = run_joint_optimization(small_cfg, seed, return_result=True)
    R, D = np.array(report.rates), np.array(report.demands)
    assert np.all(R <= D + result.rate_history.max(axis=0) + 1e-6)


def test_schedule_respects_the_beam_limit(small_cfg):
    report = run_joint_optimization(small_cfg, 4)
    assert len(report.schedule) == small_cfg.window_slots
    assert all(len(s) <= small_cfg.max_active_beams for s in report.schedule)


def test_supplied_demands_override_the_draw(small_cfg):
    D = np.full(small_cfg.user_count, 3e8)
    _, used, _ = prepare(small_cfg, 1, D)
    assert np.array_equal(used, D)
    assert run_joint_optimization(small_cfg, 1, demands=D).demands == list(D)


def test_short_users_are_reported():
    cfg = TINY.replace(min_rate=1e15)
    report = run_joint_optimization(cfg, 1)
    assert not report.feasible
    R = np.array(report.rates)
    need = np.minimum(cfg.min_rate, report.demands)
    assert report.infeasible_users == [int(u) for u in np.flatnonzero(R < need)]
