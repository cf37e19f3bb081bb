import numpy as np
import pytest

from bhnoma.analytics import IPCSI, PCSI, InterferenceWeightSet, OutageParams, OverlapModel, outage, system_throughput
from bhnoma.montecarlo import CHUNK, TrialBatch, simulate_outage, simulate_outage_sweep, simulate_throughput


def _base(**kw):
    return OutageParams.from_rates(1.0, **kw)


def test_counts_do_not_depend_on_worker_count():
    grid = [0.0, 10.0, 20.0]
    one = simulate_outage_sweep(_base(), grid, IPCSI, 3 * CHUNK + 17, seed=4, workers=1)
    many = simulate_outage_sweep(_base(), grid, IPCSI, 3 * CHUNK + 17, seed=4, workers=4)
    assert np.array_equal(one.fail_n, many.fail_n)
    assert np.array_equal(one.fail_m, many.fail_m)


def test_seed_changes_the_draws():
    a = simulate_outage_sweep(_base(), [5.0], PCSI, 20_000, seed=1)
    b = simulate_outage_sweep(_base(), [5.0], PCSI, 20_000, seed=2)
    assert (a.fail_n[0], a.fail_m[0]) != (b.fail_n[0], b.fail_m[0])


def test_zero_rate_targets_never_fail():
    batch = simulate_outage_sweep(_base(R_n=0.0, R_m=0.0), [0.0, 20.0], IPCSI, 10_000)
    assert np.all(batch.fail_n == 0) and np.all(batch.fail_m == 0)


def test_infeasible_split_always_fails():
    batch = simulate_outage_sweep(_base(a_n=0.5, a_m=0.5), [0.0, 40.0], PCSI, 10_000)
    assert np.all(batch.p_n == 1.0) and np.all(batch.p_m == 1.0)


@pytest.mark.parametrize("csi", [IPCSI, PCSI])
@pytest.mark.parametrize("K", [1, 4])
def test_empirical_agrees_with_closed_form(csi, K):
    p = OutageParams.from_rates(10 ** 1.5, K=K)
    est = simulate_outage(p, csi, 200_000, seed=9, model=OverlapModel(neighbors=0))
    single = InterferenceWeightSet.single()
    assert abs(est.p_n - outage(p, "n", csi, single)) <= 4 * max(est.half_width_n, 1e-4)
    assert abs(est.p_m - outage(p, "m", csi, single)) <= 4 * max(est.half_width_m, 1e-4)


def test_half_width_follows_the_binomial_formula():
    batch = TrialBatch(trials=400, seed=1, fail_n=np.array([100]), fail_m=np.array([0]))
    assert batch.half_width("n")[0] == pytest.approx(1.96 * np.sqrt(0.25 * 0.75 / 400))
    assert batch.half_width("m")[0] == 0.0


def test_half_width_halves_with_four_times_the_trials():
    a = simulate_outage(OutageParams.from_rates(10.0), PCSI, 20_000, seed=3)
    b = simulate_outage(OutageParams.from_rates(10.0), PCSI, 80_000, seed=3)
    assert b.half_width_m == pytest.approx(a.half_width_m / 2, rel=0.1)


def test_throughput_uses_the_identity():
    p = OutageParams.from_rates(100.0)
    est = simulate_outage(p, IPCSI, 30_000, seed=2)
    expected = system_throughput(est.p_n, est.p_m)
    assert simulate_throughput(p, csi=IPCSI, trials=30_000, seed=2) == expected


def test_sweep_points_share_draws():
    # with common draws, failures can only fall as the SNR rises under pCSI
    batch = simulate_outage_sweep(_base(), np.arange(0, 41, 4.0), PCSI, 50_000, seed=6)
    assert np.all(np.diff(batch.fail_n) <= 0)
    assert np.all(np.diff(batch.fail_m) <= 0)


def test_trials_must_be_positive():
    with pytest.raises(ValueError):
        simulate_outage_sweep(_base(), [0.0], PCSI, 0)
