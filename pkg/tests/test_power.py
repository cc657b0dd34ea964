import math
from dataclasses import replace

import numpy as np
import pytest

from plspower.dataio import PilotSpec, gen_pilot
from plspower.errors import InvalidInput, PowerRunFailed
from plspower.kernels import STAT_KINDS
from plspower.power import (
    IterationRecord,
    PowerConfig,
    estimate_power,
    estimate_power_all,
    estimate_sample_size,
    iteration_rng,
    power_curve,
    summarize,
    worker_count,
)
from plspower.preprocess import Dataset


def null_pilot(n_per_class=500, p=5, seed=5):
    # large pilots keep the sample class effect that the simulator inherits negligible
    r = np.random.default_rng(seed)
    return Dataset(r.standard_normal((2 * n_per_class, p)), np.repeat([1, 2], n_per_class))


def strong_pilot(seed=0):
    return gen_pilot(PilotSpec(n_per_class=10, mu=8.0, p_noise=5, seed=seed))


def binomial_band(p, n, z=2.576):
    half = z * math.sqrt(p * (1 - p) / n)
    return p - half, p + half


def test_config_validation():
    with pytest.raises(InvalidInput):
        PowerConfig(alpha=1.5)
    with pytest.raises(InvalidInput):
        PowerConfig(J=1)
    with pytest.raises(InvalidInput):
        PowerConfig(n1=1)
    with pytest.raises(InvalidInput):
        PowerConfig(stat="auc")
    assert PowerConfig(stat="ScoreT").stat == "score"
    assert PowerConfig().with_n(9).n2 == 9


def test_worker_count(monkeypatch):
    monkeypatch.setenv("PLSPOWER_THREADS", "3")
    assert worker_count() == 3 and worker_count(2) == 2
    monkeypatch.setenv("PLSPOWER_THREADS", "many")
    with pytest.raises(InvalidInput):
        worker_count()


def test_iteration_streams_are_independent_of_order():
    a = iteration_rng(7, 3).standard_normal(4)
    iteration_rng(7, 2).standard_normal(10)
    assert np.array_equal(a, iteration_rng(7, 3).standard_normal(4))
    assert not np.array_equal(a, iteration_rng(7, 4).standard_normal(4))


def test_power_accounting():
    cfg = PowerConfig(A=1, I=30, J=40, n1=5, n2=5, seed=2)
    est = estimate_power(strong_pilot(), cfg)
    assert est.power == est.rejections / est.I
    assert est.mc_stderr == pytest.approx(math.sqrt(est.power * (1 - est.power) / est.I))
    assert len(est.per_iteration) == 30 and est.stat == "r2"


def test_reproducible_across_worker_counts():
    pilot = strong_pilot(1)
    base = PowerConfig(A=2, I=12, J=30, n1=4, n2=6, seed=11)
    results = [estimate_power_all(pilot, replace(base, threads=t)) for t in (1, 3)]
    for kind in STAT_KINDS:
        a, b = results[0][kind], results[1][kind]
        assert a.to_dict(True) == b.to_dict(True)


def test_rejections_follow_adjusted_p():
    cfg = PowerConfig(A=2, I=20, J=40, n1=5, n2=5, seed=4)
    est = estimate_power_all(strong_pilot(), cfg)
    for kind in STAT_KINDS:
        for rec in est[kind].per_iteration:
            assert rec.reject[kind] == (min(2 * rec.p_raw[kind], 1.0) <= cfg.alpha)
        raw_power = np.mean([r.p_raw[kind] <= cfg.alpha for r in est[kind].per_iteration])
        assert est[kind].power <= raw_power


def test_h0_pilot_power_small():
    est = estimate_power(null_pilot(), PowerConfig(A=1, I=200, J=200, n1=20, n2=20, seed=1))
    assert 0.0 <= est.power <= 0.10


@pytest.mark.slow
@pytest.mark.parametrize("A", [1, 2])
def test_h0_power_band(A):
    est = estimate_power_all(null_pilot(), PowerConfig(A=A, I=500, J=200, n1=20, n2=20, seed=1))
    lo, hi = binomial_band(0.05, 500)
    for kind in STAT_KINDS:
        assert est[kind].power <= hi
        if A == 1:
            # Bonferroni at A > 1 is conservative, so only A = 1 has a lower bound
            assert est[kind].power >= lo


def test_sample_size_saturated():
    res = estimate_sample_size(strong_pilot(), PowerConfig(I=20, J=50), 0.2, 5, 10)
    assert res.reached and res.n_hat == 5 and len(res.trace) == 1


def test_sample_size_not_reached_under_h0():
    cfg = PowerConfig(I=20, J=50, seed=3)
    res = estimate_sample_size(null_pilot(), cfg, 0.2, 5, 20, step=5)
    assert not res.reached and res.n_hat is None
    assert [n for n, _ in res.trace] == [5, 10, 15, 20]


def test_sample_size_r2_needs_no_more_than_mcc():
    pilot = gen_pilot(PilotSpec(n_per_class=8, a_pilot=2, mu=2.0, seed=3))
    need = {}
    for stat in ("r2", "mcc"):
        cfg = PowerConfig(A=2, stat=stat, I=40, J=100, seed=0)
        need[stat] = estimate_sample_size(pilot, cfg, 0.2, 4, 30, step=2).n_hat or 99
    assert need["r2"] <= need["mcc"]


def test_sample_size_validation():
    with pytest.raises(InvalidInput):
        estimate_sample_size(strong_pilot(), PowerConfig(), 1.2, 5, 10)
    with pytest.raises(InvalidInput):
        estimate_sample_size(strong_pilot(), PowerConfig(), 0.2, 10, 5)


def test_curve_single_cell_matches_estimate():
    pilot = strong_pilot(2)
    cfg = PowerConfig(A=1, I=15, J=40, n1=6, n2=6, seed=8)
    rows = power_curve(pilot, cfg, [6], [1])
    assert len(rows) == 1
    assert rows[0][2]["r2"].to_dict(True) == estimate_power(pilot, cfg).to_dict(True)


def test_curve_grid_shape():
    rows = power_curve(strong_pilot(), PowerConfig(I=3, J=10), [4, 5, 6, 7, 8, 9], [1, 2, 3, 4])
    assert len(rows) == 24
    assert {(A, n) for A, n, _ in rows} == {(A, n) for A in (1, 2, 3, 4) for n in range(4, 10)}


def record(i, failed=None):
    p = {k: 0.01 for k in STAT_KINDS}
    return IterationRecord(i, p, p, {k: True for k in STAT_KINDS}, 1, 1, 0, 0, 5, failed)


def test_failure_tolerance():
    cfg = PowerConfig(I=100)
    ok = summarize([record(i) for i in range(98)] + [record(98, "x"), record(99, "y")], cfg, "r2")
    assert ok.I == 98 and ok.n_failed == 2 and ok.power == 1.0
    with pytest.raises(PowerRunFailed):
        summarize([record(i) for i in range(97)] + [record(i, "x") for i in range(97, 100)],
                  cfg, "r2")
