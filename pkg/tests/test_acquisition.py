"""Scan synthesis, noise reproducibility, persistence, and calibration."""

import math

import pytest

from pitomo.acquisition import (CalibrationResult, ScanPlan, ScanRecord,
                                calibration_from_json, calibration_to_json,
                                load_scan, run_calibration, run_scan,
                                scan_from_csv, scan_from_json, scan_to_csv,
                                scan_to_json)
from pitomo.interferometer import (InterferometerConfig, SignalSetting,
                                   rates_closed_form, visibilities_closed_form)
from pitomo.states import IdlerStateParams


def balanced(idler=None, **kw):
    return InterferometerConfig.balanced(idler or IdlerStateParams(0.3, 1.2, 0.9),
                                         **kw)


# ---------------------------------------------------------------------------
# plans


def test_plan_validation():
    with pytest.raises(ValueError):
        ScanPlan((0.0, 0.1, 0.2, 0.3), 100, SignalSetting.H, 1)  # 4 points
    with pytest.raises(ValueError):
        ScanPlan((0.0, 0.2, 0.1, 0.3, 0.4), 100, SignalSetting.H, 1)
    with pytest.raises(ValueError):
        ScanPlan((0.0, 1.0, 2.0, 4.0, 7.0), 100, SignalSetting.H, 1)  # > 2*pi
    with pytest.raises(ValueError):
        ScanPlan.default_grid(SignalSetting.H, seed=1, counts_per_point=0)
    plan = ScanPlan.default_grid(SignalSetting.V, seed=3)
    assert len(plan.phases) == 20
    assert plan.phases[0] == 0.0


# ---------------------------------------------------------------------------
# scans


def test_noiseless_counts_are_rounded_rates():
    cfg = balanced(IdlerStateParams.horizontal())
    plan = ScanPlan.default_grid(SignalSetting.H, seed=9, counts_per_point=1000,
                                 noiseless=True)
    record = run_scan(cfg, plan)
    for phi, c in zip(plan.phases, record.counts_primary):
        rate = rates_closed_form(cfg.with_phi(phi)).rate_h
        assert c == round(1000 * rate)


def test_noiseless_quadrature_point():
    # cosine vanishes at phi = pi/2, leaving the source-1 weight
    cfg = balanced(IdlerStateParams.horizontal())
    plan = ScanPlan((0.1, 0.3, math.pi / 2, 2.0, 3.0), 999, SignalSetting.H,
                    seed=0, noiseless=True)
    record = run_scan(cfg, plan)
    assert record.counts_primary[2] == round(999 * cfg.b1 ** 2)


def test_noiseless_independent_of_seed():
    cfg = balanced()
    a = run_scan(cfg, ScanPlan.default_grid(SignalSetting.H, 1, noiseless=True))
    b = run_scan(cfg, ScanPlan.default_grid(SignalSetting.H, 2, noiseless=True))
    assert a.counts_primary == b.counts_primary


def test_noisy_scan_deterministic_per_seed():
    cfg = balanced()
    plan = ScanPlan.default_grid(SignalSetting.H, seed=123)
    a = run_scan(cfg, plan)
    b = run_scan(cfg, plan)
    assert a.counts_primary == b.counts_primary
    assert a.counts_constant == b.counts_constant
    c = run_scan(cfg, ScanPlan.default_grid(SignalSetting.H, seed=124))
    assert c.counts_primary != a.counts_primary


def test_channels_and_settings_use_distinct_streams():
    cfg = balanced(IdlerStateParams(0.5, 0.0, 1.0))
    plan_h = ScanPlan.default_grid(SignalSetting.H, seed=5)
    plan_v = ScanPlan.default_grid(SignalSetting.V, seed=5)
    h = run_scan(cfg, plan_h)
    v = run_scan(cfg, plan_v)
    assert h.counts_primary != v.counts_primary
    assert h.counts_primary != h.counts_constant


def test_counts_nonnegative_integers():
    cfg = balanced()
    for seed in range(5):
        rec = run_scan(cfg, ScanPlan.default_grid(SignalSetting.V, seed,
                                                  counts_per_point=50))
        assert all(isinstance(c, int) and c >= 0 for c in rec.counts_primary)


def test_empirical_visibility_matches_closed_form():
    # extrema on the grid (xi = 0, real transmissions), so the empirical
    # contrast is rounding-limited
    n = 10 ** 6
    idler = IdlerStateParams(0.4, 0.0, 0.8)
    cfg = balanced(idler, t_h=0.9, t_v=0.8)
    v_h, v_v = visibilities_closed_form(cfg)
    for setting, expected in ((SignalSetting.H, v_h), (SignalSetting.V, v_v)):
        plan = ScanPlan.default_grid(setting, 0, counts_per_point=n,
                                     noiseless=True)
        rec = run_scan(cfg, plan)
        hi, lo = max(rec.counts_primary), min(rec.counts_primary)
        measured = (hi - lo) / (hi + lo)
        assert abs(measured - expected) <= 2.0 / n


def test_record_length_validation():
    plan = ScanPlan.default_grid(SignalSetting.H, 1)
    with pytest.raises(ValueError):
        ScanRecord(plan, (1,) * 19, (1,) * 20)
    with pytest.raises(ValueError):
        ScanRecord(plan, (-1,) + (1,) * 19, (1,) * 20)


# ---------------------------------------------------------------------------
# persistence


def test_csv_round_trip(tmp_path):
    cfg = balanced()
    rec = run_scan(cfg, ScanPlan.default_grid(SignalSetting.V, seed=77, counts_per_point=321))
    path = tmp_path / "scan.csv"
    scan_to_csv(rec, path)
    back = scan_from_csv(path)
    assert back.counts_primary == rec.counts_primary
    assert back.counts_constant == rec.counts_constant
    assert back.plan.phases == rec.plan.phases
    assert back.plan.seed == 77
    assert back.plan.counts_per_point == 321
    assert back.plan.setting is SignalSetting.V
    header = path.read_text().splitlines()[0]
    assert header == "# setting=V seed=77 n=321"


def test_json_round_trip(tmp_path):
    cfg = balanced()
    rec = run_scan(cfg, ScanPlan.default_grid(SignalSetting.H, seed=8))
    path = tmp_path / "scan.json"
    scan_to_json(rec, path)
    back = scan_from_json(path)
    assert back == rec  # includes plan, counts and embedded truth config


def test_load_scan_dispatch(tmp_path):
    cfg = balanced()
    rec = run_scan(cfg, ScanPlan.default_grid(SignalSetting.H, seed=8))
    scan_to_csv(rec, tmp_path / "s.csv")
    scan_to_json(rec, tmp_path / "s.json")
    assert load_scan(tmp_path / "s.csv").counts_primary == rec.counts_primary
    assert load_scan(tmp_path / "s.json") == rec
    with pytest.raises(ValueError):
        load_scan(tmp_path / "s.txt")


def test_csv_rejects_garbage(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("phi,counts\n0,1\n")
    with pytest.raises(ValueError):
        scan_from_csv(p)


# ---------------------------------------------------------------------------
# calibration


def test_calibration_recovers_transmissions_noiselessly():
    cfg = balanced(t_h=0.85, t_v=0.73)
    plan = ScanPlan.default_grid(SignalSetting.H, 0, counts_per_point=10 ** 8,
                                 noiseless=True)
    cal = run_calibration(cfg, plan)
    assert abs(cal.t_h - 0.85) < 1e-6
    assert abs(cal.t_v - 0.73) < 1e-6


def test_calibration_ideal_transmissions():
    cfg = balanced(t_h=1.0, t_v=1.0)
    plan = ScanPlan.default_grid(SignalSetting.H, 0, counts_per_point=10 ** 8,
                                 noiseless=True)
    cal = run_calibration(cfg, plan)
    assert abs(cal.t_h - 1.0) < 1e-6
    assert abs(cal.t_v - 1.0) < 1e-6


def test_calibration_reproducible_and_noisy_coverage():
    cfg = balanced(t_h=1.0, t_v=1.0)
    plan = ScanPlan.default_grid(SignalSetting.H, 42, counts_per_point=10 ** 4)
    a = run_calibration(cfg, plan)
    b = run_calibration(cfg, plan)
    assert a == b
    # coverage of the true value within 3 fitted standard errors
    hits = 0
    trials = 500
    for seed in range(trials):
        p = ScanPlan.default_grid(SignalSetting.H, seed, counts_per_point=10 ** 4)
        cal = run_calibration(cfg, p)
        if (abs(cal.t_h - 1.0) <= 3 * cal.t_h_stderr
                and abs(cal.t_v - 1.0) <= 3 * cal.t_v_stderr):
            hits += 1
    assert hits >= 0.99 * trials


def test_calibration_requires_balanced_template():
    cfg = InterferometerConfig(b1=0.9, b2_mag=math.sqrt(1 - 0.81),
                               idler=IdlerStateParams.horizontal())
    with pytest.raises(ValueError):
        run_calibration(cfg, ScanPlan.default_grid(SignalSetting.H, 0))


def test_calibration_json_round_trip(tmp_path):
    cal = CalibrationResult(0.85, 0.003, 0.73, 0.002)
    calibration_to_json(cal, tmp_path / "cal.json")
    assert calibration_from_json(tmp_path / "cal.json") == cal
