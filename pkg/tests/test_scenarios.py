import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from magsense import scenarios as S
from magsense.config import default_config
from magsense.runner import stack_coupons


def test_sensitivity_ratio_contact_is_one():
    assert S.sensitivity_ratio(default_config("tensile_cal")) == 1.0
    assert S.sensitivity_ratio(default_config("noncontact")) > 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 3e-3), st.floats(0, 2e-3), st.floats(1e-5, 1e-3))
def test_sensitivity_ratio_grows_with_standoff(depth, liftoff, extra):
    cfg = default_config("noncontact")
    near = S._with_placement(cfg, depth, liftoff)
    far = S._with_placement(cfg, depth + extra, liftoff)
    assert S.sensitivity_ratio(far) > S.sensitivity_ratio(near)


def test_tensile_protocol_shape():
    cfg = default_config("tensile_cal")
    ds = S.simulate_tensile_cal(cfg)
    assert sorted(np.unique(ds.ref_temp_c)) == [23.0, 40.0]
    assert np.unique(ds.cycle_id).size == 8
    assert np.nanmax(ds.ref_stress_pa) == cfg["protocol"]["max_stress"]


def test_temp_cal_has_no_strain_channel():
    ds = S.simulate_temp_cal(default_config("temp_cal"))
    assert np.all(np.isnan(ds.l_strain_ch_h)) and np.all(np.isnan(ds.ref_strain))
    assert np.ptp(ds.ref_temp_c) == 70.0


def test_fatigue_coupons_independent_of_pool():
    cfg = default_config("fatigue_monitor")
    runs = S.simulate_fatigue(cfg, n_coupons=4)
    alone = S.run_coupon(cfg, 2, runs[2].a0)
    assert np.array_equal(alone.dataset.l_strain_ch_h, runs[2].dataset.l_strain_ch_h)
    stacked = stack_coupons([r.dataset for r in runs])
    assert np.all(np.diff(stacked.time_s) >= 0)
    assert sorted(np.unique(stacked.block_id)) == [0, 1, 2, 3]
