import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from noma_v2i.scenario import (
    ConfigError,
    config_from_dict,
    dbm_to_watt,
    load_config,
    reference_scenario,
    save_config,
    spectral_threshold,
    watt_to_dbm,
)

from .conftest import CONFIG_DIR


def test_reference_config_loads():
    cfg = load_config(CONFIG_DIR / "single_placement.json")
    assert cfg == reference_scenario()
    assert (cfg.T, cfg.N, cfg.delta) == (4, 13, 0.1)
    assert cfg.P_w == pytest.approx(1.0, rel=1e-12)
    assert cfg.sigma1_sq_w == pytest.approx(1e-10, rel=1e-12)
    assert cfg.sigma2_sq_w == pytest.approx(1e-10, rel=1e-12)
    assert len(cfg.power_set) == 8


def test_round_trip_through_file(tmp_path):
    cfg = reference_scenario(delta=0.05)
    save_config(cfg, tmp_path / "c.json")
    assert load_config(tmp_path / "c.json") == cfg


def _raw(**changes):
    data = reference_scenario().to_dict()
    data.update(changes)
    return data


@pytest.mark.parametrize("changes, match", [
    (dict(power_set=[[0.6, 0.6]]), "V1 \\+ V2 > 1"),
    (dict(power_set=[[-0.1, 0.5]]), "negative"),
    (dict(delta=1.5), "delta"),
    (dict(T=0), "T must be"),
    (dict(N=2.5), "N must be"),
    (dict(rate_set_1=[1, 2]), "contain 0"),
    (dict(rate_set_2=[0, 2, 1]), "strictly increasing"),
    (dict(beta1=0.0), "beta1"),
    (dict(power_set=[]), "power_set"),
])
def test_invariant_violations(changes, match):
    with pytest.raises(ConfigError, match=match):
        config_from_dict(_raw(**changes))


def test_unknown_and_missing_keys():
    with pytest.raises(ConfigError, match="unknown config keys: colour"):
        config_from_dict(_raw(colour="red"))
    data = _raw()
    del data["Y2"]
    with pytest.raises(ConfigError, match="missing config keys: Y2"):
        config_from_dict(data)


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{ T: 4 ")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_partial_power_pairs_are_allowed():
    cfg = reference_scenario(power_set=((0.2, 0.3), (0.0, 0.0)))
    assert cfg.power_set[0] == (0.2, 0.3)


def _threshold_by_bisection(Y, r, tau_w):
    # smallest SINR whose capacity tau*W/Y*log2(1+x) reaches r
    lo, hi = 0.0, 1e6
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tau_w / Y * math.log2(1 + mid) >= r:
            hi = mid
        else:
            lo = mid
    return hi


@pytest.mark.parametrize("Y, r, expected", [
    (1500, 1, 1.8284271247461903),
    (1650, 2, 8.849155306759329),
    (1500, 0, 0.0),
])
def test_spectral_threshold(Y, r, expected):
    value = spectral_threshold(Y, r, 1e-3, 1e6)
    assert value == pytest.approx(expected, rel=1e-12)
    assert value == pytest.approx(_threshold_by_bisection(Y, r, 1000.0), rel=1e-9, abs=1e-12)


@given(st.floats(-200, 100))
def test_dbm_round_trip(dbm):
    assert watt_to_dbm(dbm_to_watt(dbm)) == pytest.approx(dbm, rel=1e-12, abs=1e-12)
    w = dbm_to_watt(dbm)
    assert dbm_to_watt(watt_to_dbm(w)) == pytest.approx(w, rel=1e-12)


@given(st.integers(1, 5000), st.integers(0, 6), st.integers(0, 6))
def test_threshold_monotone(Y, r_a, r_b):
    lo, hi = sorted((r_a, r_b))
    assert spectral_threshold(Y, lo, 1e-3, 1e6) <= spectral_threshold(Y, hi, 1e-3, 1e6)
    assert spectral_threshold(Y, 1, 1e-3, 1e6) <= spectral_threshold(Y + 1, 1, 1e-3, 1e6)
    assert (spectral_threshold(Y, r_a, 1e-3, 1e6) == 0) == (r_a == 0)


def test_config_is_hashable_and_immutable(cfg):
    hash(cfg)
    with pytest.raises(Exception):
        cfg.T = 5
