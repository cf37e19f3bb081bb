import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bhnoma.errors import ParseError, ValidationError
from bhnoma.scenario import (EARTH_RADIUS, ScenarioConfig, db_to_linear, default_scenario_path, dump_scenario,
                             generate_users, linear_to_db, load_scenario, parse_scenario, slant_range)


def _cartesian(lon, lat, radius):
    lon, lat = np.radians(lon), np.radians(lat)
    return radius * np.array([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])


def test_reference_file_loads_with_linear_units():
    cfg = load_scenario(default_scenario_path())
    assert cfg.carrier_frequency == 11.7e9
    assert cfg.bandwidth_per_carrier == 200e6
    assert (cfg.window_slots, cfg.beam_count, cfg.max_active_beams) == (32, 48, 8)
    assert cfg.satellite_altitude == 1000e3
    assert cfg.noise_power == pytest.approx(10 ** -14.5, rel=1e-12)
    assert cfg.tx_power == pytest.approx(10 ** 0.5, rel=1e-12)
    assert cfg.rx_gain == pytest.approx(10 ** 4.21, rel=1e-12)
    assert cfg.tx_gain == pytest.approx(10 ** 4.96, rel=1e-12)


def test_reference_file_equals_defaults():
    assert load_scenario(default_scenario_path()).digest() == ScenarioConfig().digest()


def test_b0_above_b_names_the_invariant(tmp_path):
    path = tmp_path / "bad.scn"
    path.write_text("beam_count = 48\nmax_active_beams = 50\n")
    with pytest.raises(ValidationError, match="B0 <= B"):
        load_scenario(path)


def test_cd_mode_config_is_valid():
    cfg = parse_scenario("subcarriers_per_beam = 4\nmax_carriers_per_user = 2\n"
                         "users_per_beam = 8\ntotal_subcarriers = 16\n")
    assert cfg.mode == "CD"
    assert ScenarioConfig(subcarriers_per_beam=1, max_carriers_per_user=1).mode == "PD"


@pytest.mark.parametrize("changes, name", [
    (dict(subcarriers_per_beam=5), "1 <= K <= N"),
    (dict(max_carriers_per_user=5), "1 <= Q <= K"),
    (dict(users_per_beam=4), "M > K when K > 1"),
    (dict(channel_error_variance=-0.1), "omega* >= 0"),
    (dict(slot_overlap_fraction=1.5), "0 <= kappa <= 1"),
    (dict(demand_range=(2e9, 1e9)), "D_min <= D_max"),
    (dict(tx_power=0.0), "Ps > 0"),
    (dict(reuse_mode="three_color"), "reuse_mode"),
])
def test_invariant_violations_are_named(changes, name):
    with pytest.raises(ValidationError, match=name.replace("*", r"\*")):
        ScenarioConfig(**changes)


@pytest.mark.parametrize("text", ["beam_count 48", "unknown_key = 1", "beam_count = many", "demand_range = 1"])
def test_malformed_files_raise_parse_error(text):
    with pytest.raises(ParseError):
        parse_scenario(text)


def test_missing_file_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError):
        load_scenario(tmp_path / "absent.scn")


def test_dump_and_parse_round_trip():
    cfg = ScenarioConfig(beam_count=12, max_active_beams=2, reuse_mode="2c", beam_radius=1.5e5)
    back = parse_scenario(dump_scenario(cfg))
    for key, value in cfg.to_dict().items():
        if isinstance(value, float):
            assert getattr(back, key) == pytest.approx(value, rel=1e-12)
        else:
            assert getattr(back, key) == value or list(getattr(back, key)) == value


@given(st.floats(min_value=-200.0, max_value=200.0))
def test_db_round_trip(db):
    assert float(linear_to_db(db_to_linear(db))) == pytest.approx(db, rel=1e-12, abs=1e-12)


def test_reference_population():
    cfg = ScenarioConfig()
    users = generate_users(cfg, 1)
    assert len(users) == 384
    assert all(200e6 <= u.demand <= 1.4e9 for u in users)
    assert all(u.slant_distance >= cfg.satellite_altitude for u in users)
    counts = np.bincount([u.beam_id for u in users], minlength=cfg.beam_count)
    assert np.all(counts == cfg.users_per_beam)


def test_population_is_a_function_of_seed():
    cfg = ScenarioConfig(beam_count=6, max_active_beams=2)
    assert generate_users(cfg, 3) == generate_users(cfg, 3)
    d1 = sorted(u.demand for u in generate_users(cfg, 1))
    d2 = sorted(u.demand for u in generate_users(cfg, 2))
    assert d1 != d2


def test_users_belong_to_nearest_center():
    cfg = ScenarioConfig(beam_count=12, max_active_beams=2)
    centers = cfg.beam_centers
    sat_r = EARTH_RADIUS
    for u in generate_users(cfg, 5):
        p = _cartesian(u.lon, u.lat, sat_r)
        chord = [np.linalg.norm(p - _cartesian(c[0], c[1], sat_r)) for c in centers]
        best = min(chord)
        # the first beam within rounding of the minimum distance
        expected = next(b for b, d in enumerate(chord) if d <= best * (1 + 1e-12))
        assert u.beam_id == expected


def test_nadir_range_is_the_altitude():
    cfg = ScenarioConfig()
    assert float(slant_range(101.0, 0.0, cfg)) == pytest.approx(1000e3, abs=1e-6)


def test_corner_range_matches_vector_geometry():
    cfg = ScenarioConfig()
    sat = _cartesian(101.0, 0.0, EARTH_RADIUS + cfg.satellite_altitude)
    user = _cartesian(115.0, 15.0, EARTH_RADIUS)
    expected = float(np.linalg.norm(sat - user))
    got = float(slant_range(115.0, 15.0, cfg))
    assert got > 1000e3
    assert got == pytest.approx(expected, rel=1e-9)


@given(st.floats(0.0, 14.0), st.floats(0.0, 14.0))
def test_symmetric_users_have_equal_range(dlon, dlat):
    cfg = ScenarioConfig()
    a = float(slant_range(101.0 + dlon, dlat, cfg))
    b = float(slant_range(101.0 - dlon, -dlat, cfg))
    assert a == pytest.approx(b, rel=1e-12)
    assert a >= cfg.satellite_altitude

