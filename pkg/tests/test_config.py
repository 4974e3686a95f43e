import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magsense.config import SCENARIOS, config_hash, config_to_text, default_config, load_config, parse_config_text
from magsense.errors import ConfigError


@pytest.mark.parametrize("name", SCENARIOS)
def test_text_round_trip(name):
    cfg = default_config(name)
    back = parse_config_text(config_to_text(cfg))
    assert back == cfg
    assert config_hash(back) == config_hash(cfg)


def test_overrides_apply():
    cfg = parse_config_text("[scenario]\nname = noncontact\nseed = 7\n[noise]\ngaussian_sd = 0\n")
    assert cfg["scenario"] == {"name": "noncontact", "seed": 7}
    assert cfg["noise"]["gaussian_sd"] == 0.0
    assert cfg["placement"]["depth"] == 2.5e-3
    assert cfg["protocol"]["temperatures"] == [23.0, 30.0, 40.0]


def test_hash_sensitive_to_values():
    a = default_config("tensile_cal")
    b = default_config("tensile_cal")
    b["scenario"]["seed"] = 1
    assert config_hash(a) != config_hash(b)
    assert config_hash(default_config("temp_cal")) != config_hash(a)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.floats(0, 1e-8, allow_nan=False))
def test_hash_reproducible(seed, sd):
    text = f"[scenario]\nname = temp_cal\nseed = {seed}\n[noise]\ngaussian_sd = {sd!r}\n"
    assert config_hash(parse_config_text(text)) == config_hash(parse_config_text(text))


@pytest.mark.parametrize("text", [
    "[nonsense]\nx = 1\n",
    "[noise]\nbogus = 1\n",
    "[scenario]\nname = nowhere\n",
    "[scenario]\nseed = many\n",
    "[placement]\nskin_effect = maybe\n",
    "not an ini file",
])
def test_strict_rejection(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")
