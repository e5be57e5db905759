import copy
import json

import pytest

from snvtune.config import CONFIG_ENV, apply_overrides, load_config, serialize, validate
from snvtune.errors import ConfigError, UsageError, VersionError


@pytest.fixture
def data(config):
    return copy.deepcopy(config.data)


def test_default_config_parses(config):
    assert config.version == 1
    assert {e["id"] for e in config.data["emitters"]} >= {"SnV1", "SnV2"}


def test_round_trip(config, tmp_path):
    path = tmp_path / "c.json"
    path.write_text(serialize(config))
    again = load_config(path)
    assert again == config
    assert serialize(again) == serialize(config)


def test_version_mismatch(data):
    data["version"] = 2
    with pytest.raises(VersionError) as info:
        validate(data)
    assert info.value.found == 2 and info.value.expected == 1


def test_unknown_actuator_names_site(data):
    data["emitters"][0]["actuator"] = "zz"
    with pytest.raises(ConfigError) as info:
        validate(data)
    path, msg = info.value.violations[0]
    assert path == "/emitters/0/actuator"
    assert data["emitters"][0]["id"] in msg


def test_bad_voigt_length_reports_path(data):
    data["emitters"][1]["zpf"]["voigt"] = [0.0] * 7
    with pytest.raises(ConfigError) as info:
        validate(data)
    assert [p for p, _ in info.value.violations] == ["/emitters/1/zpf/voigt"]


def test_all_violations_collected(data):
    data["actuators"][0]["capacitance_f"] = -1.0
    data["spin"]["field_t"] = [0.1, 0.0]
    data["settings"]["seed"] = -4
    with pytest.raises(ConfigError) as info:
        validate(data)
    paths = {p for p, _ in info.value.violations}
    assert paths == {"/actuators/0/capacitance_f", "/spin/field_t", "/settings/seed"}


def test_mode_fractions_checked(data):
    em = next(e for e in data["emitters"] if e.get("modes"))
    em["modes"][0]["fraction"] += 0.5
    with pytest.raises(ConfigError, match="fractions"):
        validate(data)


def test_non_object_rejected():
    with pytest.raises(ConfigError):
        validate([1, 2])


def test_override_by_id_and_index(data):
    out = apply_overrides(data, ["emitters.SnV1.depth_nm=80", "emitters.0.linewidth_mhz=150",
                                 "network.elements.final.ratios=[0.4, 0.6]", "settings.seed=7"])
    assert out["emitters"][0]["depth_nm"] == 80
    assert out["emitters"][0]["linewidth_mhz"] == 150
    assert next(e for e in out["network"]["elements"] if e["name"] == "final")["ratios"] == [0.4, 0.6]
    assert out["settings"]["seed"] == 7
    assert data["settings"]["seed"] != 7 or data is not out


@pytest.mark.parametrize("item", ["noequals", "emitters.nope.depth_nm=1", "spin.field_t.9=1",
                                  "version.x=1"])
def test_bad_override(data, item):
    with pytest.raises(UsageError):
        apply_overrides(data, [item])


def test_override_that_breaks_schema(tmp_path, config):
    path = tmp_path / "c.json"
    path.write_text(serialize(config))
    with pytest.raises(ConfigError):
        load_config(path, ["emitters.SnV1.depth_nm=-5"])


def test_env_var_selects_config(monkeypatch, tmp_path, data):
    data["description"] = "from env"
    path = tmp_path / "env.json"
    path.write_text(json.dumps(data))
    monkeypatch.setenv(CONFIG_ENV, str(path))
    cfg = load_config()
    assert cfg.data["description"] == "from env"
    assert cfg.source == str(path)


def test_unreadable_and_malformed(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
