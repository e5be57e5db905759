import filecmp
import json
import os

import pytest

from snvtune.errors import StatisticsError, UsageError
from snvtune.scenarios import SCENARIOS, ScenarioFailure, run_scenario


@pytest.fixture(scope="module")
def all_runs(config, tmp_path_factory):
    root = tmp_path_factory.mktemp("all")
    return root, {n: run_scenario(n, config, seed=12345, out_dir=root / n) for n in SCENARIOS}


def test_unknown_scenario(config):
    with pytest.raises(UsageError):
        run_scenario("nope", config)


def test_manifest_files_exist_and_parse(all_runs):
    root, runs = all_runs
    for name, res in runs.items():
        assert sorted(os.listdir(root / name)) == res.manifest
        doc = json.loads((root / name / "summary.json").read_text())
        assert doc["scenario"] == name
        assert doc["inputs"]["seed"] == 12345
        for fname in res.manifest:
            if fname.endswith(".csv"):
                lines = (root / name / fname).read_text().splitlines()
                assert len(lines) >= 2 and "," in lines[0]


@pytest.mark.parametrize("name", ["dc-tuning", "sideband-comb", "g2"])
def test_byte_identical_reruns(config, all_runs, tmp_path, name):
    root, runs = all_runs
    again = run_scenario(name, config, seed=12345, out_dir=tmp_path)
    match, mismatch, errors = filecmp.cmpfiles(root / name, tmp_path, again.manifest, shallow=False)
    assert mismatch == [] and errors == []


def test_seed_changes_noisy_output(config, tmp_path):
    a = run_scenario("dc-tuning", config, seed=1, out_dir=tmp_path / "a")
    b = run_scenario("dc-tuning", config, seed=2, out_dir=tmp_path / "b")
    assert (tmp_path / "a" / "dc_tuning.csv").read_bytes() != (tmp_path / "b" / "dc_tuning.csv").read_bytes()
    assert a.manifest == b.manifest


def test_failure_is_wrapped_and_leaves_nothing(config, tmp_path):
    with pytest.raises(ScenarioFailure) as info:
        run_scenario("g2", config, overrides={"duration_s": 1e-6}, out_dir=tmp_path)
    assert info.value.scenario == "g2"
    assert isinstance(info.value.cause, StatisticsError)
    assert "g2" in str(info.value)
    assert os.listdir(tmp_path) == []


def test_scenario_overrides_recorded(config):
    res = run_scenario("power-budget", config, overrides={"hold_v": 30.0})
    assert res.inputs["params"]["hold_v"] == 30.0
    assert res.out_dir is None
