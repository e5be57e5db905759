import os

import numpy as np
import pytest

from snvtune import records
from snvtune.spectroscopy.synth import PLESpectrum


def test_atomic_write_leaves_no_temp(tmp_path):
    path = tmp_path / "sub" / "a.txt"
    records.atomic_write_text(path, "one\n")
    records.atomic_write_text(path, "two\n")
    assert path.read_text() == "two\n"
    assert os.listdir(path.parent) == ["a.txt"]


def test_atomic_write_failure_keeps_old(tmp_path):
    path = tmp_path / "a.txt"
    records.atomic_write_text(path, "old\n")

    class Boom:
        def __str__(self):
            raise RuntimeError

    with pytest.raises(TypeError):
        records.atomic_write_text(path, Boom())
    assert path.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["a.txt"]


def test_spectrum_round_trip(tmp_path):
    x = np.linspace(-1, 1, 11)
    y = np.exp(-x**2) * 1/3
    records.write_spectrum(tmp_path / "s.csv", PLESpectrum(x, y, {}))
    back = records.read_spectrum(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.detuning, x)
    np.testing.assert_array_equal(back.signal, y)


def test_read_spectrum_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        records.read_spectrum(p)
    p.write_text("detuning_ghz,signal\n")
    with pytest.raises(ValueError, match="no samples"):
        records.read_spectrum(p)


def test_json_handles_numpy():
    text = records.json_text({"a": np.float64(1.5), "b": np.arange(3), "c": np.bool_(True), 2: np.int64(4)})
    assert text == '{\n  "2": 4,\n  "a": 1.5,\n  "b": [\n    0,\n    1,\n    2\n  ],\n  "c": true\n}\n'


def test_csv_formatting():
    assert records.csv_text(["a", "b"], [(np.float64(0.1), np.int64(3))]) == "a,b\n0.1,3\n"
