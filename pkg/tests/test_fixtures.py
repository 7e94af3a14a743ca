import json
from fractions import Fraction

import numpy as np
import pytest

from aplab.fixtures import FIXTURE_PATH, FIXTURES, canonical, compute, load_fixtures, regenerate, verify_fixtures


def test_canonical_forms():
    assert canonical({"b": (1, 2.0), "a": Fraction(1, 3)}) == {"a": "1/3", "b": [1, 2.0]}
    assert canonical(np.array([1, 2])) == [1, 2]
    assert canonical(0.1 + 0.2) == 0.3
    assert canonical(np.int64(5)) == 5


def test_stored_fixtures_pass():
    report = verify_fixtures()
    assert report["ok"], report
    assert sorted(report["passed"]) == sorted(FIXTURES)


def test_drift_is_named(tmp_path):
    data = load_fixtures()
    data["density_of_primes"] = {"tampered": True}
    path = tmp_path / "fx.json"
    path.write_text(json.dumps(data))
    report = verify_fixtures(path, ["density_of_primes", "random_set_n1024"])
    assert report["drifts"] == ["density_of_primes"]
    assert report["passed"] == ["random_set_n1024"]
    assert not report["ok"]


def test_missing_and_unknown_entries(tmp_path):
    path = tmp_path / "fx.json"
    path.write_text(json.dumps({"stale": 1}))
    report = verify_fixtures(path, ["density_of_primes"])
    assert report["missing"] == ["density_of_primes"] and report["unknown"] == ["stale"]


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        verify_fixtures(tmp_path / "absent.json")


def test_regenerate_writes_selected(tmp_path):
    path = tmp_path / "fx.json"
    regenerate(path, ["density_of_primes"])
    assert verify_fixtures(path, ["density_of_primes"])["ok"]
    assert list(load_fixtures(path)) == ["density_of_primes"]


def test_fixture_file_is_packaged():
    assert FIXTURE_PATH.exists()
    assert compute("random_set_n1024") == load_fixtures()["random_set_n1024"]
