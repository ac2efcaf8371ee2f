import math

import pytest

from secfc.bench import BenchSpec, linear_r2, privacy_for, relative_spread, run_bench
from secfc.errors import ConfigError


def test_privacy_for_sweep_points():
    assert privacy_for(10) == (4, 1)
    assert privacy_for(5) == (2, 1)
    with pytest.raises(ConfigError):
        privacy_for(4)


def test_spec_validation():
    with pytest.raises(ConfigError):
        BenchSpec({"n": [5], "m": [10]})
    with pytest.raises(ConfigError):
        BenchSpec({})
    with pytest.raises(ConfigError):
        BenchSpec({"n": [4]})
    with pytest.raises(ConfigError):
        BenchSpec({"d": []})
    assert BenchSpec({"d": [2, 4]}).point(4) == {"n": 10, "d": 4, "m": 1000}


def test_fit_helpers():
    assert linear_r2([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert linear_r2([1, 2, 3], [1, 1, 1]) == 1.0
    assert relative_spread([1.0, 1.2]) == pytest.approx(0.2)


def test_small_sweep(tmp_path):
    rows = run_bench(BenchSpec({"n": [5, 7]}, d=4, m=40, k=2, repeats=1), out=tmp_path / "b.csv")
    assert [r["t"] for r in rows] == [math.ceil(5 / 3), math.ceil(7 / 3)]
    assert all(r["secfc_client_s"] > 0 and r["secfc_server_s"] > 0 for r in rows)
