import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secfc.datagen import (
    MixtureConfig,
    PartitionConfig,
    client_indices,
    cluster_holders,
    generate_mixture,
    load_csv,
    partition_to_clients,
    write_csv,
)
from secfc.errors import ConfigError, DataFormatError


def test_mixture_basics():
    data = generate_mixture(MixtureConfig(4, 1000, 3, 1.0, seed=0))
    assert data.points.shape == (1000, 3)
    assert np.bincount(data.meta["components"], minlength=4).tolist() == [250] * 4
    C = np.array(data.meta["centers"])
    d2 = ((data.points[:, None] - C[None]) ** 2).sum(-1)
    assert np.array_equal(data.labels, d2.argmin(1))


def test_tiny_sigma_labels_equal_components():
    data = generate_mixture(MixtureConfig(5, 100, 4, 1e-9, seed=3))
    assert data.labels.tolist() == data.meta["components"]


def test_single_component():
    assert set(generate_mixture(MixtureConfig(1, 20, 2, 3.0)).labels.tolist()) == {0}


def test_component_variance():
    sigma = 2.0
    data = generate_mixture(MixtureConfig(2, 1000, 5, sigma, seed=9))
    comp = np.array(data.meta["components"])
    C = np.array(data.meta["centers"])
    for h in range(2):
        var = (data.points[comp == h] - C[h]).var(axis=0)
        assert np.all(np.abs(var / sigma**2 - 1) < 0.2)


def test_determinism():
    a = generate_mixture(MixtureConfig(3, 50, 2, 1.0, seed=4))
    b = generate_mixture(MixtureConfig(3, 50, 2, 1.0, seed=4))
    assert np.array_equal(a.points, b.points)
    pa = client_indices(a.labels, 3, PartitionConfig(4, 2, 1))
    pb = client_indices(b.labels, 3, PartitionConfig(4, 2, 1))
    assert all(np.array_equal(x, y) for x, y in zip(pa, pb))


def test_config_validation():
    with pytest.raises(ConfigError):
        MixtureConfig(2, 10, 2, 0.0)
    with pytest.raises(ConfigError):
        PartitionConfig(3, 0)
    with pytest.raises(ConfigError, match="infeasible"):
        cluster_holders(8, PartitionConfig(3, 2))


def test_one_cluster_per_client():
    labels = np.repeat(np.arange(4), 5)
    parts = client_indices(labels, 4, PartitionConfig(4, 1))
    assert [sorted(set(labels[p])) for p in parts] == [[0], [1], [2], [3]]


def test_iid_split_is_even():
    labels = np.repeat(np.arange(4), 100)
    parts = client_indices(labels, 4, PartitionConfig(10, 4))
    assert all(len(set(labels[p])) == 4 for p in parts)
    assert sorted(len(p) for p in parts) == [40] * 10


@settings(max_examples=50)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 12), st.integers(1, 6))
def test_partition_properties(seed, k, n, kp):
    kp = min(kp, k)
    if n * kp < k:
        return
    labels = np.random.default_rng(seed).integers(0, k, 120)
    parts = client_indices(labels, k, PartitionConfig(n, kp, seed))
    allidx = np.concatenate(parts)
    assert sorted(allidx.tolist()) == list(range(120))
    assert all(len(set(labels[p].tolist())) <= kp for p in parts)


def test_partition_to_clients_returns_subsets():
    data = generate_mixture(MixtureConfig(3, 30, 2, 1.0, seed=0))
    parts, idx = partition_to_clients(data, PartitionConfig(3, 1, 0), 3)
    for p, ix in zip(parts, idx):
        assert p.ids.tolist() == data.ids[ix].tolist()


def test_csv_roundtrip(tmp_path):
    data = generate_mixture(MixtureConfig(3, 40, 4, 1.5, seed=2))
    path = write_csv(data, tmp_path / "d.csv")
    back = load_csv(path)
    assert np.array_equal(back.points, data.points)
    assert np.array_equal(back.labels, data.labels)
    assert back.ids.tolist() == data.ids.tolist()
    assert back.meta["k"] == 3 and back.meta["max_abs"] == float(np.abs(data.points).max())


def test_csv_fixture_without_labels(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("id,f_1,f_2\nx,1,2\ny,3.5,-4\nz,0,0\n")
    ds = load_csv(p)
    assert ds.ids.tolist() == ["x", "y", "z"]
    assert ds.labels is None and ds.d == 2


def test_csv_header_only(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("id,label,f_1\n")
    ds = load_csv(p)
    assert ds.m == 0 and ds.d == 1


@pytest.mark.parametrize("body,row", [
    ("id,f_1,f_2\na,1,2\nb,3\n", 3),
    ("id,f_1\na,1\na,2\n", 3),
    ("id,f_1\na,1\nb,x\n", 3),
    ("id,label,f_1\na,one,1\n", 2),
    ("", 1),
])
def test_csv_errors_carry_row_numbers(tmp_path, body, row):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DataFormatError) as err:
        load_csv(p)
    assert err.value.row == row
    assert str(err.value).startswith(f"row {row}:")
