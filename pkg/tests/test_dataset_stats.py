import numpy as np
import pytest

from foundry.stats.dataset import (
    DatasetStats,
    FieldAccumulator,
    StatsFormatError,
    merge_stats,
    parse_stats,
    serialize_stats,
)


def build_global_stats(data_by_field: dict[str, np.ndarray], sample_count: int) -> DatasetStats:
    fields = {}
    for name, rows in data_by_field.items():
        acc = FieldAccumulator(name, rows.shape[1], per_timestep=False)
        acc.add_rows(rows)
        fields[name] = acc.finalize()
    return DatasetStats(fields=fields, sample_count=sample_count, scope="global")


def build_per_timestep_stats(windows: np.ndarray, name: str = "action",
                             window_shape=(1, 2)) -> DatasetStats:
    acc = FieldAccumulator(name, windows.shape[2], per_timestep=True, window_len=windows.shape[1])
    acc.add_windows(windows)
    return DatasetStats(
        fields={name: acc.finalize()},
        sample_count=windows.shape[0],
        scope="per_timestep",
        window_shape=window_shape,
    )


def test_merged_mean_symmetry():
    a = build_global_stats({"f": np.zeros((10, 1))}, 10)
    b = build_global_stats({"f": np.full((10, 1), 2.0)}, 10)
    m = merge_stats(a, b)
    assert m.fields["f"].mean[0] == pytest.approx(1.0)
    assert m.sample_count == 20


def test_merged_variance_includes_between_term():
    # Pooled data {0,0,2,2}: mean 1, population variance 1. Each half has
    # variance 0, so the within-only mode reproduces 0 instead.
    a = build_global_stats({"f": np.zeros((2, 1))}, 2)
    b = build_global_stats({"f": np.full((2, 1), 2.0)}, 2)
    pooled = np.array([0.0, 0.0, 2.0, 2.0])
    expected = ((pooled - pooled.mean()) ** 2).mean()
    m = merge_stats(a, b)
    assert m.fields["f"].std[0] ** 2 == pytest.approx(expected)
    compat = merge_stats(a, b, variance_merge="within_only")
    assert compat.fields["f"].std[0] ** 2 == pytest.approx(0.0)


def test_merged_min_max_elementwise():
    a = build_global_stats({"f": np.array([[-3.0], [0.0]])}, 2)
    b = build_global_stats({"f": np.array([[-1.0], [5.0]])}, 2)
    m = merge_stats(a, b)
    assert m.fields["f"].min[0] == -3.0
    assert m.fields["f"].max[0] == 5.0


def test_merge_with_empty_operand_is_identity():
    rng = np.random.default_rng(0)
    a = build_global_stats({"f": rng.normal(size=(100, 2))}, 100)
    empty = DatasetStats()
    assert merge_stats(a, empty) is a
    assert merge_stats(empty, a) is a


def test_merge_rejects_mismatched_fields():
    a = build_global_stats({"f": np.zeros((2, 1))}, 2)
    b = build_global_stats({"g": np.zeros((2, 1))}, 2)
    with pytest.raises(ValueError, match="field sets differ"):
        merge_stats(a, b)


def test_random_split_matches_whole():
    rng = np.random.default_rng(1)
    rows = rng.normal(size=(20_000, 3)) * np.array([1.0, 5.0, 0.1]) + np.array([0.0, -2.0, 7.0])
    whole = build_global_stats({"f": rows}, len(rows))
    for k in (2, 5):
        cuts = np.sort(rng.choice(np.arange(1, len(rows)), size=k - 1, replace=False))
        parts = np.split(rows, cuts)
        merged = build_global_stats({"f": parts[0]}, len(parts[0]))
        for part in parts[1:]:
            merged = merge_stats(merged, build_global_stats({"f": part}, len(part)))
        assert np.allclose(merged.fields["f"].mean, whole.fields["f"].mean, rtol=1e-9)
        assert np.allclose(merged.fields["f"].std, whole.fields["f"].std, rtol=1e-9)
        assert np.array_equal(merged.fields["f"].min, whole.fields["f"].min)
        assert np.array_equal(merged.fields["f"].max, whole.fields["f"].max)
        # Percentiles through merged sketches stay within rank tolerance.
        sorted_cols = np.sort(rows, axis=0)
        for pname, q in (("p1", 0.01), ("p99", 0.99)):
            for d in range(3):
                est = getattr(merged.fields["f"], pname)[d]
                pos = np.searchsorted(sorted_cols[:, d], est) / len(rows)
                assert abs(pos - q) <= 0.005


def test_per_timestep_matches_brute_force_columns():
    rng = np.random.default_rng(2)
    windows = rng.normal(size=(2000, 4, 3)) + np.arange(4)[None, :, None]
    stats = build_per_timestep_stats(windows, window_shape=(1, 2))
    f = stats.fields["action"]
    assert f.mean.shape == (4, 3)
    for t in range(4):
        col = windows[:, t, :]
        assert np.allclose(f.mean[t], col.mean(axis=0), rtol=1e-9)
        assert np.allclose(f.std[t], col.std(axis=0), rtol=1e-9)
        assert np.array_equal(f.min[t], col.min(axis=0))
        assert np.array_equal(f.max[t], col.max(axis=0))
        sorted_col = np.sort(col, axis=0)
        for pname, q in (("p5", 0.05), ("p95", 0.95)):
            for d in range(3):
                pos = np.searchsorted(sorted_col[:, d], getattr(f, pname)[t, d]) / len(col)
                assert abs(pos - q) <= 0.01


def test_percentile_ordering_invariant():
    rng = np.random.default_rng(3)
    stats = build_global_stats({"f": rng.exponential(size=(5000, 2))}, 5000)
    f = stats.fields["f"]
    assert np.all(f.p1 <= f.p5)
    assert np.all(f.p5 <= f.p95)
    assert np.all(f.p95 <= f.p99)
    assert np.all(f.min <= f.p1)
    assert np.all(f.p99 <= f.max)


def test_serialize_round_trip_exact():
    rng = np.random.default_rng(4)
    stats = build_global_stats(
        {"a": rng.normal(size=(500, 2)), "b": rng.uniform(size=(500, 5))}, 500
    )
    blob = serialize_stats(stats)
    back = parse_stats(blob)
    assert back.fields == stats.fields
    assert back.sample_count == stats.sample_count
    assert serialize_stats(back) == blob


def test_serialize_round_trip_per_timestep():
    rng = np.random.default_rng(5)
    stats = build_per_timestep_stats(rng.normal(size=(300, 4, 2)), window_shape=(1, 2))
    back = parse_stats(serialize_stats(stats))
    assert back.fields == stats.fields
    assert back.window_shape == (1, 2)


def test_empty_stats_serialize():
    blob = serialize_stats(DatasetStats())
    back = parse_stats(blob)
    assert back.sample_count == 0
    assert back.fields == {}


def test_corrupted_digest_named_in_error():
    rng = np.random.default_rng(6)
    stats = build_global_stats({"act": rng.normal(size=(100, 1))}, 100)
    import json

    doc = json.loads(serialize_stats(stats))
    doc["fields"]["act"]["tdigest"][0] = "AAAA"
    with pytest.raises(StatsFormatError, match="/fields/act/tdigest/0"):
        parse_stats(json.dumps(doc).encode())


def test_parse_rejects_shape_mismatch():
    rng = np.random.default_rng(7)
    stats = build_global_stats({"act": rng.normal(size=(100, 2))}, 100)
    import json

    doc = json.loads(serialize_stats(stats))
    doc["fields"]["act"]["mean"] = [1.0]
    with pytest.raises(StatsFormatError, match="/fields/act/mean"):
        parse_stats(json.dumps(doc).encode())
