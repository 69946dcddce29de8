import numpy as np
import pytest

from foundry.shardstore.manifest import (
    ManifestEntry,
    ManifestError,
    read_manifest,
    total_sequences,
    write_manifest,
)
from foundry.shardstore.payload import PayloadError, decode_array, encode_array
from foundry.shardstore.records import SampleRecord, ShardFormatError, read_shard, write_shard
from foundry.shardstore.registry import (
    BaseConverter,
    ConverterError,
    create_converter,
    register_converter,
    registered_converters,
)


def test_payload_round_trip_dtypes():
    rng = np.random.default_rng(0)
    for dtype in (np.float32, np.float64):
        arr = rng.normal(size=(6, 9)).astype(dtype)
        back = decode_array(encode_array(arr))
        assert back.dtype == arr.dtype
        assert np.array_equal(back, arr)


def test_payload_rejects_garbage():
    with pytest.raises(PayloadError):
        decode_array(b"nope")
    good = encode_array(np.zeros((2, 2)))
    with pytest.raises(PayloadError):
        decode_array(good[:-3])


def test_entry_naming_matches_key_field_convention():
    rec = SampleRecord(key="ep0_000017")
    rec.add("camera1", "jpg", b"img")
    rec.add("meta", "json", b"{}")
    blob = write_shard([rec])
    import io
    import tarfile

    with tarfile.open(fileobj=io.BytesIO(blob)) as tar:
        assert tar.getnames() == ["ep0_000017_camera1.jpg", "ep0_000017_meta.json"]


def test_field_name_with_underscore_rejected():
    rec = SampleRecord(key="k")
    with pytest.raises(ShardFormatError, match="underscore"):
        rec.add("bad_name", "bin", b"")


def test_empty_shard_rejected():
    with pytest.raises(ShardFormatError, match="at least one"):
        write_shard([])


def test_duplicate_keys_rejected():
    a = SampleRecord(key="k")
    a.add("meta", "json", b"{}")
    b = SampleRecord(key="k")
    b.add("meta", "json", b"{}")
    with pytest.raises(ShardFormatError, match="duplicate"):
        write_shard([a, b])


def test_shard_round_trip_byte_identical():
    rng = np.random.default_rng(1)
    samples = []
    for i in range(1024):
        rec = SampleRecord(key=f"ep{i % 37:03d}_{i:06d}")
        rec.add("meta", "json", b'{"i": %d}' % i)
        rec.add("actions", "bin", encode_array(rng.normal(size=(4, 3))))
        rec.add("camera1", "jpg", rng.bytes(24))
        samples.append(rec)
    blob = write_shard(samples)
    back = read_shard(blob)
    assert [r.key for r in back] == [r.key for r in samples]
    for orig, loaded in zip(samples, back):
        assert loaded.files == orig.files
    # Re-serialization is byte-identical (fixed tar metadata).
    assert write_shard(back) == blob


def test_non_contiguous_keys_rejected():
    a = SampleRecord(key="a")
    a.add("meta", "json", b"{}")
    b = SampleRecord(key="b")
    b.add("meta", "json", b"{}")
    blob_a, blob_b = write_shard([a]), write_shard([b])
    # Interleave a, b, a by splicing tar member blocks (drop end-of-archive padding).
    import io
    import tarfile

    def members(blob):
        with tarfile.open(fileobj=io.BytesIO(blob)) as tar:
            return [(m.name, tar.extractfile(m).read()) for m in tar]

    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w", format=tarfile.USTAR_FORMAT) as tar:
        for name, body in [*members(blob_a), *members(blob_b), ("a_extra.bin", b"x")]:
            info = tarfile.TarInfo(name=name)
            info.size = len(body)
            tar.addfile(info, io.BytesIO(body))
    with pytest.raises(ShardFormatError, match="contiguous"):
        read_shard(buf.getvalue())


def test_malformed_tar_rejected():
    with pytest.raises(ShardFormatError, match="malformed"):
        read_shard(b"definitely not a tar" * 100)


APPENDIX_MANIFEST = (
    b'{"shard": "00000000", "num_sequences": 1024}\n'
    b'{"shard": "00000001", "num_sequences": 1024}\n'
    b'{"shard": "00000002", "num_sequences": 1024}\n'
    b'{"shard": "00000003", "num_sequences": 488}\n'
)


def test_manifest_round_trips_byte_exact():
    entries = read_manifest(APPENDIX_MANIFEST)
    assert [e.num_sequences for e in entries] == [1024, 1024, 1024, 488]
    assert write_manifest(entries) == APPENDIX_MANIFEST
    assert total_sequences(entries) == 3560


def test_manifest_single_line():
    data = write_manifest([ManifestEntry("00000000", 7)])
    assert data == b'{"shard": "00000000", "num_sequences": 7}\n'


def test_manifest_out_of_order_rejected():
    with pytest.raises(ManifestError, match="increasing"):
        write_manifest([ManifestEntry("00000001", 1), ManifestEntry("00000000", 1)])


def test_manifest_malformed_line_number():
    data = b'{"shard": "00000000", "num_sequences": 1}\nnot json\n'
    with pytest.raises(ManifestError, match="line 2"):
        read_manifest(data)


def test_manifest_rejects_extra_keys():
    with pytest.raises(ManifestError, match="line 1"):
        read_manifest(b'{"shard": "00000000", "num_sequences": 1, "x": 2}\n')


def test_manifest_rejects_zero_sequences():
    with pytest.raises(ManifestError):
        ManifestEntry("00000000", 0)


class _NullConverter(BaseConverter):
    def discover_cameras(self):
        return []

    def read_episodes(self):
        return iter(())


def test_registry_create_and_errors():
    register_converter("nulltestconv", _NullConverter)
    try:
        conv = create_converter("nulltestconv", {"input_path": "x"})
        assert isinstance(conv, _NullConverter)
        assert "generic_episode" in registered_converters()
        with pytest.raises(ConverterError, match="generic_episode"):
            create_converter("nonexistent")
        with pytest.raises(ConverterError, match="already registered"):
            register_converter("nulltestconv", _NullConverter)
    finally:
        from foundry.shardstore import registry

        registry._REGISTRY.pop("nulltestconv", None)


def test_csv_episode_converter(tmp_path):
    import numpy as np

    (tmp_path / "ep_a.csv").write_text(
        "pose.0,pose.1,grip.0\n1.0,2.0,0.5\n3.0,4.0,0.6\n"
    )
    (tmp_path / "ep_b.csv").write_text("pose.0,pose.1,grip.0\n7.0,8.0,0.9\n")
    conv = create_converter("csv_episode", {"input_path": str(tmp_path), "task": "sort cups"})
    episodes = list(conv.read_episodes())
    assert [ep.id for ep, _ in episodes] == ["ep_a", "ep_b"]
    ep, task = episodes[0]
    assert task == "sort cups"
    assert ep.length == 2
    assert np.array_equal(ep.fields["pose"], [[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(ep.fields["grip"], [[0.5], [0.6]])
    assert conv.discover_cameras() == []


def test_csv_episode_converter_bad_cell(tmp_path):
    (tmp_path / "bad.csv").write_text("x.0\nnot-a-number\n")
    conv = create_converter("csv_episode", {"input_path": str(tmp_path)})
    with pytest.raises(ConverterError, match="bad"):
        list(conv.read_episodes())
