"""Tar-shard dataset format: records, manifests, converters, preprocessing."""

from foundry.shardstore.converters import CsvEpisodeConverter, GenericEpisodeConverter
from foundry.shardstore.manifest import ManifestEntry, ManifestError, read_manifest, write_manifest
from foundry.shardstore.payload import PayloadError, decode_array, encode_array
from foundry.shardstore.preprocess import PreprocessError, PreprocessSpec, preprocess
from foundry.shardstore.records import SampleRecord, ShardFormatError, read_shard, write_shard
from foundry.shardstore.registry import (
    BaseConverter,
    ConverterError,
    create_converter,
    register_converter,
    registered_converters,
)

__all__ = [
    "BaseConverter",
    "ConverterError",
    "CsvEpisodeConverter",
    "GenericEpisodeConverter",
    "ManifestEntry",
    "ManifestError",
    "PayloadError",
    "PreprocessError",
    "PreprocessSpec",
    "SampleRecord",
    "ShardFormatError",
    "create_converter",
    "decode_array",
    "encode_array",
    "preprocess",
    "read_manifest",
    "read_shard",
    "register_converter",
    "registered_converters",
    "write_manifest",
    "write_shard",
]
