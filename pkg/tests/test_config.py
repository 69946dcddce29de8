import dataclasses

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from foundry.config import (
    ConfigError,
    ConfigSchema,
    IncludeCycleError,
    MissingKeyError,
    SchemaEntry,
    TypeMismatchError,
    UnknownKeyError,
    emit_resolved,
    load_tree,
    resolve,
)


def schema_for_appendix_example() -> ConfigSchema:
    return ConfigSchema(
        {
            "model.hidden_dim": SchemaEntry("int", 1024),
            "model.n_layers": SchemaEntry("int", 4),
            "hparams.lr": SchemaEntry("float", 3e-4),
            "hparams.precision": SchemaEntry("string", "fp32"),
        }
    )


def test_load_tree_no_include_identity(tmp_path):
    path = tmp_path / "plain.yaml"
    path.write_text("model:\n  hidden_dim: 512\n")
    assert load_tree(path) == {"model": {"hidden_dim": 512}}


def test_include_sibling_overrides(tmp_path):
    (tmp_path / "preset.yaml").write_text("hidden_dim: 512\nn_layers: 8\n")
    top = tmp_path / "top.yaml"
    top.write_text("model:\n  include: preset.yaml\n  hidden_dim: 2048\n")
    assert load_tree(top) == {"model": {"hidden_dim": 2048, "n_layers": 8}}


def test_include_resolves_recursively(tmp_path):
    (tmp_path / "base.yaml").write_text("a: 1\nb: 2\n")
    (tmp_path / "mid.yaml").write_text("include: base.yaml\nb: 3\nc: 4\n")
    top = tmp_path / "top.yaml"
    top.write_text("include: mid.yaml\nc: 5\n")
    assert load_tree(top) == {"a": 1, "b": 3, "c": 5}


def test_include_cycle_detected(tmp_path):
    (tmp_path / "a.yaml").write_text("include: b.yaml\n")
    (tmp_path / "b.yaml").write_text("include: a.yaml\n")
    with pytest.raises(IncludeCycleError) as err:
        load_tree(tmp_path / "a.yaml")
    assert "a.yaml" in str(err.value) and "b.yaml" in str(err.value)


def test_missing_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_tree(tmp_path / "nope.yaml")


def test_cli_beats_preset_beats_include_beats_default(tmp_path):
    (tmp_path / "inner.yaml").write_text("model:\n  hidden_dim: 512\n")
    preset = tmp_path / "config.yaml"
    preset.write_text("include: inner.yaml\nmodel:\n  hidden_dim: 2048\n")
    cfg = resolve(schema_for_appendix_example(), preset, ["model.hidden_dim=1024"])
    assert cfg["model.hidden_dim"] == 1024
    assert cfg.provenance["model.hidden_dim"] == "cli"

    cfg = resolve(schema_for_appendix_example(), preset)
    assert cfg["model.hidden_dim"] == 2048
    assert cfg.provenance["model.hidden_dim"] == "preset"

    preset.write_text("include: inner.yaml\n")
    cfg = resolve(schema_for_appendix_example(), preset)
    assert cfg["model.hidden_dim"] == 512
    assert cfg.provenance["model.hidden_dim"] == "include"

    cfg = resolve(schema_for_appendix_example())
    assert cfg["model.hidden_dim"] == 1024
    assert cfg.provenance["model.hidden_dim"] == "default"


def test_no_layers_all_defaults():
    cfg = resolve(schema_for_appendix_example())
    assert dict(cfg.values) == {
        "model.hidden_dim": 1024,
        "model.n_layers": 4,
        "hparams.lr": 3e-4,
        "hparams.precision": "fp32",
    }
    assert set(cfg.provenance.values()) == {"default"}


def test_cli_type_mismatch():
    with pytest.raises(TypeMismatchError):
        resolve(schema_for_appendix_example(), cli=["hparams.lr=abc"])


def test_cli_scientific_float_parses():
    cfg = resolve(schema_for_appendix_example(), cli=["hparams.lr=1e-4"])
    assert cfg["hparams.lr"] == 1e-4


def test_unknown_keys_rejected():
    with pytest.raises(UnknownKeyError):
        resolve(schema_for_appendix_example(), {"model": {"missing": 1}})
    with pytest.raises(UnknownKeyError):
        resolve(schema_for_appendix_example(), cli=["model.missing=1"])


def test_required_key_enforced():
    schema = ConfigSchema({"out.path": SchemaEntry("string", required=True)})
    with pytest.raises(MissingKeyError):
        resolve(schema)
    cfg = resolve(schema, cli=["out.path=/tmp/x"])
    assert cfg["out.path"] == "/tmp/x"


def test_preset_type_mismatch():
    with pytest.raises(TypeMismatchError):
        resolve(schema_for_appendix_example(), {"model": {"hidden_dim": "big"}})


def test_frozen_after_resolution():
    cfg = resolve(schema_for_appendix_example())
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.values = {}
    with pytest.raises(TypeError):
        cfg.values["model.hidden_dim"] = 1


def test_schema_rejects_nested_leaf_collision():
    with pytest.raises(ConfigError, match="collides"):
        ConfigSchema({"a.b": SchemaEntry("int", 1), "a.b.c": SchemaEntry("int", 2)})


def test_emit_round_trip_appendix_example(tmp_path):
    (tmp_path / "inner.yaml").write_text("model:\n  hidden_dim: 512\n")
    preset = tmp_path / "config.yaml"
    preset.write_text("include: inner.yaml\nhparams:\n  lr: 1.0e-4\n")
    cfg = resolve(schema_for_appendix_example(), preset, ["model.n_layers=12"])
    emitted = emit_resolved(cfg)
    again = resolve(schema_for_appendix_example(), yaml.safe_load(emitted))
    assert again == cfg
    # Provenance never leaks into the document.
    assert "provenance" not in emitted and "cli" not in emitted


def test_emit_empty_schema():
    cfg = resolve(ConfigSchema({}))
    assert yaml.safe_load(emit_resolved(cfg)) == {}


_KEYS = ["model.dim", "model.act", "data.batch", "data.shuffle", "hparams.lr", "tag"]


def _schema() -> ConfigSchema:
    return ConfigSchema(
        {
            "model.dim": SchemaEntry("int", 64),
            "model.act": SchemaEntry("string", "gelu"),
            "data.batch": SchemaEntry("int", 8),
            "data.shuffle": SchemaEntry("bool", True),
            "hparams.lr": SchemaEntry("float", 0.001),
            "tag": SchemaEntry("string", "base"),
        }
    )


@st.composite
def layer_stacks(draw):
    # For each key, choose which of the four layers supply it.
    chosen = {}
    for key in _KEYS:
        chosen[key] = draw(
            st.sets(st.sampled_from(["include", "preset", "cli"]), max_size=3)
        )
    return chosen


def _value_for(key: str, layer: str):
    tag = {"model.dim": "int", "data.batch": "int", "hparams.lr": "float",
           "data.shuffle": "bool", "model.act": "string", "tag": "string"}[key]
    salt = {"include": 1, "preset": 2, "cli": 3}[layer]
    if tag == "int":
        return 100 + salt
    if tag == "float":
        return 0.25 * salt
    if tag == "bool":
        return salt % 2 == 0
    return f"{layer}-value"


@given(layer_stacks())
@settings(max_examples=60, deadline=None)
def test_precedence_lattice(tmp_path_factory, chosen):
    tmp_path = tmp_path_factory.mktemp("cfg")
    include_vals = {k: _value_for(k, "include") for k, layers in chosen.items() if "include" in layers}
    preset_vals = {k: _value_for(k, "preset") for k, layers in chosen.items() if "preset" in layers}
    cli_vals = {k: _value_for(k, "cli") for k, layers in chosen.items() if "cli" in layers}

    def nest(flat):
        tree = {}
        for path, value in flat.items():
            node = tree
            parts = path.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
            node[parts[-1]] = value
        return tree

    inc_file = tmp_path / "inc.yaml"
    inc_file.write_text(yaml.safe_dump(nest(include_vals)))
    preset_tree = nest(preset_vals)
    preset_tree["include"] = str(inc_file)
    preset_file = tmp_path / "preset.yaml"
    preset_file.write_text(yaml.safe_dump(preset_tree))

    cli = [f"{k}={str(v).lower() if isinstance(v, bool) else v}" for k, v in cli_vals.items()]
    cfg = resolve(_schema(), preset_file, cli)

    order = ["default", "include", "preset", "cli"]
    for key in _KEYS:
        present = ["default"]
        present += [s for s in ("include", "preset", "cli") if s in chosen[key]]
        winner = max(present, key=order.index)
        assert cfg.provenance[key] == winner
        if winner == "default":
            assert cfg[key] == _schema().entries[key].default
        else:
            assert cfg[key] == _value_for(key, winner)

    # Fixed point: load -> resolve -> emit -> load -> resolve.
    emitted = emit_resolved(cfg)
    again = resolve(_schema(), yaml.safe_load(emitted))
    assert again == cfg
    assert emit_resolved(again) == emitted
