"""Layered configuration resolution.

Values merge in strict precedence: schema defaults < values pulled in through
nested ``include`` files < values written in the preset file itself < CLI
overrides. The result is frozen, records the winning source per key, and can
be emitted back to YAML such that reloading it reproduces the same values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

import yaml

INCLUDE_KEY = "include"

SOURCE_ORDER = ("default", "include", "preset", "cli")

TYPE_TAGS = ("int", "float", "string", "bool", "list", "nested")


class ConfigError(ValueError):
    pass


class IncludeCycleError(ConfigError):
    def __init__(self, chain: list[str]):
        super().__init__("include cycle: " + " -> ".join(chain))
        self.chain = chain


class UnknownKeyError(ConfigError):
    pass


class TypeMismatchError(ConfigError):
    pass


class MissingKeyError(ConfigError):
    pass


@dataclass(frozen=True)
class SchemaEntry:
    tag: str
    default: Any = None
    required: bool = False

    def __post_init__(self) -> None:
        if self.tag not in TYPE_TAGS:
            raise ConfigError(f"unknown type tag {self.tag!r}")


@dataclass(frozen=True)
class ConfigSchema:
    """Dotted key-path declarations with type tags and defaults."""

    entries: Mapping[str, SchemaEntry]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", dict(self.entries))
        paths = set(self.entries)
        for path in paths:
            parts = path.split(".")
            for i in range(1, len(parts)):
                prefix = ".".join(parts[:i])
                if prefix in paths:
                    raise ConfigError(f"key path {path!r} collides with leaf path {prefix!r}")
        # default None and not required means "optional": absent unless supplied.
        for path, entry in self.entries.items():
            if entry.default is not None:
                _check_type(entry.tag, entry.default, path, "default")


def _check_type(tag: str, value: Any, keypath: str, source: str) -> Any:
    ok = {
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "string": lambda v: isinstance(v, str),
        "bool": lambda v: isinstance(v, bool),
        "list": lambda v: isinstance(v, list),
        "nested": lambda v: isinstance(v, dict),
    }[tag](value)
    if not ok:
        raise TypeMismatchError(
            f"{source} value for {keypath!r} is {value!r}, expected type {tag}"
        )
    return float(value) if tag == "float" else value


def _parse_cli_value(tag: str, text: str, keypath: str) -> Any:
    try:
        if tag == "int":
            return int(text, 10)
        if tag == "float":
            return float(text)
        if tag == "bool":
            lowered = text.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if tag == "string":
            return text
        value = yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise TypeMismatchError(f"cannot parse {text!r} as {tag} for {keypath!r}") from exc
    return _check_type(tag, value, keypath, "cli")


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _load_yaml_mapping(path: Path) -> dict:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"root of {path} must be a mapping")
    return doc


def _expand(node: Any, base_dir: Path, stack: tuple[str, ...], included: bool,
            prov: dict[str, bool], prefix: str = "") -> Any:
    if not isinstance(node, dict):
        prov[prefix] = included
        return node
    if INCLUDE_KEY in node:
        target = node[INCLUDE_KEY]
        if not isinstance(target, str):
            raise ConfigError(f"{INCLUDE_KEY} value must be a path string, got {target!r}")
        inc_path = (base_dir / target).resolve()
        if str(inc_path) in stack:
            raise IncludeCycleError([*stack, str(inc_path)])
        inc_doc = _load_yaml_mapping(inc_path)
        inc_tree = _expand(inc_doc, inc_path.parent, (*stack, str(inc_path)), True, prov, prefix)
        siblings = {k: v for k, v in node.items() if k != INCLUDE_KEY}
        sib_tree = _expand(siblings, base_dir, stack, included, prov, prefix)
        return _deep_merge(inc_tree, sib_tree)
    out = {}
    for key, value in node.items():
        child_prefix = f"{prefix}.{key}" if prefix else str(key)
        out[key] = _expand(value, base_dir, stack, included, prov, child_prefix)
    return out


def load_tree(path: str | Path) -> dict:
    """Load a YAML file, recursively splicing ``include`` files depth-first.

    Sibling keys of ``include`` override the included values key-by-key
    (mappings merge recursively, scalars and lists replace).
    """
    tree, _ = _load_tree_with_provenance(path)
    return tree


def _load_tree_with_provenance(path: str | Path) -> tuple[dict, dict[str, bool]]:
    path = Path(path).resolve()
    prov: dict[str, bool] = {}
    tree = _expand(_load_yaml_mapping(path), path.parent, (str(path),), False, prov)
    return tree, prov


def _came_from_include(path: str, flags: Mapping[str, bool]) -> bool:
    # Leaf paths are recorded directly; a nested-tagged subtree counts as
    # include-sourced when every leaf below it is.
    if path in flags:
        return flags[path]
    below = [v for k, v in flags.items() if k.startswith(path + ".")]
    return bool(below) and all(below)


def _flatten(tree: dict, schema: ConfigSchema, prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in tree.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        entry = schema.entries.get(path)
        if entry is not None and entry.tag == "nested":
            flat[path] = value
        elif isinstance(value, dict):
            flat.update(_flatten(value, schema, path))
        else:
            flat[path] = value
    return flat


@dataclass(frozen=True)
class ResolvedConfig:
    """Immutable key-path -> value map with per-key provenance.

    Equality compares values only; provenance is resolution metadata.
    """

    values: Mapping[str, Any]
    provenance: Mapping[str, str]
    frozen: bool = field(default=True)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))
        object.__setattr__(self, "provenance", MappingProxyType(dict(self.provenance)))

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ResolvedConfig):
            return NotImplemented
        return dict(self.values) == dict(other.values)

    def __hash__(self) -> int:  # frozen but unhashable values possible; keep simple
        return hash(tuple(sorted(self.values)))


def resolve(schema: ConfigSchema, preset: dict | str | Path | None = None,
            cli: list[str] | tuple[str, ...] = ()) -> ResolvedConfig:
    """Merge default, include, preset, and CLI layers under strict precedence.

    ``preset`` may be a YAML file path or an already-loaded raw tree whose
    ``include`` keys have not yet been expanded. CLI entries are
    ``dotted.path=value`` strings typed against the schema.
    """
    values: dict[str, Any] = {}
    provenance: dict[str, str] = {}

    for path, entry in schema.entries.items():
        if entry.default is not None:
            values[path] = _check_type(entry.tag, entry.default, path, "default")
            provenance[path] = "default"

    if preset is not None:
        if isinstance(preset, (str, Path)):
            tree, from_include = _load_tree_with_provenance(preset)
        else:
            from_include = {}
            tree = _expand(dict(preset), Path.cwd(), (), False, from_include)
        for path, raw in _flatten(tree, schema).items():
            entry = schema.entries.get(path)
            if entry is None:
                raise UnknownKeyError(f"unknown key {path!r} in preset")
            if raw is None:
                continue  # YAML null leaves the lower layers in effect
            source = "include" if _came_from_include(path, from_include) else "preset"
            values[path] = _check_type(entry.tag, raw, path, source)
            provenance[path] = source

    for item in cli:
        if "=" not in item:
            raise ConfigError(f"cannot parse CLI override {item!r} (expected path=value)")
        path, text = item.split("=", 1)
        path = path.strip()
        entry = schema.entries.get(path)
        if entry is None:
            raise UnknownKeyError(f"unknown key {path!r} in CLI overrides")
        values[path] = _parse_cli_value(entry.tag, text, path)
        provenance[path] = "cli"

    missing = [p for p, e in schema.entries.items() if e.required and p not in values]
    if missing:
        raise MissingKeyError(f"required keys missing after merge: {sorted(missing)}")
    return ResolvedConfig(values=values, provenance=provenance)


def _nest(flat: Mapping[str, Any]) -> dict:
    tree: dict = {}
    for path, value in flat.items():
        parts = path.split(".")
        node = tree
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return tree


def emit_resolved(config: ResolvedConfig) -> str:
    """Emit the merged values (never provenance) as a deterministic YAML document."""
    return yaml.safe_dump(_nest(config.values), sort_keys=True, default_flow_style=False)


def _tag_for_value(value: Any) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, list):
        return "list"
    if isinstance(value, dict):
        return "nested"
    return "string"


def schema_from_tree(tree: dict) -> ConfigSchema:
    """Infer a schema from a config document: leaves become defaults, tags from values.

    Lets documents without a declared schema still get typed CLI overrides
    (an override must name an existing key and parse as its value's type).
    """
    entries: dict[str, SchemaEntry] = {}

    def walk(node: dict, prefix: str) -> None:
        for key, value in node.items():
            path = f"{prefix}.{key}" if prefix else str(key)
            if isinstance(value, dict) and value:
                walk(value, path)
            else:
                entries[path] = SchemaEntry(_tag_for_value(value), value)

    walk(tree, "")
    return ConfigSchema(entries)
