"""Single entry-point command for the pipeline.

Every subcommand accepts ``--config_path <file>``, repeated
``--dotted.path=value`` overrides, and ``--resolve_configs`` (print the
merged YAML to stdout and exit). Machine output goes to stdout, logs and
errors to stderr; exit codes: 0 success, 1 usage error, 2 data or
validation error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from foundry import config as config_mod
from foundry.config import ConfigError, ConfigSchema, emit_resolved, resolve

ERROR_PREFIX = "foundry-error:"

USAGE = """\
usage: foundry <subcommand> [options]

subcommands:
  preprocess      convert a raw dataset into tar shards (+ manifest, stats)
  stats merge     merge two stats.json files
  resolve-config  print the merged configuration as YAML
  mix-preview     print empirical dataset mixing proportions
  eval report     posterior means, quantiles, significance, and CLD letters
  serve           run the campaign HTTP service

every subcommand accepts --config_path <yaml>, repeated --<dotted.path>=<value>
overrides, and --resolve_configs.
"""


class UsageError(Exception):
    pass


_COMMON_FLAGS = {"config_path", "resolve_configs"}


def _split_overrides(args: list[str], reserved: set[str] = frozenset()) -> tuple[list[str], list[str]]:
    """Separate --key.path=value override flags from ordinary arguments.

    Any ``--name=value`` token whose name is not a declared subcommand flag
    is a configuration override.
    """
    reserved = _COMMON_FLAGS | set(reserved)
    overrides, rest = [], []
    for arg in args:
        name = arg[2:].split("=", 1)[0] if arg.startswith("--") and "=" in arg else None
        if name is not None and name not in reserved:
            overrides.append(arg[2:])
        else:
            rest.append(arg)
    return overrides, rest


def _resolve_for(schema: ConfigSchema | None, config_path: str | None, overrides: list[str]):
    if schema is None:
        if config_path is None:
            raise ConfigError("--config_path is required when no schema is implied")
        tree = config_mod.load_tree(config_path)
        schema = config_mod.schema_from_tree(tree)
    return resolve(schema, config_path, overrides)


def _make_parser(prog: str, resolve_flag: bool = True) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=prog, add_help=True, allow_abbrev=False)
    parser.add_argument("--config_path", default=None)
    if resolve_flag:
        parser.add_argument("--resolve_configs", action="store_true")
    return parser


def _cmd_preprocess(args: list[str]) -> int:
    from foundry.shardstore.preprocess import PreprocessSpec, preprocess

    overrides, rest = _split_overrides(args)
    parser = _make_parser("foundry preprocess")
    ns = parser.parse_args(rest)
    cfg = resolve(PreprocessSpec.config_schema(), ns.config_path, overrides)
    if ns.resolve_configs:
        sys.stdout.write(emit_resolved(cfg))
        return 0
    result = preprocess(PreprocessSpec.from_config(cfg))
    print(f"wrote {result.sample_count} samples in {len(result.manifest)} shards "
          f"under {result.output_path / 'shards'}")
    return 0


def _cmd_stats(args: list[str]) -> int:
    from foundry.stats.dataset import merge_stats, parse_stats, serialize_stats

    overrides, rest = _split_overrides(args, {"output", "variance-merge"})
    if not rest or rest[0] != "merge":
        raise UsageError("usage: foundry stats merge <a.json> <b.json> -o <out.json>")
    parser = _make_parser("foundry stats merge")
    parser.add_argument("inputs", nargs=2)
    parser.add_argument("-o", "--output", required=True)
    parser.add_argument("--variance-merge", choices=["total", "within_only"], default="total")
    ns = parser.parse_args(rest[1:])
    if ns.resolve_configs:
        sys.stdout.write(emit_resolved(_resolve_for(None, ns.config_path, overrides)))
        return 0
    a = parse_stats(Path(ns.inputs[0]).read_bytes())
    b = parse_stats(Path(ns.inputs[1]).read_bytes())
    merged = merge_stats(a, b, variance_merge=ns.variance_merge)
    Path(ns.output).write_bytes(serialize_stats(merged))
    print(f"merged {ns.inputs[0]} + {ns.inputs[1]} -> {ns.output} "
          f"({merged.sample_count} samples)")
    return 0


def _cmd_resolve_config(args: list[str]) -> int:
    overrides, rest = _split_overrides(args, {"schema"})
    parser = _make_parser("foundry resolve-config", resolve_flag=False)
    parser.add_argument("--schema", choices=["preprocess", "mix", "serve"], default=None)
    ns = parser.parse_args(rest)
    schema = _named_schema(ns.schema)
    cfg = _resolve_for(schema, ns.config_path, overrides)
    sys.stdout.write(emit_resolved(cfg))
    return 0


def _named_schema(name: str | None) -> ConfigSchema | None:
    if name == "preprocess":
        from foundry.shardstore.preprocess import PreprocessSpec

        return PreprocessSpec.config_schema()
    if name == "mix":
        from foundry.mixer import MixSpec

        return MixSpec.config_schema()
    if name == "serve":
        from foundry import server

        return server.config_schema()
    return None


def _cmd_mix_preview(args: list[str]) -> int:
    from foundry.mixer import MixSpec, mix_preview

    overrides, rest = _split_overrides(args, {"draws"})
    parser = _make_parser("foundry mix-preview")
    parser.add_argument("--draws", type=int, default=10_000)
    ns = parser.parse_args(rest)
    cfg = resolve(MixSpec.config_schema(), ns.config_path, overrides)
    if ns.resolve_configs:
        sys.stdout.write(emit_resolved(cfg))
        return 0
    spec = MixSpec.from_config(cfg)
    preview = mix_preview(spec, ns.draws)
    print(f"{'dataset':<50} {'weight':>8} {'expected':>9} {'observed':>9} {'draws':>8}")
    for source, expected, prop, count in zip(
        spec.datasets, preview["expected"], preview["proportions"], preview["counts"]
    ):
        print(f"{source.manifest:<50} {source.weight:>8.3f} {expected:>9.4f} "
              f"{prop:>9.4f} {count:>8}")
    return 0


def _fmt_cell(cell: dict | None) -> str:
    if cell is None:
        return f"{'-':>7} {'-':>7} {'-':>7} {'-':>7}"
    return (f"{cell['successes']:>3}/{cell['trials']:<3} {cell['mean']:>7.3f} "
            f"{cell['q05']:>7.3f} {cell['q95']:>7.3f}")


def _print_comparison(comparison: dict | None, label: str) -> None:
    if comparison is None:
        return
    policies = comparison["policies"]
    print(f"\n{label} significance (x = significantly different, "
          f"FWER {comparison['alpha_fwer']:.0%}):")
    width = max((len(p) for p in policies), default=0)
    header = " " * (width + 2) + " ".join(f"{p:>{width}}" for p in policies)
    print(header)
    for i, row_policy in enumerate(policies):
        cells = " ".join(
            f"{'x' if comparison['significant'][i][j] else '.':>{width}}"
            for j in range(len(policies))
        )
        print(f"{row_policy:>{width}}  {cells}")


def _cmd_eval(args: list[str]) -> int:
    from foundry.evalstats import campaign_summary, read_records

    overrides, rest = _split_overrides(args, {"records", "per-task"})
    if not rest or rest[0] != "report":
        raise UsageError("usage: foundry eval report --records <file> [--per-task]")
    parser = _make_parser("foundry eval report")
    parser.add_argument("--records", required=True)
    parser.add_argument("--per-task", action="store_true")
    ns = parser.parse_args(rest[1:])
    if ns.resolve_configs:
        sys.stdout.write(emit_resolved(_resolve_for(None, ns.config_path, overrides)))
        return 0
    records = read_records(Path(ns.records).read_text())
    summary = campaign_summary(records)
    comparison = summary["aggregate_comparison"] or {"cld": {}}
    print(f"{'policy':<24} {'s/n':>7} {'mean':>7} {'q05':>7} {'q95':>7}  letters")
    for policy in summary["policies"]:
        cell = summary["aggregate"][policy]
        letters = comparison["cld"].get(policy, "-")
        print(f"{policy:<24} {_fmt_cell(cell)}  {letters}")
    _print_comparison(summary["aggregate_comparison"], "aggregate")
    if ns.per_task:
        for task in summary["tasks"]:
            task_cmp = summary["per_task_comparison"][task] or {"cld": {}}
            print(f"\ntask {task}:")
            for policy in summary["policies"]:
                cell = summary["per_task"][task][policy]
                letters = task_cmp["cld"].get(policy, "-")
                print(f"  {policy:<22} {_fmt_cell(cell)}  {letters}")
    return 0


def _cmd_serve(args: list[str]) -> int:
    from foundry import server

    overrides, rest = _split_overrides(args)
    parser = _make_parser("foundry serve")
    ns = parser.parse_args(rest)
    cfg = resolve(server.config_schema(), ns.config_path, overrides)
    if ns.resolve_configs:
        sys.stdout.write(emit_resolved(cfg))
        return 0
    server.serve(cfg)
    return 0


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "stats": _cmd_stats,
    "resolve-config": _cmd_resolve_config,
    "mix-preview": _cmd_mix_preview,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        sys.stderr.write(USAGE)
        return 0 if argv else 1
    command = _COMMANDS.get(argv[0])
    if command is None:
        sys.stderr.write(f"{ERROR_PREFIX} usage: unknown subcommand {argv[0]!r}\n")
        sys.stderr.write(USAGE)
        return 1
    try:
        return command(argv[1:])
    except UsageError as exc:
        sys.stderr.write(f"{ERROR_PREFIX} usage: {exc}\n")
        return 1
    except SystemExit as exc:  # argparse errors
        return 1 if exc.code else 0
    except (ValueError, OSError, RuntimeError) as exc:
        sys.stderr.write(f"{ERROR_PREFIX} {type(exc).__name__}: {exc}\n")
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
