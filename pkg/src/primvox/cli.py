"""Command-line surface: generate, validate, stats, preview.

Exit codes: 0 success, 1 validation/content failure, 2 usage,
configuration, or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from types import SimpleNamespace

import yaml

from .assembly import GenConfig
from .pipeline import (
    dataset_stats,
    generate_dataset,
    load_manifest,
    validate_dataset,
)
from .profiles import PROFILES, profile_overrides
from .volio import read_volume, render_preview

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

# config-file keys that are output options rather than GenConfig fields
_OUTPUT_KEYS = {"out", "workers", "profile"}


class CliError(Exception):
    pass


def _default_workers() -> int:
    env = os.environ.get("PRIMVOX_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"PRIMVOX_WORKERS={env!r} is not an integer")
    return 1


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {path}")
    data = yaml.safe_load(p.read_text())
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise CliError(f"config file {path} must hold a mapping")
    known = set(GenConfig.__dataclass_fields__) | _OUTPUT_KEYS
    unknown = sorted(set(data) - known)
    if unknown:
        raise CliError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return data


def _resolve_config(args) -> tuple[GenConfig, Path, int]:
    """Merge defaults <- profile <- config file <- flags."""
    merged: dict = {}
    file_data: dict = {}
    if args.config:
        file_data = _load_config_file(args.config)
    profile = args.profile or file_data.get("profile")
    if profile:
        try:
            merged.update(profile_overrides(profile))
        except KeyError as exc:
            raise CliError(str(exc.args[0]))
    merged.update({k: v for k, v in file_data.items() if k not in _OUTPUT_KEYS})
    if args.seed is not None:
        merged["master_seed"] = args.seed
    try:
        config = GenConfig.from_dict(merged)
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid configuration: {exc}")
    out = Path(args.out or file_data.get("out") or "dataset")
    workers = args.workers or file_data.get("workers") or _default_workers()
    return config, out, int(workers)


def cmd_generate(args) -> int:
    config, out, workers = _resolve_config(args)
    start = time.monotonic()
    manifest = generate_dataset(config, out, workers=workers)
    elapsed = time.monotonic() - start
    placed = sum(len(e["placements"]) for e in manifest["samples"])
    accepted = sum(e["accepted_count"] for e in manifest["samples"])
    rejected_rate = 1.0 - accepted / placed if placed else 0.0
    print(
        f"generated {config.n_samples} samples to {out} "
        f"in {elapsed:.1f}s (rejected-object rate {rejected_rate:.3f})"
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validate_dataset(args.manifest, regen_fraction=args.regen_fraction)
    print(report.summary())
    if report.passed:
        return EXIT_OK
    for check in report.samples:
        if not check.passed:
            failed = [k for k, ok in check.checks.items() if not ok]
            detail = ", ".join(failed + check.errors)
            print(f"  sample {check.index}: {detail}")
    return EXIT_FAIL


def cmd_stats(args) -> int:
    stats = dataset_stats(args.manifest)
    if args.json:
        print(json.dumps(stats, indent=2))
        return EXIT_OK
    print(f"samples:                  {stats['n_samples']}")
    print(f"label mode:               {stats['label_mode']}")
    print(f"mean accepted per sample: {stats['accepted_counts']['mean']:.2f}")
    print(
        "foreground fraction:      "
        f"mean {stats['foreground_fraction']['mean']:.4f} "
        f"min {stats['foreground_fraction']['min']:.4f} "
        f"max {stats['foreground_fraction']['max']:.4f}"
    )
    print(
        f"mean accepted overlap:    {stats['mean_accepted_overlap_ratio']:.4f}"
    )
    print("accepted class histogram:")
    for cid, count in stats["class_histogram"].items():
        print(f"  class {int(cid):2d}: {count}")
    print("distinct parameter sets by z rule:")
    for rule, n in stats["distinct_param_sets_by_z_rule"].items():
        print(f"  {rule}: {n}")
    return EXIT_OK


def cmd_preview(args) -> int:
    manifest = load_manifest(args.manifest)
    samples = manifest["samples"]
    if not 0 <= args.sample < len(samples):
        raise CliError(f"sample index {args.sample} out of range")
    entry = samples[args.sample]
    base = Path(args.manifest).parent
    s, _ = read_volume(base / entry["s_path"])
    m, _ = read_volume(base / entry["m_path"])
    axis_dim = {"x": 0, "y": 1, "z": 2}[args.axis]
    slice_index = (
        args.slice if args.slice is not None else s.shape[axis_dim] // 2
    )
    out = args.out or f"preview_{args.sample:06d}_{args.axis}{slice_index}.png"
    try:
        render_preview(
            SimpleNamespace(s_volume=s, m_volume=m), args.axis, slice_index, out
        )
    except ValueError as exc:
        raise CliError(str(exc))
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="primvox",
        description="Generate and inspect assembled 3D primitive-object "
        "volume datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dataset")
    gen.add_argument("config", nargs="?", help="YAML/JSON config file")
    gen.add_argument("--out", help="output directory (default: dataset)")
    gen.add_argument("--seed", type=int, help="master seed override")
    gen.add_argument(
        "--workers",
        type=int,
        help="worker processes (default: $PRIMVOX_WORKERS or 1)",
    )
    gen.add_argument(
        "--profile",
        choices=sorted(PROFILES),
        help="named configuration profile",
    )
    gen.set_defaults(func=cmd_generate)

    val = sub.add_parser("validate", help="audit a generated dataset")
    val.add_argument("manifest", help="path to manifest.json")
    val.add_argument(
        "--regen-fraction",
        type=float,
        default=1.0,
        help="fraction of samples to regenerate for the determinism "
        "and overlap audits (default 1.0)",
    )
    val.set_defaults(func=cmd_validate)

    st = sub.add_parser("stats", help="dataset statistics")
    st.add_argument("manifest", help="path to manifest.json")
    st.add_argument("--json", action="store_true", help="machine output")
    st.set_defaults(func=cmd_stats)

    pre = sub.add_parser("preview", help="render a slice preview PNG")
    pre.add_argument("manifest", help="path to manifest.json")
    pre.add_argument("--sample", type=int, default=0)
    pre.add_argument("--axis", choices=["x", "y", "z"], default="z")
    pre.add_argument("--slice", type=int, default=None, help="default: middle")
    pre.add_argument("--out", help="output PNG path")
    pre.set_defaults(func=cmd_preview)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
