"""Dataset orchestration: deterministic parallel generation, validation,
and statistics.

Every sample is a pure function of (master_seed, sample_index), derived
through a counter-based substream, so worker count and scheduling never
change the output bytes.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import (
    AssembledSample,
    GenConfig,
    LabelMode,
    PlacementRecord,
    composite,
    place_object,
    sort_by_volume,
)
from .geometry import ShapeClass, build_primitive
from .volio import VolumeHeader, read_volume, write_volume

MANIFEST_NAME = "manifest.json"
INCOMPLETE_MARKER = ".incomplete"
MAX_SAMPLE_RETRIES = 16


def derive_sample_stream(
    master_seed: int, sample_index: int, retry: int = 0
) -> np.random.Generator:
    """Counter-based substream that is a pure function of its arguments."""
    seq = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(sample_index, retry)
    )
    return np.random.Generator(np.random.Philox(seq))


def generate_sample(
    config: GenConfig, sample_index: int
) -> tuple[AssembledSample, int]:
    """Build one assembled sample; returns (sample, retry_count).

    A sample with zero accepted objects is regenerated from the next
    substream (practically unreachable with sane configs).
    """
    sample, retry, _ = _build_sample(config, sample_index)
    return sample, retry


def _build_sample(config: GenConfig, sample_index: int):
    """As generate_sample, but also returns the placement-ordered objects."""
    config.validate()
    classes = config.allowed_classes
    for retry in range(MAX_SAMPLE_RETRIES):
        rng = derive_sample_stream(config.master_seed, sample_index, retry)
        objects = []
        for _ in range(config.m_objects):
            cls = classes[int(rng.integers(0, len(classes)))]
            objects.append(build_primitive(cls, config, rng))
        ordered = sort_by_volume(objects)

        state = np.zeros(config.grid, dtype=bool)
        placements: list[PlacementRecord] = []
        accepted: list = []
        for j, obj in enumerate(ordered):
            rec = place_object(state, obj, config, rng)
            rec.order_index = j
            rec.params = {
                "o1": obj.params.o1,
                "o2": obj.params.o2,
                "o3": obj.params.o3,
                "z_c": obj.params.z_c,
                "z_max": obj.params.z_max,
                "r_max": obj.r_max,
            }
            placements.append(rec)
            if rec.accepted:
                accepted.append((obj, rec.center))
        if accepted:
            s, m = composite(accepted, config)
            sample = AssembledSample(
                s_volume=s,
                m_volume=m,
                placements=placements,
                sample_seed=(config.master_seed, sample_index, retry),
            )
            return sample, retry, ordered
    raise RuntimeError(
        f"sample {sample_index}: no objects accepted after "
        f"{MAX_SAMPLE_RETRIES} substream retries"
    )


def _volume_suffix(config: GenConfig) -> str:
    return ".nii.gz" if config.compress else ".nii"


def _mask_datatype(config: GenConfig) -> str:
    return "uint16" if config.label_mode is LabelMode.INSTANCE else "uint8"


def _write_sample(
    config: GenConfig, output_dir: Path, index: int
) -> dict:
    """Generate sample `index`, write its volumes, return its manifest entry."""
    sample, retry = generate_sample(config, index)
    suffix = _volume_suffix(config)
    s_name = f"s_{index:06d}{suffix}"
    m_name = f"m_{index:06d}{suffix}"
    write_volume(
        sample.s_volume, VolumeHeader(dims=config.grid), output_dir / s_name
    )
    write_volume(
        sample.m_volume,
        VolumeHeader(dims=config.grid, datatype=_mask_datatype(config)),
        output_dir / m_name,
    )
    histogram: dict[str, int] = {}
    for rec in sample.placements:
        if rec.accepted:
            key = str(rec.shape_class.class_id)
            histogram[key] = histogram.get(key, 0) + 1
    accepted = [r for r in sample.placements if r.accepted]
    mean_overlap = (
        sum(r.overlap_ratio_at_acceptance for r in accepted) / len(accepted)
        if accepted
        else 0.0
    )
    return {
        "index": index,
        "sample_seed": list(sample.sample_seed),
        "retries": retry,
        "s_path": s_name,
        "m_path": m_name,
        "accepted_count": len(accepted),
        "class_histogram": dict(sorted(histogram.items(), key=lambda kv: int(kv[0]))),
        "mean_accepted_overlap": mean_overlap,
        "placements": [r.to_dict() for r in sample.placements],
    }


def _created_at() -> str:
    # honours SOURCE_DATE_EPOCH for reproducible output
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def generate_dataset(
    config: GenConfig, output_dir: str | Path, workers: int = 1
) -> dict:
    """Generate config.n_samples sample pairs plus a manifest.

    Output bytes are identical for any worker count. The manifest is
    written last; an `.incomplete` marker flags aborted runs.
    """
    config.validate()
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    marker = output_dir / INCOMPLETE_MARKER
    marker.write_text("generation in progress\n")

    indices = list(range(config.n_samples))
    if workers <= 1 or not indices:
        entries = [_write_sample(config, output_dir, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(
                pool.map(
                    _write_sample,
                    [config] * len(indices),
                    [output_dir] * len(indices),
                    indices,
                    chunksize=max(1, len(indices) // (workers * 8)),
                )
            )
    entries.sort(key=lambda e: e["index"])

    manifest = {
        "schema_version": 1,
        "tool_version": __version__,
        "created_at": _created_at(),
        "config": config.to_dict(),
        "samples": entries,
    }
    manifest_path = output_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    marker.unlink()
    return manifest


def load_manifest(manifest_path: str | Path) -> dict:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("schema_version") != 1:
        raise ValueError(
            f"unsupported manifest schema {manifest.get('schema_version')}"
        )
    return manifest


@dataclass
class SampleCheck:
    index: int
    checks: dict[str, bool] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.errors and all(self.checks.values())


@dataclass
class ValidationReport:
    samples: list[SampleCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.samples)

    @property
    def failed_indices(self) -> list[int]:
        return [s.index for s in self.samples if not s.passed]

    def summary(self) -> str:
        n = len(self.samples)
        bad = self.failed_indices
        if not bad:
            return f"{n}/{n} samples pass all checks"
        return f"{n - len(bad)}/{n} samples pass; failing: {bad[:20]}"


def _mask_upper_bound(config: GenConfig) -> int:
    if config.label_mode is LabelMode.BINARY:
        return 1
    if config.label_mode is LabelMode.SHAPE_CLASS:
        return 32
    return config.m_objects


def _check_sample(
    config: GenConfig, base: Path, entry: dict, regen: bool
) -> SampleCheck:
    result = SampleCheck(index=entry["index"])
    try:
        s, s_hdr = read_volume(base / entry["s_path"])
        m, m_hdr = read_volume(base / entry["m_path"])
    except Exception as exc:
        result.errors.append(f"read: {exc}")
        return result

    grid = tuple(config.grid)
    result.checks["dims"] = (
        tuple(s_hdr.dims) == grid and tuple(m_hdr.dims) == grid
    )

    s_values = set(np.unique(s).tolist())
    m_max = _mask_upper_bound(config)
    result.checks["value_domain"] = (
        s_values <= {0, config.intensity}
        and int(m.min()) >= 0
        and int(m.max()) <= m_max
    )

    recs = entry["placements"]
    vols = [r["volume"] for r in recs]
    result.checks["volume_order"] = all(
        vols[i] >= vols[i + 1] for i in range(len(vols) - 1)
    )
    thr = config.overlap_threshold
    if config.overlap_enabled:
        result.checks["recorded_ratios"] = all(
            r["overlap_ratio_at_acceptance"] < thr
            for r in recs
            if r["accepted"]
        )
    else:
        result.checks["recorded_ratios"] = all(
            r["overlap_ratio_at_acceptance"] == 0.0
            for r in recs
            if r["accepted"]
        )

    if not regen:
        return result

    try:
        sample, retry, ordered = _build_sample(config, entry["index"])
    except Exception as exc:
        result.errors.append(f"regenerate: {exc}")
        return result

    result.checks["determinism"] = (
        retry == entry["retries"]
        and np.array_equal(sample.s_volume, s)
        and np.array_equal(sample.m_volume, m)
    )

    # replay the accepted placements against a fresh accumulator
    from .assembly import _clipped_window, overlap_ratio

    regen_pairs = [
        (obj, rec.center, rec)
        for obj, rec in zip(ordered, sample.placements)
        if rec.accepted
    ]
    accepted_objs = []
    audit_ok = True
    state = np.zeros(grid, dtype=bool)
    for obj, center, rec in regen_pairs:
        win = _clipped_window(obj, center, grid)
        if win is None:
            audit_ok = False
            break
        gsl, lsl = win
        candidate = obj.occupancy[lsl]
        ratio = overlap_ratio(state[gsl], candidate)
        if config.overlap_enabled:
            if not ratio < thr:
                audit_ok = False
        elif ratio != 0.0:
            audit_ok = False
        if ratio != rec.overlap_ratio_at_acceptance:
            audit_ok = False
        state[gsl] |= candidate
        accepted_objs.append((obj, center, rec))
    result.checks["overlap_audit"] = audit_ok

    # shell-mask consistency: S foreground lies inside the filled union
    union = state
    fg = s > 0
    shell_ok = bool(np.all(union[fg]))
    if config.label_mode is LabelMode.BINARY:
        shell_ok = shell_ok and bool(np.all(m[fg] == 1))
    result.checks["shell_mask_consistency"] = shell_ok

    # overwrite correctness: label at a voxel equals the label of the
    # last (smallest-volume) object covering it; verified in reverse
    claimed = np.zeros(grid, dtype=bool)
    overwrite_ok = True
    for k in range(len(accepted_objs) - 1, -1, -1):
        obj, center, rec = accepted_objs[k]
        win = _clipped_window(obj, center, grid)
        gsl, lsl = win
        filled = obj.occupancy[lsl]
        fresh = filled & ~claimed[gsl]
        label = _expected_label(config, obj, k)
        if not bool(np.all(m[gsl][fresh] == label)):
            overwrite_ok = False
        claimed[gsl] |= filled
    # background must stay 0
    overwrite_ok = overwrite_ok and bool(np.all(m[~claimed] == 0))
    result.checks["overwrite_correctness"] = overwrite_ok
    return result


def _expected_label(config: GenConfig, obj, accepted_pos: int) -> int:
    if config.label_mode is LabelMode.BINARY:
        return 1
    if config.label_mode is LabelMode.SHAPE_CLASS:
        return obj.shape_class.class_id + 1
    return accepted_pos + 1


def validate_dataset(
    manifest_path: str | Path, regen_fraction: float = 1.0
) -> ValidationReport:
    """Run the per-sample invariant audits over a generated dataset.

    regen_fraction controls how many samples are regenerated from their
    seeds for the determinism and overlap audits (1.0 = all).
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    config = GenConfig.from_dict(manifest["config"])
    base = manifest_path.parent
    report = ValidationReport()
    n = len(manifest["samples"])
    regen_every = 1 if regen_fraction >= 1.0 else max(
        1, int(round(1.0 / max(regen_fraction, 1e-9)))
    )
    for pos, entry in enumerate(manifest["samples"]):
        regen = regen_fraction > 0 and pos % regen_every == 0
        report.samples.append(_check_sample(config, base, entry, regen))
    if n != config.n_samples:
        extra = SampleCheck(index=-1)
        extra.errors.append(
            f"manifest lists {n} samples, config says {config.n_samples}"
        )
        report.samples.append(extra)
    return report


def dataset_stats(manifest_path: str | Path) -> dict:
    """Aggregate statistics over a generated dataset."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    config = GenConfig.from_dict(manifest["config"])
    base = manifest_path.parent

    accepted_hist: dict[int, int] = {}
    drawn_hist: dict[int, int] = {}
    accepted_counts: list[int] = []
    overlap_sum = 0.0
    overlap_n = 0
    fg_fractions: list[float] = []
    params_by_zrule: dict[str, set] = {}

    for entry in manifest["samples"]:
        accepted_counts.append(entry["accepted_count"])
        for rec in entry["placements"]:
            cid = rec["shape_class"]
            drawn_hist[cid] = drawn_hist.get(cid, 0) + 1
            z_name = ShapeClass.from_id(cid).z.value
            p = rec["params"]
            key = (p["o1"], p["o2"], p["o3"], p["z_c"], p["z_max"], p["r_max"])
            params_by_zrule.setdefault(z_name, set()).add(key)
            if rec["accepted"]:
                accepted_hist[cid] = accepted_hist.get(cid, 0) + 1
                overlap_sum += rec["overlap_ratio_at_acceptance"]
                overlap_n += 1
        m, _ = read_volume(base / entry["m_path"])
        fg_fractions.append(float((m > 0).mean()))

    return {
        "n_samples": len(manifest["samples"]),
        "class_histogram": {
            str(k): v for k, v in sorted(accepted_hist.items())
        },
        "class_draw_histogram": {
            str(k): v for k, v in sorted(drawn_hist.items())
        },
        "accepted_counts": {
            "per_sample": accepted_counts,
            "mean": (
                sum(accepted_counts) / len(accepted_counts)
                if accepted_counts
                else 0.0
            ),
        },
        "foreground_fraction": {
            "mean": float(np.mean(fg_fractions)) if fg_fractions else 0.0,
            "min": float(np.min(fg_fractions)) if fg_fractions else 0.0,
            "max": float(np.max(fg_fractions)) if fg_fractions else 0.0,
        },
        "mean_accepted_overlap_ratio": (
            overlap_sum / overlap_n if overlap_n else 0.0
        ),
        "distinct_param_sets_by_z_rule": {
            k: len(v) for k, v in sorted(params_by_zrule.items())
        },
        "label_mode": config.label_mode.value,
    }
