"""Synthetic multi-label signal generation, dataset file I/O, and splitting.

Dataset CSV schema: header ``id,labels,v0,v1,...,v{l-1}``; the labels field
is a semicolon-joined list of active class indices (``0;3``); values are
decimal floats written with 17 significant digits so the round trip is
exact. A sidecar ``manifest.json`` records num_classes, signal_len,
num_samples, seed, and the full generation spec.

Each synthetic class owns a contiguous voxel block carrying a smooth
half-cosine bump; a sample is the sum of its active class bumps plus iid
Gaussian noise. Per-sample random streams are keyed by (master seed,
sample index), so generation order does not matter.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, EmptyDatasetError

CSV_NAME = "dataset.csv"
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True, eq=False)
class Sample:
    id: str
    values: np.ndarray  # (signal_len,) float64
    labels: np.ndarray  # (num_classes,) multi-hot ints

    def active_classes(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.labels)]


@dataclass
class Dataset:
    samples: list[Sample]
    num_classes: int
    signal_len: int

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator knobs.

    region_size defaults to signal_len // (2 * num_classes): class regions
    tile the first half of the signal and the rest stays background, so
    activations are localized rather than wall-to-wall.
    """

    num_classes: int
    signal_len: int
    num_samples: int
    seed: int = 0
    region_size: int | None = None
    template_gain: float = 6.0
    noise_sigma: float = 0.3
    label_density: float = 0.25

    def __post_init__(self):
        if self.num_classes < 1:
            raise ConfigError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.signal_len < 1:
            raise ConfigError(f"signal_len must be >= 1, got {self.signal_len}")
        if self.num_samples < 1:
            raise ConfigError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.region_size is None:
            object.__setattr__(self, "region_size",
                               max(1, self.signal_len // (2 * self.num_classes)))
        if self.region_size < 1:
            raise ConfigError(f"region_size must be >= 1, got {self.region_size}")
        if self.num_classes * self.region_size > self.signal_len:
            raise ConfigError(
                f"{self.num_classes} regions of {self.region_size} voxels "
                f"exceed signal length {self.signal_len}"
            )
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not 0 < self.label_density <= self.num_classes:
            raise ConfigError(
                f"label_density must be in (0, num_classes], got {self.label_density}"
            )


def class_templates(spec: SyntheticSpec) -> np.ndarray:
    """Per-class half-cosine bump over the class's voxel block, peak 1."""
    templates = np.zeros((spec.num_classes, spec.signal_len))
    w = spec.region_size
    bump = np.sin(np.pi * (np.arange(w) + 0.5) / w)
    for c in range(spec.num_classes):
        templates[c, c * w : (c + 1) * w] = bump
    return templates


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Draw ``spec.num_samples`` samples, deterministic under ``spec.seed``."""
    templates = class_templates(spec)
    p_active = spec.label_density / spec.num_classes
    samples = []
    for i in range(spec.num_samples):
        rng = np.random.default_rng([spec.seed, i])
        while True:
            bits = rng.random(spec.num_classes) < p_active
            if bits.any():
                break
        noise = rng.normal(0.0, spec.noise_sigma, spec.signal_len)
        values = spec.template_gain * templates[bits].sum(axis=0) + noise
        samples.append(Sample(f"s{i:05d}", values, bits.astype(np.int64)))
    return Dataset(samples, spec.num_classes, spec.signal_len)


def generate_twin_channel(spec: SyntheticSpec):
    """Two half-length channels plus their concatenation, sharing labels.

    Returns (left, right, both). Each channel is an independent half-length
    draw (own noise, half-length region layout) conditioned on one shared
    label vector per sample; ``both`` concatenates left then right. Enables
    single-channel vs concatenated comparisons on synthetic data.
    """
    if spec.signal_len % 2 != 0:
        raise ConfigError(
            f"twin-channel generation needs an even signal length, "
            f"got {spec.signal_len}"
        )
    half = replace(spec, signal_len=spec.signal_len // 2, region_size=None)
    templates = class_templates(half)
    p_active = spec.label_density / spec.num_classes
    left, right, both = [], [], []
    for i in range(spec.num_samples):
        rng = np.random.default_rng([spec.seed, i])
        while True:
            bits = rng.random(spec.num_classes) < p_active
            if bits.any():
                break
        labels = bits.astype(np.int64)
        sid = f"s{i:05d}"
        channels = []
        for channel in (0, 1):
            noise = np.random.default_rng([spec.seed, i, channel]).normal(
                0.0, spec.noise_sigma, half.signal_len)
            channels.append(spec.template_gain * templates[bits].sum(axis=0)
                            + noise)
        left.append(Sample(sid, channels[0], labels))
        right.append(Sample(sid, channels[1], labels))
        both.append(Sample(sid, np.concatenate(channels), labels))
    return (Dataset(left, spec.num_classes, half.signal_len),
            Dataset(right, spec.num_classes, half.signal_len),
            Dataset(both, spec.num_classes, spec.signal_len))


def stack_samples(samples) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """(signals, labels, ids) matrices for a sample list or Dataset."""
    if isinstance(samples, Dataset):
        samples = samples.samples
    if len(samples) == 0:
        raise EmptyDatasetError("no samples to stack")
    signals = np.stack([s.values for s in samples]).astype(np.float64)
    labels = np.stack([s.labels for s in samples]).astype(np.float64)
    return signals, labels, [s.id for s in samples]


def save_dataset(dataset: Dataset, out_dir, spec: SyntheticSpec | None = None):
    """Write dataset.csv and manifest.json into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / CSV_NAME
    header = "id,labels," + ",".join(f"v{i}" for i in range(dataset.signal_len))
    lines = [header]
    for s in dataset.samples:
        labels = ";".join(str(c) for c in s.active_classes())
        values = ",".join(f"{v:.17g}" for v in s.values)
        lines.append(f"{s.id},{labels},{values}")
    csv_path.write_text("\n".join(lines) + "\n")
    manifest = {
        "num_classes": dataset.num_classes,
        "signal_len": dataset.signal_len,
        "num_samples": len(dataset),
        "seed": spec.seed if spec is not None else None,
        "spec": asdict(spec) if spec is not None else None,
    }
    manifest_path = out / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_path, manifest_path


def _parse_labels(field: str, num_classes: int | None, lineno: int) -> list[int]:
    if field == "":
        return []
    out = []
    for tok in field.split(";"):
        try:
            c = int(tok)
        except ValueError:
            raise DataFormatError(f"line {lineno}: bad label index {tok!r}") from None
        if c < 0 or (num_classes is not None and c >= num_classes):
            raise DataFormatError(f"line {lineno}: label index {c} out of range")
        if c in out:
            raise DataFormatError(f"line {lineno}: duplicate label index {c}")
        out.append(c)
    return out


def load_dataset(path) -> Dataset:
    """Parse a dataset CSV (or a directory holding dataset.csv + manifest.json)."""
    p = Path(path)
    if p.is_dir():
        p = p / CSV_NAME
    if not p.exists():
        raise DataFormatError(f"dataset file not found: {p}")
    manifest_path = p.parent / MANIFEST_NAME
    num_classes = None
    manifest = None
    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text())
        except json.JSONDecodeError as err:
            raise DataFormatError(f"bad manifest {manifest_path}: {err}") from None
        num_classes = manifest.get("num_classes")

    lines = p.read_text().splitlines()
    if not lines:
        raise EmptyDatasetError(f"empty dataset file: {p}")
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "id" or header[1] != "labels":
        raise DataFormatError(f"line 1: header must start with 'id,labels,v0,...'")
    signal_len = len(header) - 2
    if header[2:] != [f"v{i}" for i in range(signal_len)]:
        raise DataFormatError("line 1: value columns must be named v0..v{l-1}")

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2 + signal_len:
            raise DataFormatError(
                f"line {lineno}: expected {2 + signal_len} fields, got {len(parts)}"
            )
        label_idx = _parse_labels(parts[1], num_classes, lineno)
        try:
            values = np.array([float(tok) for tok in parts[2:]], dtype=np.float64)
        except ValueError:
            raise DataFormatError(f"line {lineno}: non-numeric signal value") from None
        if not np.isfinite(values).all():
            raise DataFormatError(f"line {lineno}: NaN or Inf signal value")
        rows.append((parts[0], label_idx, values))
    if not rows:
        raise EmptyDatasetError(f"dataset file has a header but no rows: {p}")

    if num_classes is None:
        seen = [c for _, idx, _ in rows for c in idx]
        if not seen:
            raise DataFormatError(
                "cannot infer class count: no labels present and no manifest"
            )
        num_classes = max(seen) + 1
    if manifest is not None:
        for key, want in (("signal_len", signal_len), ("num_samples", len(rows))):
            if manifest.get(key) is not None and manifest[key] != want:
                raise DataFormatError(
                    f"manifest {key}={manifest[key]} disagrees with CSV ({want})"
                )

    samples = []
    for sid, label_idx, values in rows:
        labels = np.zeros(num_classes, dtype=np.int64)
        labels[label_idx] = 1
        samples.append(Sample(sid, values, labels))
    return Dataset(samples, num_classes, signal_len)


def split(dataset: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then prefix split: (first ~fraction, remainder)."""
    if not 0 < fraction < 1:
        raise ConfigError(f"split fraction must be in (0, 1), got {fraction}")
    n = len(dataset)
    n_first = int(n * fraction)
    if n_first == 0 or n_first == n:
        raise ConfigError(
            f"split of {n} samples at fraction {fraction} leaves one side empty"
        )
    perm = np.random.default_rng(seed).permutation(n)
    first = [dataset.samples[i] for i in perm[:n_first]]
    second = [dataset.samples[i] for i in perm[n_first:]]
    return (Dataset(first, dataset.num_classes, dataset.signal_len),
            Dataset(second, dataset.num_classes, dataset.signal_len))
