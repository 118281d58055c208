"""Dataset discovery, seeded holdout splitting, minority-class mirror
augmentation, and batching.

Samples are (path, label) pairs discovered from two class folders. Augmented
samples carry `augmented=True` and refer to the horizontal mirror of their
source file; the mirror is applied at load time, so augmentation itself never
touches the filesystem. Splitting and augmentation happen in that order, and
mirrors only ever enter the training partition.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, replace

from .errors import (DatasetLayoutError, EmptyClassError, InsufficientDataError,
                     ParameterError)
from .imaging import Image, mirror_horizontal, read_image
from .rng import Rng

log = logging.getLogger(__name__)

ORDINARY_LABEL = 0
SOFT_SHELL_LABEL = 1
LABEL_NAMES = ("ordinary-shrimp", "soft-shell-shrimp")

# "soft-shell shrimp" (with a space) is accepted on disk and normalized.
_SOFT_DIR_ALIASES = ("soft-shell-shrimp", "soft-shell shrimp")
_IMAGE_EXTENSIONS = (".ppm", ".png")

# Distinct PCG32 streams so split, batching, and synthesis never share a
# sequence even when called with the same user seed.
_SPLIT_STREAM = 0x5B3C1D2E
_BATCH_STREAM = 0x2545F4914F6CDD1D


@dataclass(frozen=True)
class LabeledSample:
    """One image reference; `augmented` marks a mirror-derived variant."""

    path: str
    label: int
    augmented: bool = False


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/validation partition, tagged with how it was made."""

    train: tuple[LabeledSample, ...]
    validation: tuple[LabeledSample, ...]
    seed: int
    train_fraction: float


def scan_dataset(root) -> list[LabeledSample]:
    """Collect labeled samples from `<root>/ordinary-shrimp/` and
    `<root>/soft-shell-shrimp/`, sorted lexicographically by path.

    Non-image files are skipped with a logged warning."""
    root = str(root)
    class_dirs = []
    ordinary = os.path.join(root, LABEL_NAMES[ORDINARY_LABEL])
    if not os.path.isdir(ordinary):
        raise DatasetLayoutError(f"missing class folder {ordinary!r}")
    class_dirs.append((ordinary, ORDINARY_LABEL))
    for alias in _SOFT_DIR_ALIASES:
        soft = os.path.join(root, alias)
        if os.path.isdir(soft):
            class_dirs.append((soft, SOFT_SHELL_LABEL))
            break
    else:
        raise DatasetLayoutError(
            f"missing class folder {os.path.join(root, _SOFT_DIR_ALIASES[0])!r}")

    samples = []
    for directory, label in class_dirs:
        found = 0
        for name in sorted(os.listdir(directory)):
            path = os.path.join(directory, name)
            if not os.path.isfile(path) or not name.lower().endswith(_IMAGE_EXTENSIONS):
                log.warning("skipping non-image file %s", path)
                continue
            samples.append(LabeledSample(path=path, label=label))
            found += 1
        if found == 0:
            raise EmptyClassError(f"no images in class folder {directory!r}")
    samples.sort(key=lambda s: s.path)
    return samples


def holdout_split(samples, train_fraction: float, seed: int) -> DatasetSplit:
    """Stratified holdout: per class, shuffle with the seeded PRNG and send
    floor(train_fraction * class_count) samples to train, the rest to
    validation."""
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    by_label: dict[int, list[LabeledSample]] = {}
    for s in samples:
        by_label.setdefault(s.label, []).append(s)
    if not by_label:
        raise ParameterError("cannot split an empty sample list")
    rng = Rng(seed, stream=_SPLIT_STREAM)
    train: list[LabeledSample] = []
    validation: list[LabeledSample] = []
    for label in sorted(by_label):
        group = sorted(by_label[label], key=lambda s: (s.path, s.augmented))
        if len(group) < 2:
            raise InsufficientDataError(
                f"class {label} has {len(group)} sample(s); need at least 2 to split")
        rng.shuffle(group)
        k = math.floor(train_fraction * len(group))
        train.extend(group[:k])
        validation.extend(group[k:])
    return DatasetSplit(train=tuple(train), validation=tuple(validation),
                        seed=seed, train_fraction=train_fraction)


def balance_augment(split: DatasetSplit, min_count: int) -> DatasetSplit:
    """Top up any training class below `min_count` with horizontal-mirror
    copies (each original mirrored at most once). Validation is untouched."""
    if min_count < 0:
        raise ParameterError(f"min_count must be nonnegative, got {min_count}")
    train = list(split.train)
    labels = sorted({s.label for s in train})
    mirrored = {s.path for s in train if s.augmented}
    additions: list[LabeledSample] = []
    for label in labels:
        cls = [s for s in train if s.label == label]
        have = len(cls)
        if have >= min_count:
            continue
        if min_count > 2 * have:
            raise InsufficientDataError(
                f"class {label}: cannot reach {min_count} samples from {have} "
                f"originals (mirroring tops out at {2 * have})")
        candidates = sorted((s for s in cls if not s.augmented and s.path not in mirrored),
                            key=lambda s: s.path)
        for s in candidates[:min_count - have]:
            additions.append(replace(s, augmented=True))
            mirrored.add(s.path)
    return DatasetSplit(train=tuple(train + additions), validation=split.validation,
                        seed=split.seed, train_fraction=split.train_fraction)


def make_batches(samples, batch_size: int, seed: int, epoch: int) -> list[list[LabeledSample]]:
    """Shuffle deterministically, keyed by (seed, epoch), then chunk; the
    final partial batch is kept."""
    if batch_size < 1:
        raise ParameterError(f"batch_size must be >= 1, got {batch_size}")
    items = list(samples)
    if not items:
        raise ParameterError("cannot batch an empty sample list")
    rng = Rng(seed, stream=_BATCH_STREAM + epoch)
    rng.shuffle(items)
    return [items[i:i + batch_size] for i in range(0, len(items), batch_size)]


def load_sample_image(sample: LabeledSample) -> Image:
    """Read the sample's file; mirror-derived samples are flipped on load."""
    img = read_image(sample.path)
    return mirror_horizontal(img) if sample.augmented else img


def write_split_manifest(split: DatasetSplit, path) -> None:
    """Write `train|val <label> <path>` lines, sorted by path within each
    partition."""
    lines = []
    for tag, part in (("train", split.train), ("val", split.validation)):
        for s in sorted(part, key=lambda s: s.path):
            lines.append(f"{tag} {s.label} {s.path}\n")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.writelines(lines)
