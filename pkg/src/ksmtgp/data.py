"""Dataset loading (PGM + manifest) and synthetic grating benchmarks."""

from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .learners import DEFAULT_FOLDS

MANIFEST = "manifest.csv"
MANIFEST_HEADER = ["path", "label", "split"]
SPLITS = ("train", "test")


class DatasetError(ValueError):
    pass


_PGM_HEADER = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode a binary (P5) greyscale PGM into floats in [0, 1]."""
    if data[:2] != b"P5":
        raise DatasetError(f"not a binary PGM (magic {data[:2]!r}, expected b'P5')")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        m = _PGM_HEADER.match(data, pos)
        if m is None:
            raise DatasetError(f"PGM header truncated before {name}")
        tok = m.group(1)
        if not tok.isdigit():
            raise DatasetError(f"PGM {name} is not a positive integer: {tok!r}")
        fields.append(int(tok))
        pos = m.end()
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise DatasetError(f"PGM has empty size {width}x{height}")
    if not 0 < maxval <= 255:
        raise DatasetError(f"PGM maxval {maxval} unsupported (need 1..255)")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise DatasetError("PGM header must end with a single whitespace byte")
    pos += 1
    payload = data[pos : pos + width * height]
    if len(payload) < width * height:
        raise DatasetError(f"PGM payload truncated: {len(payload)} of {width * height} bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    if pixels.max(initial=0) > maxval:
        raise DatasetError(f"PGM pixel value exceeds maxval {maxval}")
    return pixels.astype(np.float64) / maxval


def write_pgm(img) -> bytes:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("write_pgm expects a single 2-D image")
    h, w = img.shape
    px = np.clip(np.rint(img * 255), 0, 255).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode() + px.tobytes()


@dataclass(frozen=True)
class TaskSpec:
    """One classification task: labelled train and test images."""

    name: str
    train_images: tuple
    train_labels: np.ndarray
    test_images: tuple
    test_labels: np.ndarray
    n_classes: int

    def validate(self, k: int = DEFAULT_FOLDS) -> None:
        if not len(self.train_images) or not len(self.test_images):
            raise DatasetError(f"task {self.name}: empty train or test split")
        counts = np.bincount(self.train_labels, minlength=self.n_classes)
        if counts.min() < k:
            raise DatasetError(f"task {self.name}: every class needs at least {k} training images")
        for img in (*self.train_images, *self.test_images):
            if min(img.shape) < 8:
                raise DatasetError(f"task {self.name}: image of shape {img.shape} smaller than 8x8")


@dataclass(frozen=True)
class Dataset:
    name: str
    images: tuple
    labels: np.ndarray
    splits: tuple
    class_names: tuple = field(default=())

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def to_task(self) -> TaskSpec:
        split = np.asarray(self.splits)
        tr, te = np.flatnonzero(split == "train"), np.flatnonzero(split == "test")
        return TaskSpec(
            self.name,
            tuple(self.images[i] for i in tr),
            self.labels[tr],
            tuple(self.images[i] for i in te),
            self.labels[te],
            self.n_classes,
        )


def _default_decoder(path: Path) -> np.ndarray:
    if path.suffix.lower() not in (".pgm", ".pnm"):
        raise DatasetError(f"no decoder for {path.suffix!r} files (only binary PGM is built in)")
    return parse_pgm(path.read_bytes())


def load_dataset(root, decoder: Callable[[Path], np.ndarray] | None = None) -> Dataset:
    """Read ``root/manifest.csv`` (header ``path,label,split``) and its images."""
    root = Path(root)
    decoder = decoder or _default_decoder
    manifest = root / MANIFEST
    if not manifest.is_file():
        raise DatasetError(f"{manifest} not found")
    images, labels, splits, names = [], [], [], {}
    with open(manifest, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise DatasetError(f"{manifest} row 1: header must be {','.join(MANIFEST_HEADER)}, got {header}")
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DatasetError(f"{manifest} row {rowno}: expected 3 columns, got {len(row)}")
            rel, label, split = row
            if split not in SPLITS:
                raise DatasetError(f"{manifest} row {rowno}: unknown split {split!r} (use train or test)")
            path = root / Path(*rel.split("/"))
            if not path.is_file():
                raise DatasetError(f"{manifest} row {rowno}: image {rel} not found")
            try:
                img = decoder(path)
            except DatasetError as exc:
                raise DatasetError(f"{manifest} row {rowno}: {exc}") from None
            labels.append(names.setdefault(label, len(names)))
            images.append(img)
            splits.append(split)
    if not images:
        raise DatasetError(f"{manifest}: no rows")
    labels_arr = np.array(labels, dtype=np.int64)
    split_arr = np.array(splits)
    for name, c in names.items():
        for s in SPLITS:
            if not np.any((labels_arr == c) & (split_arr == s)):
                raise DatasetError(f"{manifest}: class {name!r} has no {s} images")
    return Dataset(root.name, tuple(images), labels_arr, tuple(splits), tuple(names))


def save_dataset(task: TaskSpec, root) -> Path:
    """Write a task as PGM files plus ``manifest.csv``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for split, imgs, labels in (
        ("train", task.train_images, task.train_labels),
        ("test", task.test_images, task.test_labels),
    ):
        os.makedirs(root / split, exist_ok=True)
        for i, (img, lab) in enumerate(zip(imgs, labels)):
            rel = f"{split}/{i:05d}.pgm"
            (root / rel).write_bytes(write_pgm(img))
            rows.append((rel, f"class{int(lab)}", split))
    with open(root / MANIFEST, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        w.writerows(rows)
    return root


@dataclass(frozen=True)
class SynthSpec:
    size: int = 32
    classes: int | None = None
    train_per_class: int = 10
    test_per_class: int = 100
    noise: float = 0.1
    seed: int = 0

    def validate(self, default_classes: int) -> int:
        classes = self.classes or default_classes
        if self.size < 8:
            raise ValueError("synthetic images must be at least 8x8")
        if classes < 2:
            raise ValueError("need at least two classes")
        if self.train_per_class < DEFAULT_FOLDS or self.test_per_class < 1:
            raise ValueError(f"need >= {DEFAULT_FOLDS} training and >= 1 test images per class")
        if self.noise < 0:
            raise ValueError("noise std must be non-negative")
        return classes


ORIENTATION_PERIOD = 8.0
FREQUENCY_PERIODS = (12.0, 4.0)
CONTRAST = 0.35


def _grating(size: int, theta: float, period: float, phase: float) -> np.ndarray:
    t = np.arange(size, dtype=np.float64)
    y, x = np.meshgrid(t, t, indexing="ij")
    u = x * math.cos(theta) + y * math.sin(theta)
    return 0.5 + CONTRAST * np.cos(2 * math.pi * u / period + phase)


def _synth_task(name: str, spec: SynthSpec, kind: int, classes: int, draw) -> TaskSpec:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, kind]))
    splits = {}
    for split, per_class in (("train", spec.train_per_class), ("test", spec.test_per_class)):
        imgs, labels = [], []
        for c in range(classes):
            for _ in range(per_class):
                clean = draw(rng, c)
                noisy = clean + rng.normal(0.0, spec.noise, clean.shape) if spec.noise > 0 else clean
                imgs.append(np.clip(noisy, 0.0, 1.0))
                labels.append(c)
        splits[split] = (tuple(imgs), np.array(labels, dtype=np.int64))
    return TaskSpec(name, *splits["train"], *splits["test"], classes)


def generate_orientation_task(spec: SynthSpec = SynthSpec()) -> TaskSpec:
    """Gratings at ``classes`` evenly spaced orientations with random phase."""
    classes = spec.validate(4)

    def draw(rng, c):
        phase = rng.uniform(0, 2 * math.pi)
        return _grating(spec.size, math.pi * c / classes, ORIENTATION_PERIOD, phase)

    return _synth_task("orientation", spec, 1, classes, draw)


def generate_frequency_task(spec: SynthSpec = SynthSpec()) -> TaskSpec:
    """Gratings at ``classes`` spatial frequencies with random orientation and phase."""
    classes = spec.validate(2)
    periods = np.geomspace(*FREQUENCY_PERIODS, classes)

    def draw(rng, c):
        theta = rng.uniform(0, math.pi)
        phase = rng.uniform(0, 2 * math.pi)
        return _grating(spec.size, theta, periods[c], phase)

    return _synth_task("frequency", spec, 2, classes, draw)


def generate_synth_pair(spec_a: SynthSpec = SynthSpec(), spec_b: SynthSpec = SynthSpec()) -> tuple[TaskSpec, TaskSpec]:
    return generate_orientation_task(spec_a), generate_frequency_task(spec_b)


def stack_images(images: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([np.asarray(i, dtype=np.float64) for i in images])
