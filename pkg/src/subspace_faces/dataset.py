"""Grayscale face corpora: PGM I/O, labeled datasets, splits and synthetic data."""

from __future__ import annotations

import math
import os
import re
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SPLIT_POLICIES = ("first_k", "seeded_random")


class PGMFormatError(ValueError):
    """Malformed PGM header or payload."""


@dataclass(frozen=True)
class ImageSample:
    pixels: np.ndarray
    label: str = ""
    source_index: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


class Dataset:
    """An ordered, immutable collection of equally sized image matrices.

    Loaded corpora hold gray levels in [0, 1]; synthetic and corrupted
    datasets may leave that range, so only finiteness is enforced here.
    """

    def __init__(self, samples: Iterable[ImageSample]):
        samples = tuple(samples)
        if not samples:
            raise ValueError("a dataset needs at least one sample")
        shapes = {s.pixels.shape for s in samples}
        if len(shapes) != 1:
            raise ValueError(f"samples have mixed sizes: {sorted(shapes)}")
        shape = shapes.pop()
        if len(shape) != 2 or min(shape) < 1:
            raise ValueError(f"samples must be non-empty 2-D matrices, got shape {shape}")
        images = np.stack([np.asarray(s.pixels, dtype=float) for s in samples])
        if not np.all(np.isfinite(images)):
            raise ValueError("dataset contains non-finite pixel values")
        images.setflags(write=False)
        self._samples = samples
        self._images = images
        self._labels = np.array([s.label for s in samples], dtype=object)
        self._labels.setflags(write=False)

    @classmethod
    def from_arrays(cls, images, labels=None, source_index=None) -> "Dataset":
        images = np.asarray(images, dtype=float)
        if images.ndim != 3:
            raise ValueError(f"expected an (n, rows, cols) array, got shape {images.shape}")
        n = images.shape[0]
        labels = [str(i) for i in range(n)] if labels is None else [str(l) for l in labels]
        if source_index is None:
            seen: dict[str, int] = {}
            source_index = []
            for l in labels:
                source_index.append(seen.get(l, 0))
                seen[l] = seen.get(l, 0) + 1
        return cls(ImageSample(images[i], labels[i], int(source_index[i])) for i in range(n))

    def __len__(self) -> int:
        return len(self._samples)

    def __getitem__(self, i: int) -> ImageSample:
        return self._samples[i]

    def __iter__(self):
        return iter(self._samples)

    def __repr__(self) -> str:
        return f"Dataset(n={len(self)}, shape={self.shape}, subjects={len(self.subjects)})"

    @property
    def samples(self) -> tuple[ImageSample, ...]:
        return self._samples

    @property
    def shape(self) -> tuple[int, int]:
        return self._images.shape[1:]

    @property
    def images(self) -> np.ndarray:
        """Read-only (n, rows, cols) array."""
        return self._images

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def subjects(self) -> list[str]:
        return list(dict.fromkeys(self._labels))

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(self._samples[i] for i in indices)


@dataclass(frozen=True)
class Split:
    train: Dataset
    test: Dataset
    policy: str
    k_per_subject: int
    seed: int | None = None


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------

def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last one.
    """
    tokens: list[bytes] = []
    i, n = 0, len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        if i >= n:
            break
        start = i
        while i < n and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
            i += 1
        tokens.append(data[start:i])
    return tokens, i + 1


def load_pgm(data: bytes) -> ImageSample:
    """Decode a binary (P5) or ASCII (P2) PGM image.

    Pixels are divided by the declared maxval; 16-bit binary samples are
    big-endian.
    """
    if isinstance(data, (str, os.PathLike)):
        data = Path(data).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise PGMFormatError(f"magic: expected P5 or P2, got {magic!r}")
    tokens, offset = _header_tokens(data[2:], 3)
    offset += 2
    names = ("width", "height", "maxval")
    if len(tokens) < 3:
        raise PGMFormatError(f"{names[len(tokens)]}: header truncated")
    values = []
    for name, tok in zip(names, tokens):
        try:
            values.append(int(tok))
        except ValueError:
            raise PGMFormatError(f"{name}: not an integer ({tok!r})") from None
    width, height, maxval = values
    if width < 1:
        raise PGMFormatError(f"width: must be positive, got {width}")
    if height < 1:
        raise PGMFormatError(f"height: must be positive, got {height}")
    if maxval == 0 or not 0 < maxval <= 65535:
        raise PGMFormatError(f"maxval: must be in 1..65535, got {maxval}")
    count = width * height
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        payload = data[offset:offset + count * dtype.itemsize]
        if len(payload) < count * dtype.itemsize:
            raise PGMFormatError(
                f"payload: expected {count * dtype.itemsize} bytes for {width}x{height}, "
                f"got {len(payload)}"
            )
        raw = np.frombuffer(payload, dtype=dtype).astype(float)
    else:
        body = re.sub(rb"#[^\n\r]*", b" ", data[offset - 1:]).split()
        if len(body) < count:
            raise PGMFormatError(f"payload: expected {count} samples, got {len(body)}")
        raw = np.array([int(t) for t in body[:count]], dtype=float)
    if np.any(raw > maxval):
        raise PGMFormatError(f"maxval: pixel values exceed declared maxval {maxval}")
    return ImageSample(pixels=(raw / maxval).reshape(height, width))


def write_pgm(pixels, maxval: int = 255) -> bytes:
    """Encode a matrix of gray levels in [0, 1] as binary PGM."""
    pixels = np.asarray(pixels, dtype=float)
    if pixels.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {pixels.shape}")
    if not 0 < maxval <= 65535:
        raise ValueError(f"maxval must be in 1..65535, got {maxval}")
    raw = np.rint(np.clip(pixels, 0.0, 1.0) * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    return header + raw.astype(dtype).tobytes()


# ---------------------------------------------------------------------------
# Corpora and splits
# ---------------------------------------------------------------------------

def natural_key(name: str):
    return [int(part) if part.isdigit() else part.lower() for part in re.split(r"(\d+)", name)]


def load_corpus(root, layout: str = "orl_style") -> Dataset:
    """Load ``root/<subject>/<image>.pgm`` into a Dataset.

    Subjects and files within a subject are ordered by natural sort, so
    ORL's ``s2`` precedes ``s10`` and ``2.pgm`` precedes ``10.pgm``.
    """
    if layout != "orl_style":
        raise ValueError(f"unknown corpus layout {layout!r}")
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} is not a directory")
    subjects = sorted((p for p in root.iterdir() if p.is_dir()), key=lambda p: natural_key(p.name))
    if not subjects:
        raise ValueError(f"no subject directories under {root}")
    samples = []
    for subject in subjects:
        files = sorted(
            (f for f in subject.iterdir() if f.is_file() and f.suffix.lower() == ".pgm"),
            key=lambda f: natural_key(f.name),
        )
        if not files:
            raise ValueError(f"subject directory {subject} contains no PGM files")
        for index, f in enumerate(files):
            try:
                img = load_pgm(f.read_bytes())
            except PGMFormatError as exc:
                raise PGMFormatError(f"{f}: {exc}") from None
            samples.append((f, ImageSample(img.pixels, subject.name, index)))
    sizes: dict[tuple[int, int], list[str]] = {}
    for f, s in samples:
        sizes.setdefault(s.shape, []).append(str(f.relative_to(root)))
    if len(sizes) > 1:
        common = max(sizes, key=lambda s: len(sizes[s]))
        offenders = [f"{p} ({s[0]}x{s[1]})" for s, ps in sizes.items() if s != common for p in ps]
        raise ValueError(f"mixed image sizes (majority {common[0]}x{common[1]}): " + ", ".join(offenders[:10]))
    return Dataset(s for _, s in samples)


def split(d: Dataset, k_per_subject: int, policy: str = "first_k", seed: int | None = None) -> Split:
    """Per-subject train/test split keeping ``k_per_subject`` training images."""
    if policy not in SPLIT_POLICIES:
        raise ValueError(f"unknown split policy {policy!r}; expected one of {SPLIT_POLICIES}")
    if k_per_subject < 1:
        raise ValueError(f"k_per_subject must be positive, got {k_per_subject}")
    if policy == "seeded_random" and seed is None:
        raise ValueError("seeded_random split requires a seed")
    by_subject: dict[str, list[int]] = {}
    for i, s in enumerate(d):
        by_subject.setdefault(s.label, []).append(i)
    train_idx: list[int] = []
    for label, idx in by_subject.items():
        if len(idx) <= k_per_subject:
            raise ValueError(
                f"subject {label!r} has {len(idx)} samples; need more than {k_per_subject}"
            )
        if policy == "first_k":
            chosen = sorted(idx, key=lambda i: d[i].source_index)[:k_per_subject]
        else:
            rng = np.random.default_rng([seed, zlib.crc32(label.encode("utf-8"))])
            chosen = [idx[j] for j in rng.choice(len(idx), size=k_per_subject, replace=False)]
        train_idx.extend(chosen)
    train_set = set(train_idx)
    train = [i for i in range(len(d)) if i in train_set]
    test = [i for i in range(len(d)) if i not in train_set]
    return Split(d.subset(train), d.subset(test), policy, k_per_subject, seed)


def vectorize(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Stack each image column by column into an (n, rows*cols) matrix."""
    X = np.transpose(d.images, (0, 2, 1)).reshape(len(d), -1)
    return X, d.labels


def unvectorize(X, shape: tuple[int, int]) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    rows, cols = shape
    return np.transpose(X.reshape(-1, cols, rows), (0, 2, 1))


def columns_of(d: Dataset | np.ndarray) -> np.ndarray:
    """All image columns as an (n*cols, rows) matrix, sample-major."""
    images = d.images if isinstance(d, Dataset) else np.asarray(d, dtype=float)
    n, rows, cols = images.shape
    return np.transpose(images, (0, 2, 1)).reshape(n * cols, rows)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def synth_gaussian(n: int, d: int, spectrum: Sequence[float], seed: int) -> Dataset:
    """Zero-mean Gaussian samples, each stored as a d x 1 image with its own label.

    The covariance has eigenvalues ``spectrum`` (zero beyond its length)
    along seeded random orthogonal axes.
    """
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.ndim != 1 or spectrum.size == 0 or spectrum.size > d:
        raise ValueError(f"spectrum must hold 1..{d} values, got {spectrum.size}")
    if np.any(spectrum <= 0) or np.any(np.diff(spectrum) > 0):
        raise ValueError("spectrum must be positive and nonincreasing")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    axes = random_orthogonal(d, rng)[:, : spectrum.size]
    z = rng.standard_normal((n, spectrum.size)) * np.sqrt(spectrum)
    return Dataset.from_arrays((z @ axes.T)[:, :, None])


def true_axes(d: int, k: int, seed: int) -> np.ndarray:
    """Leading axes used by :func:`synth_gaussian` for the same ``d`` and seed."""
    return random_orthogonal(d, np.random.default_rng(seed))[:, :k]


def inject_outliers(d: Dataset, fraction: float, magnitude: float, seed: int) -> Dataset:
    """Add uniform noise in [-magnitude, magnitude] to a seeded subset of samples.

    The subset has ``ceil(fraction * n)`` members; labels are kept.
    """
    n = len(d)
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    count = math.ceil(round(fraction * n, 9))
    if count < 1:
        raise ValueError(f"fraction {fraction} of {n} samples selects nobody")
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(n, size=count, replace=False).tolist())
    samples = []
    for i, s in enumerate(d):
        if i in chosen:
            noise = rng.uniform(-magnitude, magnitude, size=s.pixels.shape)
            s = ImageSample(s.pixels + noise, s.label, s.source_index)
        samples.append(s)
    return Dataset(samples)
