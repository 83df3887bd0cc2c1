"""Sample containers, splitting, normalisation and modality corruption."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ArgumentError
from ..optim import ArrayDataset
from .preprocess import preprocess_depth, preprocess_image

logger = logging.getLogger(__name__)

CAMERAS = ("cam_left", "cam_right", "cam_rs")
MODALITIES = CAMERAS + ("depth",)


@dataclass
class RawSample:
    """One recorded view: three RGB frames (H, W, 3) in 0..255 and a depth map in mm."""

    rgb_left: np.ndarray
    rgb_right: np.ndarray
    rgb_realsense: np.ndarray
    depth: np.ndarray
    label: int
    view_angle: float = 0.0


@dataclass
class MultimodalSample:
    cam_left: np.ndarray   # (1, 32, 32)
    cam_right: np.ndarray
    cam_rs: np.ndarray
    depth_vec: np.ndarray  # (1024,)
    label: int
    sample_id: int = -1


def preprocess_sample(raw: RawSample, size: int = 32, sample_id: int = -1) -> MultimodalSample:
    return MultimodalSample(
        preprocess_image(raw.rgb_left, size),
        preprocess_image(raw.rgb_right, size),
        preprocess_image(raw.rgb_realsense, size),
        preprocess_depth(raw.depth, size),
        int(raw.label),
        sample_id,
    )


@dataclass
class SampleSet:
    """Column-wise storage of many MultimodalSamples.

    Images are (N, 1, S, S), depth is (N, S*S); ``ids`` are stable sample
    identifiers used to guard against split leakage.
    """

    cam_left: np.ndarray
    cam_right: np.ndarray
    cam_rs: np.ndarray
    depth: np.ndarray
    labels: np.ndarray
    ids: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> MultimodalSample:
        return MultimodalSample(self.cam_left[i], self.cam_right[i], self.cam_rs[i], self.depth[i],
                                int(self.labels[i]), int(self.ids[i]))

    def modality(self, name: str) -> np.ndarray:
        if name not in MODALITIES:
            raise ArgumentError(f"unknown modality {name!r}; expected one of {MODALITIES}")
        return getattr(self, name)

    def take(self, idx) -> "SampleSet":
        return SampleSet(*(getattr(self, f)[idx] for f in
                           ("cam_left", "cam_right", "cam_rs", "depth", "labels", "ids")))

    def with_modality(self, name: str, values: np.ndarray) -> "SampleSet":
        self.modality(name)
        return replace(self, **{name: values})

    def to_arrays(self) -> ArrayDataset:
        return ArrayDataset({m: self.modality(m) for m in MODALITIES}, self.labels)

    @classmethod
    def from_samples(cls, samples: list[MultimodalSample]) -> "SampleSet":
        if not samples:
            raise ArgumentError("no samples")
        return cls(
            np.stack([s.cam_left for s in samples]).astype(np.float64),
            np.stack([s.cam_right for s in samples]).astype(np.float64),
            np.stack([s.cam_rs for s in samples]).astype(np.float64),
            np.stack([s.depth_vec for s in samples]).astype(np.float64),
            np.array([s.label for s in samples], dtype=np.int64),
            np.array([s.sample_id if s.sample_id >= 0 else i for i, s in enumerate(samples)], dtype=np.int64),
        )


def preprocess_all(raws: list[RawSample], size: int = 32) -> SampleSet:
    return SampleSet.from_samples([preprocess_sample(r, size, i) for i, r in enumerate(raws)])


@dataclass
class DatasetSplit:
    train: SampleSet
    validation: SampleSet
    test: SampleSet
    seed: int = 0
    normalized: bool = False
    depth_range: tuple[float, float] | None = None  # train-set (min, max), once normalised
    corrupted: tuple[str, ...] = field(default_factory=tuple)

    def parts(self):
        return self.train, self.validation, self.test

    def check_disjoint(self) -> None:
        """Raise if any sample id appears in more than one part."""
        tr, va, te = (set(p.ids.tolist()) for p in self.parts())
        if tr & va or tr & te or va & te:
            raise ArgumentError("train/validation/test sample ids overlap")


def split_dataset(samples: SampleSet, seed: int = 0) -> DatasetSplit:
    """Seeded shuffle, then 50/25/25 by position.

    Train and validation sizes are floored; the remainder goes to test.
    """
    n = len(samples)
    if n < 4:
        raise ArgumentError(f"need at least 4 samples to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_train, n_val = n // 2, n // 4
    return DatasetSplit(
        samples.take(order[:n_train]),
        samples.take(order[n_train:n_train + n_val]),
        samples.take(order[n_train + n_val:]),
        seed=seed,
    )


def _scale_depth(depth: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi <= lo:
        return np.zeros_like(depth)
    return np.clip((depth - lo) / (hi - lo), 0.0, 1.0)


def normalize(split: DatasetSplit) -> DatasetSplit:
    """Images / 255; depth min-max scaled with the training set's range, then clamped to [0, 1]."""
    if split.normalized:
        return split
    lo, hi = float(split.train.depth.min()), float(split.train.depth.max())
    if hi <= lo:
        logger.warning("training depth range is degenerate (%g); depth normalises to 0", lo)
    parts = []
    for p in split.parts():
        parts.append(SampleSet(
            np.clip(p.cam_left / 255.0, 0.0, 1.0),
            np.clip(p.cam_right / 255.0, 0.0, 1.0),
            np.clip(p.cam_rs / 255.0, 0.0, 1.0),
            _scale_depth(p.depth, lo, hi),
            p.labels, p.ids,
        ))
    return replace(split, train=parts[0], validation=parts[1], test=parts[2],
                   normalized=True, depth_range=(lo, hi))


def corrupt_modality(split: DatasetSplit, modality: str, seed: int = 0) -> DatasetSplit:
    """Replace one modality in every part with integer-uniform 0..255 noise.

    On an already normalised split the noise goes through the same scaling
    normalize() would apply (images / 255, depth min-max over the training
    noise), so the result is again in [0, 1].
    """
    if modality not in MODALITIES:
        raise ArgumentError(f"unknown modality {modality!r}; expected one of {MODALITIES}")
    rng = np.random.default_rng(seed)
    noise = [rng.integers(0, 256, size=p.modality(modality).shape).astype(np.float64) for p in split.parts()]
    if split.normalized:
        if modality == "depth":
            lo, hi = float(noise[0].min()), float(noise[0].max())
            noise = [_scale_depth(x, lo, hi) for x in noise]
        else:
            noise = [x / 255.0 for x in noise]
    tr, va, te = (p.with_modality(modality, x) for p, x in zip(split.parts(), noise))
    return replace(split, train=tr, validation=va, test=te, corrupted=split.corrupted + (modality,))
