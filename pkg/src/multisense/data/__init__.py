"""Data pipeline: preprocessing, splitting, normalisation, corruption, synthetic data and file formats."""
from .dataset import (
    CAMERAS,
    MODALITIES,
    DatasetSplit,
    MultimodalSample,
    RawSample,
    SampleSet,
    corrupt_modality,
    normalize,
    preprocess_all,
    preprocess_sample,
    split_dataset,
)
from .io import load_icub_dataset, read_split_file, write_split_file
from .preprocess import bilinear_resize, grayscale
from .synthetic import generate_synthetic


def prepare_split(raws, seed: int = 0, size: int = 32) -> DatasetSplit:
    """Preprocess, split 50/25/25 and normalise in one go."""
    return normalize(split_dataset(preprocess_all(raws, size), seed))


__all__ = [
    "CAMERAS", "MODALITIES", "DatasetSplit", "MultimodalSample", "RawSample", "SampleSet",
    "bilinear_resize", "corrupt_modality", "generate_synthetic", "grayscale", "load_icub_dataset",
    "normalize", "prepare_split", "preprocess_all", "preprocess_sample", "read_split_file",
    "split_dataset", "write_split_file",
]
