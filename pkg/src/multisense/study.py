"""Multi-seed accuracy study on complementary synthetic data.

For each seed the six models are trained on clean data. Optionally the
same split is then corrupted in one modality and the models that see it
(that modality's unimodal model, decision fusion and intermediate fusion)
are retrained; unimodal models of untouched modalities are reused, since
their data and seeds are identical.

The default settings are desk-scale: narrower convolution stacks and capped
epoch budgets, with the optimizer and early-stopping policy unchanged.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .data import corrupt_modality, generate_synthetic, prepare_split
from .models import (
    CAMERAS,
    SEED_OFFSETS,
    ArchConfig,
    ExperimentSettings,
    run_decision_fusion_experiment,
    run_intermediate_fusion_experiment,
)
from .optim import TrainConfig

logger = logging.getLogger(__name__)

UNIMODAL_ROWS = {"cam_left": "cam_left_cnn", "cam_right": "cam_right_cnn", "cam_rs": "cam_rs_cnn",
                 "depth": "depth_mlp"}
ROWS = (*UNIMODAL_ROWS.values(), "decision_fusion", "intermediate_fusion")


def desk_settings(seed: int = 0, cnn_epochs: int = 100, mlp_epochs: int = 100, fusion_epochs: int = 40) -> ExperimentSettings:
    """Reduced widths and epoch caps that keep three seeds within a few minutes on one core."""
    return ExperimentSettings(
        seed=seed,
        arch=ArchConfig(filters=(8, 16, 16), cnn_hidden=64, fusion_hidden=64),
        cnn=TrainConfig(max_epochs=cnn_epochs, patience=20),
        mlp=TrainConfig(max_epochs=mlp_epochs, patience=150),
        fusion=TrainConfig(max_epochs=fusion_epochs, patience=150),
    )


@dataclass
class SeedResult:
    seed: int
    clean: dict[str, float]
    noisy: dict[str, float] = field(default_factory=dict)
    clean_seconds: float = 0.0
    noisy_seconds: float = 0.0


def run_seed(seed: int, settings: ExperimentSettings | None = None, n_classes: int = 10,
             views_per_class: int = 72, corrupt: str | None = None) -> SeedResult:
    settings = settings or desk_settings(seed)
    start = time.perf_counter()
    raws = generate_synthetic(n_classes, views_per_class, seed=seed, complementary=True)
    split = prepare_split(raws, seed=seed, size=settings.arch.image_size)
    dec = run_decision_fusion_experiment(split, settings, n_classes)
    fused = run_intermediate_fusion_experiment(split, settings, n_classes)
    clean = {UNIMODAL_ROWS[m]: r.report.accuracy for m, r in dec.unimodal.items()}
    clean["decision_fusion"] = dec.report.accuracy
    clean["intermediate_fusion"] = fused.report.accuracy
    result = SeedResult(seed, clean, clean_seconds=time.perf_counter() - start)
    logger.info("seed %d clean: %s", seed, clean)
    if corrupt is not None:
        start = time.perf_counter()
        noisy_split = corrupt_modality(split, corrupt, seed=seed + SEED_OFFSETS["noise"])
        kept = {m: r for m, r in dec.unimodal.items() if m != corrupt}
        ndec = run_decision_fusion_experiment(noisy_split, settings, n_classes, trained=kept)
        nfused = run_intermediate_fusion_experiment(noisy_split, settings, n_classes)
        result.noisy = {UNIMODAL_ROWS[corrupt]: ndec.unimodal[corrupt].report.accuracy,
                        "decision_fusion": ndec.report.accuracy,
                        "intermediate_fusion": nfused.report.accuracy}
        result.noisy_seconds = time.perf_counter() - start
        logger.info("seed %d with %s corrupted: %s", seed, corrupt, result.noisy)
    return result


def mean_accuracies(results: list[SeedResult], which: str = "clean") -> dict[str, float]:
    rows = getattr(results[0], which).keys()
    return {row: float(np.mean([getattr(r, which)[row] for r in results])) for row in rows}


def best_camera(acc: dict[str, float]) -> float:
    return max(acc[UNIMODAL_ROWS[c]] for c in CAMERAS)


def noise_drops(results: list[SeedResult]) -> dict[str, float]:
    """Mean clean-minus-corrupted accuracy of the two fusion methods."""
    clean, noisy = mean_accuracies(results, "clean"), mean_accuracies(results, "noisy")
    return {k: clean[k] - noisy[k] for k in ("decision_fusion", "intermediate_fusion")}
