"""Config-driven orchestration: data, experiments, reports and checkpoints on disk.

Output layout under ``output_dir``::

    config.yaml                 resolved configuration
    metrics.csv                 model,accuracy,precision_weighted,recall_weighted,f1_weighted,epochs_ran
    <model>/confusion.csv       exact counts
    <model>/confusion.pgm       row-normalised heatmap
    <model>/model.ckpt          trained parameters (unimodal and intermediate fusion)
    <model>/history.csv         epoch,train_loss,val_loss
    decision_fusion/<part>.ckpt and <part>_history.csv for each fused model
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .checkpoint import save_checkpoint
from .config import SELECTORS, ExperimentConfig, config_to_dict
from .data import corrupt_modality, generate_synthetic, load_icub_dataset, prepare_split
from .data.dataset import DatasetSplit
from .errors import StateError
from .metrics import EvalReport, export_heatmap
from .models import (
    SEED_OFFSETS,
    ModelRun,
    run_decision_fusion_experiment,
    run_intermediate_fusion_experiment,
    run_unimodal,
)

logger = logging.getLogger(__name__)

METRICS_HEADER = ["model", "accuracy", "precision_weighted", "recall_weighted", "f1_weighted", "epochs_ran"]


@dataclass
class ReportRow:
    model: str
    report: EvalReport
    epochs_ran: int
    # (file stem, run) pairs whose checkpoints and histories belong to this row
    runs: list[tuple[str, ModelRun]] = field(default_factory=list)

    def csv_fields(self) -> list[str]:
        r = self.report
        return [self.model, repr(r.accuracy), repr(r.precision_weighted), repr(r.recall_weighted),
                repr(r.f1_weighted), str(self.epochs_ran)]


def prepare_data(cfg: ExperimentConfig) -> tuple[DatasetSplit, int]:
    """Generate or load the raw data, then preprocess, split, normalise and corrupt as configured."""
    if cfg.synthetic is not None:
        s = cfg.synthetic
        raws = generate_synthetic(s.n_classes, s.views_per_class, seed=cfg.seed,
                                  complementary=s.complementary, depth_classes=s.depth_classes)
        n_classes = s.n_classes
    else:
        raws = load_icub_dataset(cfg.dataset_root, max_objects=cfg.max_objects)
        n_classes = max(r.label for r in raws) + 1
    split = prepare_split(raws, seed=cfg.seed, size=cfg.settings.arch.image_size)
    if cfg.corruption:
        split = corrupt_modality(split, cfg.corruption, seed=cfg.seed + SEED_OFFSETS["noise"])
    return split, n_classes


def guard_leakage(split: DatasetSplit, report: EvalReport) -> None:
    """Test metrics must come from exactly the test samples and nothing else."""
    split.check_disjoint()
    if report.confusion.total != len(split.test):
        raise StateError(f"report covers {report.confusion.total} samples but the test split has {len(split.test)}")


def run_selected(cfg: ExperimentConfig, split: DatasetSplit, n_classes: int) -> list[ReportRow]:
    settings = cfg.experiment_settings()
    unimodal: dict[str, ModelRun] = {}
    rows = []
    for selector in cfg.selected():
        target = SELECTORS[selector]
        if target == "decision_fusion":
            dec = run_decision_fusion_experiment(split, settings, n_classes, trained=unimodal)
            unimodal.update(dec.unimodal)
            parts = [(r.name, r) for r in dec.unimodal.values()]
            rows.append(ReportRow("decision_fusion", dec.report,
                                  max(r.result.epochs_ran for _, r in parts), parts))
        elif target == "intermediate_fusion":
            run = run_intermediate_fusion_experiment(split, settings, n_classes)
            rows.append(ReportRow(run.name, run.report, run.result.epochs_ran, [("model", run)]))
        else:
            run = unimodal.get(target) or run_unimodal(split, target, settings, n_classes)
            unimodal[target] = run
            rows.append(ReportRow(run.name, run.report, run.result.epochs_ran, [("model", run)]))
        guard_leakage(split, rows[-1].report)
    return rows


def write_history(path: Path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss"])
        for epoch, tr, va in history:
            w.writerow([epoch, repr(float(tr)), repr(float(va))])


def write_metrics(path: Path, rows: list[ReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for row in rows:
            w.writerow(row.csv_fields())


def write_outputs(cfg: ExperimentConfig, rows: list[ReportRow]) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))
    for row in rows:
        d = out / row.model
        d.mkdir(exist_ok=True)
        export_heatmap(row.report.confusion, d / "confusion", cfg.heatmap_zoom)
        for stem, run in row.runs:
            prefix = "" if stem == "model" else f"{stem}_"
            save_checkpoint(run.graph, d / f"{stem}.ckpt", model_id=run.name, history=run.result.history)
            write_history(d / f"{prefix}history.csv", run.result.history)
    write_metrics(out / "metrics.csv", rows)
    return out


def run_config(cfg: ExperimentConfig) -> list[ReportRow]:
    """Run every selected experiment and write all artifacts; returns the report rows."""
    split, n_classes = prepare_data(cfg)
    rows = run_selected(cfg, split, n_classes)
    write_outputs(cfg, rows)
    return rows


def format_table(rows: list[ReportRow]) -> str:
    lines = [f"{'model':<22}{'accuracy':>10}{'precision':>11}{'recall':>9}{'f1':>9}{'epochs':>8}"]
    for row in rows:
        r = row.report
        lines.append(f"{row.model:<22}{r.accuracy:>10.4f}{r.precision_weighted:>11.4f}"
                     f"{r.recall_weighted:>9.4f}{r.f1_weighted:>9.4f}{row.epochs_ran:>8d}")
    return "\n".join(lines)
