"""Architectures and the two fusion experiments.

* CNN stream: three [conv3x3 -> ReLU -> maxpool2x2] stages (32, 64, 64
  filters), flatten, dense(128) + ReLU, dense(n_classes).
* Depth MLP: three dense(256) + ReLU layers, dense(n_classes).
* Intermediate fusion: the three camera trunks (up to their 128-d
  representation) are concatenated into a shared representation, joined
  with the MLP's last hidden activation, then dense(128) + ReLU and
  dense(n_classes). Everything is trained together from scratch.
* Decision fusion: the four unimodal models are trained separately and their
  test-set probability vectors are summed.

Graphs output logits; :func:`predict_proba` applies the softmax.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data.dataset import CAMERAS, MODALITIES, DatasetSplit
from .errors import ArgumentError, DimensionError
from .graph import Graph
from .layers import Concat, Conv2D, Dense, Flatten, MaxPool2x2, ReLU, softmax
from .metrics import EvalReport, evaluate
from .optim import ArrayDataset, TrainConfig, TrainResult, train
from .tensor import argmax_rows

logger = logging.getLogger(__name__)

# fixed offsets from the top-level seed, one per trained model
SEED_OFFSETS = {"cam_left": 11, "cam_right": 12, "cam_rs": 13, "depth": 14, "fusion": 20, "noise": 30}


@dataclass
class ArchConfig:
    image_size: int = 32
    depth_dim: int = 1024
    filters: tuple[int, ...] = (32, 64, 64)
    cnn_hidden: int = 128
    mlp_hidden: tuple[int, ...] = (256, 256, 256)
    fusion_hidden: int = 128


def _check_classes(n_classes: int) -> None:
    if n_classes < 2:
        raise ArgumentError(f"need at least 2 classes, got {n_classes}")


def add_cnn_trunk(g: Graph, entry: str, rng: np.random.Generator, image_size: int = 32,
                  filters=(32, 64, 64), hidden: int = 128) -> str:
    """Append an image trunk to ``g``; returns the id of its ReLU'd representation node."""
    node = g.input(entry, (1, image_size, image_size))
    ch, side = 1, image_size
    for i, f in enumerate(filters, start=1):
        node = g.add(Conv2D(ch, f, rng), node, name=f"{entry}/conv{i}")
        node = g.add(ReLU(), node, name=f"{entry}/relu{i}")
        node = g.add(MaxPool2x2(), node, name=f"{entry}/pool{i}")
        ch, side = f, side // 2
    node = g.add(Flatten(), node, name=f"{entry}/flatten")
    node = g.add(Dense(ch * side * side, hidden, rng), node, name=f"{entry}/fc")
    return g.add(ReLU(), node, name=f"{entry}/rep")


def add_mlp_trunk(g: Graph, entry: str, rng: np.random.Generator, depth_dim: int = 1024,
                  hidden=(256, 256, 256)) -> str:
    node = g.input(entry, (depth_dim,))
    width = depth_dim
    for i, h in enumerate(hidden, start=1):
        node = g.add(Dense(width, h, rng), node, name=f"{entry}/fc{i}")
        node = g.add(ReLU(), node, name=f"{entry}/relu{i}")
        width = h
    return node


def _add_head(g: Graph, node: str, width: int, n_classes: int, rng, prefix: str) -> str:
    return g.add(Dense(width, n_classes, rng, gain=1.0), node, name=f"{prefix}/logits")


def build_cnn_stream(n_classes: int, seed: int = 0, entry: str = "cam_left", image_size: int = 32,
                     filters=(32, 64, 64), hidden: int = 128) -> Graph:
    _check_classes(n_classes)
    rng = np.random.default_rng(seed)
    g = Graph()
    rep = add_cnn_trunk(g, entry, rng, image_size, tuple(filters), hidden)
    g.set_output(_add_head(g, rep, hidden, n_classes, rng, entry))
    g.meta = {"builder": "cnn_stream", "kwargs": dict(n_classes=n_classes, seed=seed, entry=entry,
                                                      image_size=image_size, filters=list(filters), hidden=hidden)}
    return g


def build_depth_mlp(n_classes: int, seed: int = 0, entry: str = "depth", depth_dim: int = 1024,
                    hidden=(256, 256, 256)) -> Graph:
    _check_classes(n_classes)
    rng = np.random.default_rng(seed)
    g = Graph()
    last = add_mlp_trunk(g, entry, rng, depth_dim, tuple(hidden))
    g.set_output(_add_head(g, last, hidden[-1], n_classes, rng, entry))
    g.meta = {"builder": "depth_mlp", "kwargs": dict(n_classes=n_classes, seed=seed, entry=entry,
                                                     depth_dim=depth_dim, hidden=list(hidden))}
    return g


def build_intermediate_fusion(n_classes: int, seed: int = 0, image_size: int = 32, depth_dim: int = 1024,
                              filters=(32, 64, 64), cnn_hidden: int = 128, mlp_hidden=(256, 256, 256),
                              fusion_hidden: int = 128, trunk_seeds: list[int] | None = None) -> Graph:
    """Joint graph over all four modalities.

    Each trunk is initialised from its own generator; ``trunk_seeds`` (one per
    camera plus one for depth) defaults to ``seed + 1 .. seed + 4``. A trunk
    built with seed ``s`` starts from the same weights as the trunk of
    ``build_cnn_stream(..., seed=s)`` / ``build_depth_mlp(..., seed=s)``.
    """
    _check_classes(n_classes)
    if trunk_seeds is None:
        trunk_seeds = [seed + 1, seed + 2, seed + 3, seed + 4]
    if len(trunk_seeds) != 4:
        raise ArgumentError("trunk_seeds needs one seed per camera plus one for depth")
    g = Graph()
    reps = [add_cnn_trunk(g, cam, np.random.default_rng(s), image_size, tuple(filters), cnn_hidden)
            for cam, s in zip(CAMERAS, trunk_seeds[:3])]
    shared = g.add(Concat(), *reps, name="shared")
    depth_last = add_mlp_trunk(g, "depth", np.random.default_rng(trunk_seeds[3]), depth_dim, tuple(mlp_hidden))
    joint = g.add(Concat(), shared, depth_last, name="joint")
    rng = np.random.default_rng(seed)
    node = g.add(Dense(3 * cnn_hidden + mlp_hidden[-1], fusion_hidden, rng), joint, name="fusion/fc")
    node = g.add(ReLU(), node, name="fusion/relu")
    g.set_output(_add_head(g, node, fusion_hidden, n_classes, rng, "fusion"))
    g.meta = {"builder": "intermediate_fusion", "kwargs": dict(
        n_classes=n_classes, seed=seed, image_size=image_size, depth_dim=depth_dim, filters=list(filters),
        cnn_hidden=cnn_hidden, mlp_hidden=list(mlp_hidden), fusion_hidden=fusion_hidden,
        trunk_seeds=list(trunk_seeds))}
    return g


BUILDERS = {
    "cnn_stream": build_cnn_stream,
    "depth_mlp": build_depth_mlp,
    "intermediate_fusion": build_intermediate_fusion,
}


def rebuild(meta: dict) -> Graph:
    """Reconstruct a freshly initialised graph from ``Graph.meta``."""
    try:
        return BUILDERS[meta["builder"]](**meta["kwargs"])
    except KeyError as exc:
        raise ArgumentError(f"cannot rebuild graph from metadata {meta!r}") from exc


def predict_proba(model: Graph, inputs, batch_size: int = 256) -> np.ndarray:
    """Softmax probabilities, (N, n_classes); a single unbatched sample gives (1, n_classes)."""
    first = model.entry_points and next(iter(model.entry_points))
    x0 = np.asarray(inputs[first])
    if x0.shape == model.nodes[model.entry_points[first]].shape:
        inputs = {k: np.asarray(v)[None] for k, v in inputs.items()}
        x0 = x0[None]
    n = x0.shape[0]
    out = []
    for start in range(0, n, batch_size):
        part = {k: np.asarray(v)[start:start + batch_size] for k, v in inputs.items()}
        out.append(softmax(model.forward(part, keep_cache=False)))
    return np.concatenate(out, axis=0)


def decision_fusion(probas):
    """Sum probability vectors elementwise and pick the largest (lowest index on ties).

    Accepts 1-D vectors (returns ``(sum, int)``) or (N, C) batches (returns
    ``(sum, labels)``).
    """
    probas = [np.asarray(p, dtype=np.float64) for p in probas]
    if not probas:
        raise ArgumentError("nothing to fuse")
    if len({p.shape for p in probas}) != 1:
        raise DimensionError(f"decision vectors disagree in shape: {[p.shape for p in probas]}")
    fused = np.sum(probas, axis=0)
    if fused.ndim == 1:
        return fused, int(np.argmax(fused))
    return fused, argmax_rows(fused)


# -- experiments ------------------------------------------------------------

@dataclass
class ExperimentSettings:
    seed: int = 0
    arch: ArchConfig = field(default_factory=ArchConfig)
    cnn: TrainConfig = field(default_factory=lambda: TrainConfig(patience=20))
    mlp: TrainConfig = field(default_factory=lambda: TrainConfig(patience=150))
    fusion: TrainConfig = field(default_factory=lambda: TrainConfig(patience=150))

    def train_config(self, family: str, offset_key: str) -> TrainConfig:
        base = getattr(self, family)
        return replace(base, seed=self.seed + SEED_OFFSETS[offset_key])


@dataclass
class ModelRun:
    name: str
    graph: Graph
    result: TrainResult
    report: EvalReport
    test_proba: np.ndarray


@dataclass
class DecisionFusionRun:
    report: EvalReport
    unimodal: dict[str, ModelRun]
    fused_proba: np.ndarray


def _n_classes(split: DatasetSplit) -> int:
    return int(max(p.labels.max() for p in split.parts())) + 1


def _datasets(split: DatasetSplit) -> tuple[ArrayDataset, ArrayDataset, ArrayDataset]:
    split.check_disjoint()
    return split.train.to_arrays(), split.validation.to_arrays(), split.test.to_arrays()


def build_unimodal(modality: str, n_classes: int, settings: ExperimentSettings) -> Graph:
    seed = settings.seed + SEED_OFFSETS[modality]
    a = settings.arch
    if modality == "depth":
        return build_depth_mlp(n_classes, seed, "depth", a.depth_dim, a.mlp_hidden)
    if modality not in CAMERAS:
        raise ArgumentError(f"unknown modality {modality!r}; expected one of {MODALITIES}")
    return build_cnn_stream(n_classes, seed, modality, a.image_size, a.filters, a.cnn_hidden)


def run_unimodal(split: DatasetSplit, modality: str, settings: ExperimentSettings,
                 n_classes: int | None = None) -> ModelRun:
    n_classes = n_classes or _n_classes(split)
    tr, va, te = _datasets(split)
    graph = build_unimodal(modality, n_classes, settings)
    family = "mlp" if modality == "depth" else "cnn"
    result = train(graph, tr, va, settings.train_config(family, modality))
    proba = predict_proba(graph, te.inputs)
    report = evaluate(te.labels, argmax_rows(proba), n_classes)
    name = "depth_mlp" if modality == "depth" else f"{modality}_cnn"
    logger.info("%s: accuracy %.4f after %d epochs", name, report.accuracy, result.epochs_ran)
    return ModelRun(name, graph, result, report, proba)


def run_decision_fusion_experiment(split: DatasetSplit, settings: ExperimentSettings,
                                   n_classes: int | None = None,
                                   trained: dict[str, ModelRun] | None = None) -> DecisionFusionRun:
    """Train the four unimodal models separately, then sum their test-set decision vectors.

    Models already in ``trained`` (keyed by modality, run on this same split)
    are reused instead of retrained.
    """
    n_classes = n_classes or _n_classes(split)
    trained = trained or {}
    runs = {m: trained[m] if m in trained else run_unimodal(split, m, settings, n_classes) for m in MODALITIES}
    fused, predicted = decision_fusion([r.test_proba for r in runs.values()])
    report = evaluate(split.test.labels, predicted, n_classes)
    logger.info("decision_fusion: accuracy %.4f", report.accuracy)
    return DecisionFusionRun(report, runs, fused)


def build_fusion_for(settings: ExperimentSettings, n_classes: int) -> Graph:
    a = settings.arch
    return build_intermediate_fusion(n_classes, settings.seed + SEED_OFFSETS["fusion"], a.image_size, a.depth_dim,
                                     a.filters, a.cnn_hidden, a.mlp_hidden, a.fusion_hidden)


def run_intermediate_fusion_experiment(split: DatasetSplit, settings: ExperimentSettings,
                                       n_classes: int | None = None) -> ModelRun:
    n_classes = n_classes or _n_classes(split)
    tr, va, te = _datasets(split)
    graph = build_fusion_for(settings, n_classes)
    result = train(graph, tr, va, settings.train_config("fusion", "fusion"))
    proba = predict_proba(graph, te.inputs)
    report = evaluate(te.labels, argmax_rows(proba), n_classes)
    logger.info("intermediate_fusion: accuracy %.4f after %d epochs", report.accuracy, result.epochs_ran)
    return ModelRun("intermediate_fusion", graph, result, report, proba)


def settings_dict(settings: ExperimentSettings) -> dict:
    return asdict(settings)
