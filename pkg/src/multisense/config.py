"""Experiment configuration: a YAML tree validated into dataclasses.

Schema (every key optional; missing keys take the defaults shown by
``multisense --print-default-config``)::

    seed: 0
    data:
      synthetic:             # exactly one of synthetic / dataset_root
        n_classes: 10
        views_per_class: 72
        complementary: true
        depth_classes: 2
      dataset_root: null     # <root>/<object>/<view>/{left,right,rs_rgb}.png + depth.bin
      max_objects: null      # only with dataset_root
    experiments: [all]       # unimodal-left/right/rs/depth, decision-fusion, intermediate-fusion, all
    corruption: none         # none or a modality name (cam_left, cam_right, cam_rs, depth)
    output_dir: runs/default
    heatmap_zoom: 8
    train:
      cnn:    {learning_rate, beta1, beta2, eps, max_epochs, patience, min_delta, batch_size}
      mlp:    {...}
      fusion: {...}
    arch: {image_size, depth_dim, filters, cnn_hidden, mlp_hidden, fusion_hidden}

Errors carry the offending field path and, when the field exists in the
file, its line number.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .data.dataset import MODALITIES
from .errors import ConfigError
from .models import ArchConfig, ExperimentSettings
from .optim import TrainConfig

SELECTORS = {
    "unimodal-left": "cam_left",
    "unimodal-right": "cam_right",
    "unimodal-rs": "cam_rs",
    "unimodal-depth": "depth",
    "decision-fusion": "decision_fusion",
    "intermediate-fusion": "intermediate_fusion",
}
ALL = "all"


@dataclass
class SyntheticSpec:
    n_classes: int = 10
    views_per_class: int = 72
    complementary: bool = True
    depth_classes: int = 2


@dataclass
class ExperimentConfig:
    seed: int = 0
    synthetic: SyntheticSpec | None = field(default_factory=SyntheticSpec)
    dataset_root: str | None = None
    max_objects: int | None = None
    experiments: tuple[str, ...] = (ALL,)
    corruption: str | None = None
    output_dir: str = "runs/default"
    heatmap_zoom: int = 8
    settings: ExperimentSettings = field(default_factory=ExperimentSettings)

    def selected(self) -> list[str]:
        """Selector names expanded, in canonical report order."""
        chosen = set(SELECTORS) if ALL in self.experiments else set(self.experiments)
        return [s for s in SELECTORS if s in chosen]

    def experiment_settings(self) -> ExperimentSettings:
        return replace(self.settings, seed=self.seed)


def _train_fields() -> list[str]:
    return [f.name for f in fields(TrainConfig) if f.name != "seed"]


def config_to_dict(cfg: ExperimentConfig) -> dict:
    data: dict[str, Any] = {}
    if cfg.synthetic is not None:
        data["synthetic"] = asdict(cfg.synthetic)
    else:
        data["dataset_root"] = cfg.dataset_root
        data["max_objects"] = cfg.max_objects
    s = cfg.settings
    return {
        "seed": cfg.seed,
        "data": data,
        "experiments": list(cfg.experiments),
        "corruption": cfg.corruption or "none",
        "output_dir": cfg.output_dir,
        "heatmap_zoom": cfg.heatmap_zoom,
        "train": {fam: {k: getattr(getattr(s, fam), k) for k in _train_fields()}
                  for fam in ("cnn", "mlp", "fusion")},
        "arch": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(s.arch).items()},
    }


def default_config_text() -> str:
    return yaml.safe_dump(config_to_dict(ExperimentConfig()), sort_keys=False, default_flow_style=False)


class _Reader:
    """Typed access to the parsed tree with line-aware diagnostics."""

    def __init__(self, tree: Any, root_node: yaml.Node | None, source: str):
        self.tree = tree
        self.root = root_node
        self.source = source

    def _line(self, path: tuple) -> int | None:
        node = self.root
        for key in path:
            if isinstance(node, yaml.MappingNode):
                node = next((v for k, v in node.value if k.value == key), None)
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                node = node.value[key]
            else:
                node = None
            if node is None:
                return None
        return node.start_mark.line + 1 if node is not None else None

    def fail(self, path: tuple, msg: str) -> ConfigError:
        name = ".".join(str(p) for p in path) or "<root>"
        line = self._line(path)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: {name}: {msg}")

    def mapping(self, value: Any, path: tuple, allowed: set[str]) -> dict:
        if value is None:
            return {}
        if not isinstance(value, dict):
            raise self.fail(path, f"expected a mapping, got {type(value).__name__}")
        for key in value:
            if key not in allowed:
                raise self.fail(path + (key,), f"unknown key; allowed: {', '.join(sorted(allowed))}")
        return value

    def integer(self, value: Any, path: tuple, minimum: int | None = None) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(path, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise self.fail(path, f"must be >= {minimum}, got {value}")
        return value

    def number(self, value: Any, path: tuple, positive: bool = False) -> float:
        if isinstance(value, str):
            # YAML 1.1 reads exponents without a dot (1e-3) as strings
            try:
                value = float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != value:
            raise self.fail(path, f"expected a number, got {value!r}")
        if positive and not value > 0:
            raise self.fail(path, f"must be > 0, got {value}")
        return float(value)

    def boolean(self, value: Any, path: tuple) -> bool:
        if not isinstance(value, bool):
            raise self.fail(path, f"expected true/false, got {value!r}")
        return value

    def string(self, value: Any, path: tuple) -> str:
        if not isinstance(value, str) or not value:
            raise self.fail(path, f"expected a non-empty string, got {value!r}")
        return value

    def int_list(self, value: Any, path: tuple) -> tuple[int, ...]:
        if not isinstance(value, list) or not value:
            raise self.fail(path, f"expected a non-empty list of integers, got {value!r}")
        return tuple(self.integer(v, path + (i,), 1) for i, v in enumerate(value))


def _parse_train(r: _Reader, raw: Any, path: tuple, base: TrainConfig) -> TrainConfig:
    raw = r.mapping(raw, path, set(_train_fields()))
    out = {}
    for key, value in raw.items():
        p = path + (key,)
        if key in ("max_epochs", "patience", "batch_size"):
            out[key] = r.integer(value, p, 1)
        elif key == "min_delta":
            out[key] = r.number(value, p)
            if out[key] < 0:
                raise r.fail(p, "must be >= 0")
        elif key in ("beta1", "beta2"):
            out[key] = r.number(value, p)
            if not 0 <= out[key] < 1:
                raise r.fail(p, "must lie in [0, 1)")
        else:
            out[key] = r.number(value, p, positive=True)
    return replace(base, **out)


def _parse_arch(r: _Reader, raw: Any) -> ArchConfig:
    raw = r.mapping(raw, ("arch",), {f.name for f in fields(ArchConfig)})
    out = {}
    for key, value in raw.items():
        p = ("arch", key)
        out[key] = r.int_list(value, p) if key in ("filters", "mlp_hidden") else r.integer(value, p, 1)
    arch = replace(ArchConfig(), **out)
    if arch.image_size % (2 ** len(arch.filters)):
        raise r.fail(("arch", "image_size"), f"must be divisible by 2**{len(arch.filters)} (one halving per conv stage)")
    if arch.depth_dim != arch.image_size ** 2:
        # depth maps are resampled onto the same grid as the images
        raise r.fail(("arch", "depth_dim"), f"must equal image_size**2 = {arch.image_size ** 2}")
    return arch


def parse_config(tree: Any, root_node: yaml.Node | None = None, source: str = "<config>") -> ExperimentConfig:
    r = _Reader(tree, root_node, source)
    top = r.mapping(tree, (), {"seed", "data", "experiments", "corruption", "output_dir", "heatmap_zoom",
                               "train", "arch"})
    cfg = ExperimentConfig()
    if "seed" in top:
        cfg.seed = r.integer(top["seed"], ("seed",), 0)

    data = r.mapping(top.get("data"), ("data",), {"synthetic", "dataset_root", "max_objects"})
    has_syn = data.get("synthetic") is not None
    has_root = data.get("dataset_root") is not None
    if has_syn and has_root:
        raise r.fail(("data",), "give exactly one of synthetic / dataset_root, not both")
    if has_root:
        cfg.synthetic = None
        cfg.dataset_root = r.string(data["dataset_root"], ("data", "dataset_root"))
        if data.get("max_objects") is not None:
            cfg.max_objects = r.integer(data["max_objects"], ("data", "max_objects"), 2)
    else:
        if data.get("max_objects") is not None:
            raise r.fail(("data", "max_objects"), "only valid together with dataset_root")
        syn = r.mapping(data.get("synthetic"), ("data", "synthetic"), {f.name for f in fields(SyntheticSpec)})
        spec = SyntheticSpec()
        for key, value in syn.items():
            p = ("data", "synthetic", key)
            setattr(spec, key, r.boolean(value, p) if key == "complementary" else r.integer(value, p, 1))
        if spec.n_classes < 2:
            raise r.fail(("data", "synthetic", "n_classes"), "need at least 2 classes")
        if spec.views_per_class * spec.n_classes < 4:
            raise r.fail(("data", "synthetic", "views_per_class"), "too few samples to split 50/25/25")
        if spec.complementary and (spec.depth_classes < 2 or spec.n_classes % spec.depth_classes
                                   or spec.n_classes // spec.depth_classes < 2):
            raise r.fail(("data", "synthetic", "depth_classes"),
                         "complementary mode needs n_classes divisible by depth_classes with >= 2 shapes")
        cfg.synthetic = spec

    if "experiments" in top:
        exps = top["experiments"]
        if isinstance(exps, str):
            exps = [exps]
        if not isinstance(exps, list) or not exps:
            raise r.fail(("experiments",), "expected a non-empty list of selectors")
        for i, e in enumerate(exps):
            if e != ALL and e not in SELECTORS:
                raise r.fail(("experiments", i), f"invalid selector {e!r}; choose from "
                                                 f"{', '.join(list(SELECTORS) + [ALL])}")
        cfg.experiments = tuple(exps)

    if "corruption" in top:
        c = top["corruption"]
        if c is None or c == "none":
            cfg.corruption = None
        elif c in MODALITIES:
            cfg.corruption = c
        else:
            raise r.fail(("corruption",), f"expected none or one of {', '.join(MODALITIES)}, got {c!r}")

    if "output_dir" in top:
        cfg.output_dir = r.string(top["output_dir"], ("output_dir",))
    if "heatmap_zoom" in top:
        cfg.heatmap_zoom = r.integer(top["heatmap_zoom"], ("heatmap_zoom",), 1)

    train = r.mapping(top.get("train"), ("train",), {"cnn", "mlp", "fusion"})
    s = cfg.settings
    cnn = _parse_train(r, train.get("cnn"), ("train", "cnn"), s.cnn)
    mlp = _parse_train(r, train.get("mlp"), ("train", "mlp"), s.mlp)
    fusion = _parse_train(r, train.get("fusion"), ("train", "fusion"), s.fusion)
    arch = _parse_arch(r, top.get("arch"))
    cfg.settings = ExperimentSettings(seed=cfg.seed, arch=arch, cnn=cnn, mlp=mlp, fusion=fusion)
    return cfg


def loads_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        node = yaml.compose(text)
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: not valid YAML: {getattr(exc, 'problem', exc)}") from None
    return parse_config(tree, node, source)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from None
    return loads_config(text, str(path))
