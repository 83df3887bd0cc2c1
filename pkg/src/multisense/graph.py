"""Directed acyclic graphs of layers with reverse-mode gradients.

A graph is built incrementally: named entry points first, then layers
connected to already-existing nodes, so insertion order is a topological
order. Layer objects own their parameters; adding the same layer object
twice (or to two graphs) shares its weights.

>>> g = Graph()
>>> x = g.input("x", (3,))
>>> y = g.add(Dense(3, 2), x, name="fc")
>>> g.set_output(y)
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ArgumentError, DimensionError, StateError
from .layers import Dense, Layer  # noqa: F401  (Dense used in the doctest)
from .tensor import DTYPE


@dataclass
class Node:
    id: str
    layer: Layer | None
    inputs: tuple[str, ...]
    shape: tuple[int, ...]
    entry: str | None = None

    @property
    def kind(self) -> str:
        return "input" if self.layer is None else self.layer.kind


@dataclass
class Graph:
    nodes: dict[str, Node] = field(default_factory=dict)
    entry_points: dict[str, str] = field(default_factory=dict)
    output: str | None = None
    # how to rebuild this graph from scratch (builder name + kwargs); used by checkpoints
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._cache: dict[str, object] | None = None
        self._batch = 0
        self.input_grads: dict[str, np.ndarray] = {}

    # -- building -------------------------------------------------------

    def input(self, name: str, shape, node_id: str | None = None) -> str:
        node_id = node_id or name
        if name in self.entry_points:
            raise ArgumentError(f"duplicate entry point {name!r}")
        self._new_node(Node(node_id, None, (), tuple(int(s) for s in shape), entry=name))
        self.entry_points[name] = node_id
        return node_id

    def add(self, layer: Layer, *inputs: str, name: str | None = None) -> str:
        node_id = name or f"{layer.kind}{len(self.nodes)}"
        missing = [i for i in inputs if i not in self.nodes]
        if missing:
            raise ArgumentError(f"node {node_id!r} references undefined nodes {missing}")
        if not inputs or (layer.n_inputs is not None and len(inputs) != layer.n_inputs):
            raise ArgumentError(f"node {node_id!r}: wrong number of inputs ({len(inputs)}) for {layer.kind}")
        try:
            shape = layer.out_shape(*(self.nodes[i].shape for i in inputs))
        except DimensionError as exc:
            raise DimensionError(f"node {node_id!r}: {exc}") from None
        self._new_node(Node(node_id, layer, tuple(inputs), tuple(shape)))
        return node_id

    def set_output(self, node_id: str) -> None:
        if node_id not in self.nodes:
            raise ArgumentError(f"unknown node {node_id!r}")
        self.output = node_id
        dangling = [n for n in self.nodes if n not in self._ancestors(node_id)]
        if dangling:
            raise ArgumentError(f"nodes {dangling} do not feed the output {node_id!r}")

    def _new_node(self, node: Node) -> None:
        if node.id in self.nodes:
            raise ArgumentError(f"duplicate node id {node.id!r}")
        self.nodes[node.id] = node
        self._cache = None

    def _ancestors(self, node_id: str) -> set[str]:
        seen, stack = set(), [node_id]
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self.nodes[n].inputs)
        return seen

    def subgraph(self, node_id: str) -> "Graph":
        """The part of the graph needed to compute ``node_id``, sharing layers with ``self``."""
        keep = self._ancestors(node_id)
        sub = Graph()
        for n in self.nodes.values():
            if n.id in keep:
                sub.nodes[n.id] = n
                if n.entry is not None:
                    sub.entry_points[n.entry] = n.id
        sub.set_output(node_id)
        sub.meta = {"subgraph_of": dict(self.meta), "node": node_id}
        return sub

    @property
    def output_shape(self) -> tuple[int, ...]:
        return self.nodes[self._require_output()].shape

    def _require_output(self) -> str:
        if self.output is None:
            raise StateError("graph has no output node; call set_output first")
        return self.output

    # -- evaluation -----------------------------------------------------

    def forward(self, inputs: Mapping[str, np.ndarray], keep_cache: bool = True) -> np.ndarray:
        """Evaluate the graph on a batch.

        Each entry tensor is (N, *declared_shape); a tensor of exactly the
        declared shape is treated as a batch of one. Extra keys are ignored.
        """
        out_id = self._require_output()
        values: dict[str, np.ndarray] = {}
        cache: dict[str, object] = {}
        batch = None
        for node in self.nodes.values():
            if node.layer is None:
                if node.entry not in inputs:
                    raise ArgumentError(f"missing input for entry point {node.entry!r}")
                x = np.asarray(inputs[node.entry], dtype=DTYPE)
                if x.shape == node.shape:
                    x = x[None]
                if x.shape[1:] != node.shape:
                    raise DimensionError(
                        f"entry {node.entry!r} expects (N, {', '.join(map(str, node.shape))}), got {x.shape}")
                if batch is None:
                    batch = x.shape[0]
                elif x.shape[0] != batch:
                    raise DimensionError(f"entry {node.entry!r} has batch {x.shape[0]}, expected {batch}")
                values[node.id] = x
                continue
            try:
                y, c = node.layer.forward(*(values[i] for i in node.inputs))
            except DimensionError as exc:
                raise DimensionError(f"node {node.id!r}: {exc}") from None
            values[node.id] = y
            cache[node.id] = c
        self._cache = cache if keep_cache else None
        self._batch = batch or 0
        return values[out_id]

    def backward(self, loss_grad: np.ndarray, input_grads: bool = True) -> dict[str, dict[str, np.ndarray]]:
        """Propagate ``dLoss/dOutput`` back through the cached forward pass.

        Returns ``{node_id: {param_name: gradient}}`` for parameterised nodes;
        gradients wrt entry tensors are left in ``self.input_grads`` unless
        ``input_grads`` is False. The activation cache is consumed.
        """
        out_id = self._require_output()
        if self._cache is None:
            raise StateError("backward called without a preceding forward")
        cache, self._cache = self._cache, None
        loss_grad = np.asarray(loss_grad, dtype=DTYPE)
        expected = (self._batch, *self.nodes[out_id].shape)
        if loss_grad.shape == self.nodes[out_id].shape and self._batch == 1:
            loss_grad = loss_grad[None]
        if loss_grad.shape != expected:
            raise DimensionError(f"loss gradient shape {loss_grad.shape} != output shape {expected}")

        for layer in self._unique_layers():
            layer.zero_grad()
        self.input_grads = {}
        grads: dict[str, np.ndarray] = {out_id: loss_grad}
        for node in reversed(list(self.nodes.values())):
            g = grads.pop(node.id, None)
            if node.layer is None:
                if g is not None:
                    self.input_grads[node.entry] = g
                continue
            if g is None:
                continue
            node.layer.skip_input_grad = not input_grads and all(
                self.nodes[i].layer is None for i in node.inputs)
            try:
                in_grads = node.layer.backward(g, cache[node.id])
            finally:
                node.layer.skip_input_grad = False
            for src, gi in zip(node.inputs, in_grads):
                if gi is None:
                    continue
                # fan-out: contributions from every consumer are summed
                if src in grads:
                    grads[src] = grads[src] + gi
                else:
                    grads[src] = gi
        return {n.id: dict(n.layer.grads) for n in self.nodes.values() if n.layer is not None and n.layer.params}

    def _unique_layers(self) -> list[Layer]:
        seen: dict[int, Layer] = {}
        for n in self.nodes.values():
            if n.layer is not None:
                seen.setdefault(id(n.layer), n.layer)
        return list(seen.values())

    def parameters(self) -> list[tuple[str, str, np.ndarray, np.ndarray]]:
        """(node_id, param_name, value, gradient) in topological, then declaration, order.

        A layer shared by several nodes is listed once, under its first node.
        Gradients are zeros until the first backward.
        """
        out, seen = [], set()
        for n in self.nodes.values():
            if n.layer is None or id(n.layer) in seen:
                continue
            seen.add(id(n.layer))
            for name, p in n.layer.params.items():
                g = n.layer.grads.get(name)
                if g is None:
                    g = n.layer.grads[name] = np.zeros_like(p)
                out.append((n.id, name, p, g))
        return out

    def n_params(self) -> int:
        return sum(p.size for _, _, p, _ in self.parameters())

    def fingerprint(self) -> str:
        """Hash of node kinds, wiring and parameter shapes (not values)."""
        h = hashlib.sha256()
        for n in self.nodes.values():
            desc = "input" if n.layer is None else n.layer.describe()
            h.update(f"{n.id}|{desc}|{','.join(n.inputs)}|{list(n.shape)}|{n.entry}\n".encode())
        h.update(f"output={self.output}".encode())
        return h.hexdigest()
