"""Central finite-difference checks for graph gradients.

The numerical side only ever calls ``Graph.forward``, so it is an oracle that
shares nothing with the analytic backward pass it checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .graph import Graph
from .layers import softmax_cross_entropy, softmax_cross_entropy_grad


@dataclass
class GradCheckResult:
    names: list[str]
    analytic: np.ndarray
    numeric: np.ndarray
    rel_error: np.ndarray  # NaN where the element was skipped as too small

    @property
    def checked(self) -> np.ndarray:
        return ~np.isnan(self.rel_error)

    def fraction_below(self, tol: float) -> float:
        errs = self.rel_error[self.checked]
        return float(np.mean(errs < tol)) if errs.size else 1.0

    @property
    def max_error(self) -> float:
        errs = self.rel_error[self.checked]
        return float(errs.max()) if errs.size else 0.0


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """|a - n| / max(|a|, |n|); NaN where |a| + |n| < floor."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    scale = np.maximum(np.abs(a), np.abs(n))
    with np.errstate(invalid="ignore", divide="ignore"):
        err = np.abs(a - n) / scale
    err[np.abs(a) + np.abs(n) < floor] = np.nan
    return err


def _loss(graph: Graph, inputs, labels) -> float:
    return softmax_cross_entropy(graph.forward(inputs, keep_cache=False), labels)[0]


def check_graph(graph: Graph, inputs: Mapping[str, np.ndarray], labels, h: float = 1e-5,
                wrt_inputs: bool = True) -> GradCheckResult:
    """Compare backward() with central differences of the mean cross-entropy loss.

    Every parameter element is perturbed (and every entry-tensor element when
    ``wrt_inputs``), so keep shapes small.
    """
    inputs = {k: np.array(v, dtype=float) for k, v in inputs.items()}
    logits = graph.forward(inputs)
    _, probs = softmax_cross_entropy(logits, labels)
    graph.backward(softmax_cross_entropy_grad(probs, labels))

    targets = [(f"{nid}.{name}", p, g.copy()) for nid, name, p, g in graph.parameters()]
    if wrt_inputs:
        for entry in graph.entry_points:
            x = inputs[entry]
            g = graph.input_grads[entry].reshape(x.shape)
            targets.append((f"input:{entry}", x, g))

    names, ana, num = [], [], []
    for label, arr, grad in targets:
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = _loss(graph, inputs, labels)
            flat[i] = old - h
            down = _loss(graph, inputs, labels)
            flat[i] = old
            names.append(f"{label}[{i}]")
            ana.append(gflat[i])
            num.append((up - down) / (2 * h))
    ana_arr, num_arr = np.array(ana), np.array(num)
    return GradCheckResult(names, ana_arr, num_arr, relative_error(ana_arr, num_arr))
