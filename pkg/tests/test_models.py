import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from multisense.data import CAMERAS, generate_synthetic, prepare_split
from multisense.errors import ArgumentError, DimensionError
from multisense.graph import Graph
from multisense.layers import Dense
from multisense.models import (
    ArchConfig,
    ExperimentSettings,
    build_cnn_stream,
    build_depth_mlp,
    build_intermediate_fusion,
    decision_fusion,
    predict_proba,
    rebuild,
    run_decision_fusion_experiment,
    run_intermediate_fusion_experiment,
    run_unimodal,
)
from multisense.optim import TrainConfig

TINY = dict(image_size=8, filters=(3, 4, 4))


def _conv_params(c_in, c_out):
    return c_out * c_in * 9 + c_out


def _dense_params(d_in, d_out):
    return d_in * d_out + d_out


def test_cnn_stream_outputs_distribution(rng):
    g = build_cnn_stream(10, seed=0)
    p = predict_proba(g, {"cam_left": rng.uniform(0, 1, (1, 32, 32))})
    assert p.shape == (1, 10)
    assert abs(p.sum() - 1.0) < 1e-12


def test_cnn_stream_shapes():
    g = build_cnn_stream(7, seed=0)
    assert g.nodes["cam_left/flatten"].shape == (1024,)
    assert g.nodes["cam_left/rep"].shape == (128,)
    assert g.output_shape == (7,)


def test_depth_mlp_zero_input():
    g = build_depth_mlp(5, seed=1)
    p = predict_proba(g, {"depth": np.zeros(1024)})
    assert p.shape == (1, 5) and abs(p.sum() - 1.0) < 1e-12
    hidden = [n for n in g.nodes.values() if n.kind == "dense" and n.shape == (256,)]
    assert len(hidden) == 3


def test_fusion_parameter_count_closed_form():
    n = 10
    cnn_trunk = (_conv_params(1, 32) + _conv_params(32, 64) + _conv_params(64, 64)
                 + _dense_params(4 * 4 * 64, 128))
    mlp_trunk = _dense_params(1024, 256) + 2 * _dense_params(256, 256)
    head = _dense_params(3 * 128 + 256, 128) + _dense_params(128, n)
    g = build_intermediate_fusion(n, seed=0)
    assert g.n_params() == 3 * cnn_trunk + mlp_trunk + head
    assert g.nodes["shared"].shape == (384,)
    assert g.nodes["joint"].shape == (640,)


def test_too_few_classes():
    for build in (build_cnn_stream, build_depth_mlp, build_intermediate_fusion):
        with pytest.raises(ArgumentError):
            build(1, seed=0)


def test_predict_proba_decision_vector_length_and_determinism(rng):
    g = build_cnn_stream(100, seed=3)
    x = {"cam_left": rng.uniform(0, 1, (4, 1, 32, 32))}
    a, b = predict_proba(g, x), predict_proba(g, x)
    assert a.shape == (4, 100)
    assert np.array_equal(a, b)
    np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-12)


def test_predict_proba_shape_mismatch():
    with pytest.raises(DimensionError):
        predict_proba(build_cnn_stream(3, seed=0), {"cam_left": np.zeros((2, 1, 16, 16))})


def test_predict_proba_batches_consistently(rng):
    g = build_depth_mlp(4, seed=0)
    x = {"depth": rng.uniform(0, 1, (7, 1024))}
    np.testing.assert_allclose(predict_proba(g, x, batch_size=3), predict_proba(g, x), atol=1e-15)


def test_decision_fusion_hand_sum():
    fused, k = decision_fusion([[0.6, 0.4]] * 3 + [[0.1, 0.9]])
    np.testing.assert_allclose(fused, [1.9, 2.1], atol=1e-12)
    assert k == 1


def test_decision_fusion_consensus_and_tie():
    v = [0.2, 0.5, 0.3]
    assert decision_fusion([v] * 4)[1] == 1
    assert decision_fusion([[0.5, 0.5]] * 4)[1] == 0


def test_decision_fusion_length_mismatch():
    with pytest.raises(DimensionError):
        decision_fusion([[0.5, 0.5], [0.2, 0.3, 0.5]])
    with pytest.raises(ArgumentError):
        decision_fusion([])


@given(st.integers(0, 2**31 - 1), st.floats(0.01, 100.0))
def test_decision_fusion_scale_invariant(seed, c):
    r = np.random.default_rng(seed)
    probas = r.dirichlet(np.ones(6), size=(4, 5))
    _, labels = decision_fusion(list(probas))
    fused, _ = decision_fusion(list(probas))
    assert np.array_equal(decision_fusion(list(c * probas))[1], labels)
    assert np.array_equal(np.argmax(fused / 4, axis=1), labels)


def test_fusion_gradients_reach_every_trunk(rng):
    g = build_intermediate_fusion(4, seed=0, depth_dim=64, mlp_hidden=(8, 8, 8), cnn_hidden=8,
                                  fusion_hidden=8, **TINY)
    inputs = {c: rng.uniform(0, 1, (3, 1, 8, 8)) for c in CAMERAS}
    inputs["depth"] = rng.uniform(0, 1, (3, 64))
    from multisense.layers import softmax_cross_entropy, softmax_cross_entropy_grad

    _, p = softmax_cross_entropy(g.forward(inputs), [0, 1, 3])
    grads = g.backward(softmax_cross_entropy_grad(p, [0, 1, 3]))
    for trunk in (*CAMERAS, "depth", "fusion"):
        assert any(np.abs(gr).max() > 0 for nid, d in grads.items() if nid.startswith(trunk) for gr in d.values())


def test_shared_seed_trunks_agree_on_identical_inputs(rng):
    x = rng.uniform(0, 1, (2, 1, 8, 8))
    inputs = {c: x for c in CAMERAS}
    inputs["depth"] = rng.uniform(0, 1, (2, 64))
    kw = dict(depth_dim=64, mlp_hidden=(8, 8, 8), cnn_hidden=8, fusion_hidden=8, **TINY)
    same = build_intermediate_fusion(3, seed=0, trunk_seeds=[5, 5, 5, 6], **kw)
    reps = [same.subgraph(f"{c}/rep").forward(inputs) for c in CAMERAS]
    assert np.array_equal(reps[0], reps[1]) and np.array_equal(reps[1], reps[2])
    diff = build_intermediate_fusion(3, seed=0, **kw)
    reps = [diff.subgraph(f"{c}/rep").forward(inputs) for c in CAMERAS]
    assert not np.array_equal(reps[0], reps[1])


def test_trunk_matches_standalone_stream(rng):
    kw = dict(depth_dim=64, mlp_hidden=(8, 8, 8), cnn_hidden=8, fusion_hidden=8, **TINY)
    fusion = build_intermediate_fusion(3, seed=0, trunk_seeds=[1, 2, 3, 4], **kw)
    stream = build_cnn_stream(3, seed=2, entry="cam_right", hidden=8, **TINY)
    x = {"cam_right": rng.uniform(0, 1, (2, 1, 8, 8))}
    assert np.array_equal(fusion.subgraph("cam_right/rep").forward(x), stream.subgraph("cam_right/rep").forward(x))


def test_truncate_and_reattach_head_reproduces_predictions(rng):
    stream = build_cnn_stream(5, seed=0, **TINY, hidden=16)
    x = {"cam_left": rng.uniform(0, 1, (3, 1, 8, 8))}
    rep = stream.subgraph("cam_left/rep").forward(x)
    head = stream.nodes["cam_left/logits"].layer
    g = Graph()
    g.set_output(g.add(head, g.input("rep", (16,))))
    assert np.array_equal(g.forward({"rep": rep}), stream.forward(x))


def test_rebuild_from_meta():
    g = build_depth_mlp(3, seed=9, depth_dim=16, hidden=(4, 4, 4))
    h = rebuild(g.meta)
    assert h.fingerprint() == g.fingerprint()
    assert all(np.array_equal(a, b) for (_, _, a, _), (_, _, b, _) in zip(g.parameters(), h.parameters()))
    with pytest.raises(ArgumentError):
        rebuild({"builder": "resnet", "kwargs": {}})


# -- small end-to-end experiments -------------------------------------------------

@pytest.fixture(scope="module")
def tiny_split():
    return prepare_split(generate_synthetic(4, 12, seed=0, complementary=True), seed=0, size=8)


def _settings(epochs=3):
    arch = ArchConfig(image_size=8, depth_dim=64, filters=(4, 4, 4), cnn_hidden=8, mlp_hidden=(16, 16, 16),
                      fusion_hidden=8)
    cfg = TrainConfig(max_epochs=epochs, batch_size=8)
    return ExperimentSettings(seed=0, arch=arch, cnn=cfg, mlp=cfg, fusion=cfg)


def test_decision_fusion_experiment_report(tiny_split):
    run = run_decision_fusion_experiment(tiny_split, _settings(), n_classes=4)
    assert run.report.n_classes == 4
    assert run.report.confusion.total == len(tiny_split.test)
    assert set(run.unimodal) == {"cam_left", "cam_right", "cam_rs", "depth"}
    assert run.fused_proba.shape == (len(tiny_split.test), 4)


def test_decision_fusion_reuses_trained_models(tiny_split):
    s = _settings()
    left = run_unimodal(tiny_split, "cam_left", s, 4)
    run = run_decision_fusion_experiment(tiny_split, s, 4, trained={"cam_left": left})
    assert run.unimodal["cam_left"] is left


def test_ensemble_of_identical_data_is_no_worse_than_mean():
    # four depth models on the same (non-complementary) data, differing only in init
    split = prepare_split(generate_synthetic(4, 16, seed=2), seed=2, size=8)
    probas, accs = [], []
    for k in range(4):
        s = _settings(epochs=15)
        s.seed = 100 + k
        run = run_unimodal(split, "depth", s, 4)
        probas.append(run.test_proba)
        accs.append(run.report.accuracy)
    _, fused = decision_fusion(probas)
    assert np.mean(fused == split.test.labels) >= np.mean(accs)


def test_intermediate_fusion_is_deterministic(tiny_split):
    a = run_intermediate_fusion_experiment(tiny_split, _settings(2), 4)
    b = run_intermediate_fusion_experiment(tiny_split, _settings(2), 4)
    assert a.result.history == b.result.history
    assert np.array_equal(a.test_proba, b.test_proba)
