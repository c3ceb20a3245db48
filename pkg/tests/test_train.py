import math

import pytest
from brep2shape.components.solids import generate_solid
from brep2shape.core.api import ArgumentError, ConfigError, IntegrityError, ParseError
from brep2shape.net.config import ModelConfig, OptimizerSettings
from conftest import TORCH_UNAVAILABLE, prepare

pytestmark = pytest.mark.skipif(TORCH_UNAVAILABLE, reason="torch is not installed")

if not TORCH_UNAVAILABLE:
    import torch
    from brep2shape.impl.binary import read_checkpoint, write_checkpoint
    from brep2shape.net.model import batch_tensors, build_model
    from brep2shape.net.train import (
        compute_grad,
        evaluate_loss,
        gradcheck,
        load_checkpoint,
        save_checkpoint,
        toy_config,
        toy_sample,
        train,
        trace_to_csv,
        write_trace,
    )

CAPS = (8, 4)


@pytest.fixture(scope="module")
def hinge():
    return prepare(generate_solid("hinge"), CAPS)


@pytest.fixture(scope="module")
def dataset(hinge):
    return [hinge, prepare(generate_solid("box"), CAPS)]


def test_overfit_one_model(tiny_config, hinge):
    settings = OptimizerSettings(lr=1e-2, weight_decay=0.0, log_every=0)
    result = train([hinge], tiny_config, settings, steps=120, seed=1)
    assert len(result.trace) == 120
    assert result.trace[0].step == 0 and result.trace[-1].step == 119
    assert result.final_loss < 0.5 * result.initial_loss
    assert result.trace[0].total == pytest.approx(result.initial_loss)


def test_train_is_deterministic(tiny_config, dataset):
    settings = OptimizerSettings(lr=1e-3, batch_size=2, shuffle=True)
    a = train(dataset, tiny_config, settings, steps=4, seed=5)
    b = train(dataset, tiny_config, settings, steps=4, seed=5)
    assert [p.total for p in a.trace] == [p.total for p in b.trace]
    assert a.final_loss == b.final_loss


def test_train_batches(tiny_config, dataset):
    settings = OptimizerSettings(lr=1e-3, batch_size=1)
    result = train(dataset, tiny_config, settings, steps=4)
    # single model batches alternate between the hinge and the box
    totals = [p.total for p in result.trace]
    assert totals[0] != totals[1]
    expected = evaluate_loss(build_model(tiny_config), dataset)
    assert result.initial_loss == pytest.approx(expected)


def test_train_without_edge_supervision(tiny_config, hinge):
    tiny_config.edge_supervision = False
    result = train([hinge], tiny_config, OptimizerSettings(lr=1e-3), steps=3)
    assert all(p.edge == 0.0 and p.total == p.face for p in result.trace)


def test_train_continues_a_model(tiny_config, hinge):
    settings = OptimizerSettings(lr=1e-2, weight_decay=0.0)
    first = train([hinge], tiny_config, settings, steps=30)
    second = train([hinge], tiny_config, settings, steps=5, model=first.model)
    assert second.model is first.model
    assert second.initial_loss == pytest.approx(first.final_loss)


def test_zero_learning_rate_keeps_parameters(tiny_config, dataset):
    model = build_model(tiny_config, seed=3)
    before = {k: v.clone() for k, v in model.state_dict().items()}
    settings = OptimizerSettings(lr=0.0, weight_decay=0.0, batch_size=2)
    train(dataset, tiny_config, settings, steps=5, model=model)
    after = model.state_dict()
    assert all(torch.equal(before[k], after[k]) for k in before)


def test_loss_falls_on_generated_solids(tiny_config):
    from brep2shape.components.solids import generate_dataset

    tiny_config.width = 32
    caps = (tiny_config.face_cap, tiny_config.edge_cap)
    samples = [prepare(m, caps) for m in generate_dataset(count=32, seed=0)]
    settings = OptimizerSettings(lr=3e-3, weight_decay=0.0, batch_size=16)
    result = train(samples, tiny_config, settings, steps=200, seed=0)
    assert result.final_loss < result.initial_loss
    assert all(math.isfinite(p.total) for p in result.trace)


@pytest.mark.parametrize(
    "kwargs, error",
    [
        (dict(steps=0), ArgumentError),
        (dict(settings=OptimizerSettings(lr=-1.0)), ConfigError),
        (dict(settings=OptimizerSettings(beta1=1.0)), ConfigError),
        (dict(settings=OptimizerSettings(batch_size=0)), ConfigError),
    ],
)
def test_train_errors(tiny_config, hinge, kwargs, error):
    with pytest.raises(error):
        train([hinge], tiny_config, **kwargs)


def test_train_rejects_empty(tiny_config):
    with pytest.raises(ArgumentError):
        train([], tiny_config)
    tiny_config.dual_layers = 0
    with pytest.raises(ConfigError):
        train([toy_sample(tiny_config)], tiny_config)


def test_train_rejects_mismatched_caps(tiny_config, hinge):
    tiny_config.face_cap = 16
    with pytest.raises(IntegrityError):
        train([hinge], tiny_config, steps=1)


# -----------------------------------------------------------------------------
# Gradients
# -----------------------------------------------------------------------------
def test_compute_grad(tiny_config, hinge):
    model = build_model(tiny_config)
    grads = compute_grad(model, *hinge)
    names = [name for name, _ in model.named_parameters()]
    assert list(grads) == names
    assert all(grads[n].shape == p.shape for n, p in model.named_parameters())
    assert torch.count_nonzero(grads["face_head.weight"]) > 0
    # the pass leaves no gradient behind
    assert all(p.grad is None for p in model.parameters())

    half = compute_grad(model, *hinge, scale=0.5)
    assert torch.allclose(half["face_head.bias"], 0.5 * grads["face_head.bias"])

    double = compute_grad(model, *hinge, scale=2.0)
    for name in grads:
        assert torch.allclose(double[name], 2.0 * grads[name], rtol=1e-12, atol=0.0)


def test_grad_without_edge_supervision(tiny_config, hinge):
    tiny_config.edge_supervision = False
    grads = compute_grad(build_model(tiny_config), *hinge)
    assert torch.count_nonzero(grads["edge_head.weight"]) == 0
    assert torch.count_nonzero(grads["edge_head.bias"]) == 0


def test_gradcheck():
    result = gradcheck(seed=0, samples=30)
    assert len(result.entries) == len(result.errors) == 30
    assert result.passed, result.max_error
    names = {name for name, _ in result.entries}
    assert len(names) > 1


def test_gradcheck_covers_topology_bias():
    config = toy_config()
    model = build_model(config)
    total = sum(p.numel() for p in model.parameters())
    result = gradcheck(seed=2, samples=total, config=config)
    assert any(".bias.proj." in name for name, _ in result.entries)
    assert result.passed, result.max_error


def test_toy_sample():
    config = toy_config()
    batch, targets = toy_sample(config)
    assert (batch.face_cap, batch.edge_cap) == (4, 2)
    assert (targets.n_faces, targets.n_edges) == (2, 7)


# -----------------------------------------------------------------------------
# Persistence
# -----------------------------------------------------------------------------
def test_checkpoint_round_trip(tmp_path, tiny_config, hinge):
    tiny_config.attention_mode = "standard"
    result = train([hinge], tiny_config, OptimizerSettings(lr=1e-3), steps=2, seed=7)
    path = tmp_path / "model.b2c"
    save_checkpoint(result.model, 7, path)
    model, seed = load_checkpoint(path)
    assert seed == 7
    assert model.config.attention_mode == "standard"
    assert model.config.width == tiny_config.width
    tensors = batch_tensors(hinge[0])
    with torch.no_grad():
        a, b = result.model(tensors), model(tensors)
    assert torch.equal(a[0], b[0]) and torch.equal(a[1], b[1])


def test_train_writes_checkpoint(tmp_path, tiny_config, hinge):
    path = tmp_path / "model.b2c"
    settings = OptimizerSettings(lr=1e-3)
    train([hinge], tiny_config, settings, steps=1, seed=3, checkpoint=path)
    assert load_checkpoint(path)[1] == 3


def test_checkpoint_mismatch(tmp_path, tiny_config):
    path = tmp_path / "model.b2c"
    save_checkpoint(build_model(tiny_config), 0, path)
    ckpt = read_checkpoint(path)
    tensors = ckpt.tensors.copy()
    tensors.popitem()
    write_checkpoint(tensors, ckpt.config, ckpt.seed, path)
    with pytest.raises(IntegrityError, match="do not match"):
        load_checkpoint(path)
    write_checkpoint(ckpt.tensors, b"<model-config width='ten'/>", 0, path)
    with pytest.raises(ParseError):
        load_checkpoint(path)


def test_trace_csv(tmp_path, tiny_config, hinge):
    result = train([hinge], tiny_config, OptimizerSettings(lr=1e-3), steps=3)
    lines = trace_to_csv(result.trace).decode().splitlines()
    assert lines[0] == "step,total,face,edge"
    assert len(lines) == 4
    step, total, _, _ = lines[1].split(",")
    assert int(step) == 0 and float(total) == result.trace[0].total
    path = tmp_path / "trace.csv"
    write_trace(result.trace, path)
    assert path.read_text().splitlines() == lines


def test_config_is_unchanged(hinge):
    # training never touches the module level defaults
    assert ModelConfig().width == 128
