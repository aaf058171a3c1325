import numpy as np
import pytest

from rhomboid_pool.clustering import HierarchySchedule, LevelGraph, build_hierarchy
from rhomboid_pool.errors import EmptyDataset
from rhomboid_pool.geometry import PointCloud
from rhomboid_pool.synthetic import blob_dataset
from rhomboid_pool.training import ModelConfig, aggregate, evaluate, repeated_runs, split_indices, train


@pytest.fixture(scope="module")
def samples():
    out = []
    for rec in blob_dataset(12, seed=3):
        g = LevelGraph.from_edges(rec.num_nodes, rec.edges)
        out.append((build_hierarchy(PointCloud(rec.coords), g, HierarchySchedule()), rec.features, rec.label))
    return out


def test_config_defaults_and_validation():
    cfg = ModelConfig()
    assert (cfg.batch_size, cfg.epochs, cfg.learning_rate, cfg.num_pooling_layers, cfg.step) == (16, 500, 1e-3, 2, 1)
    assert (cfg.final_dropout, cfg.weight_decay, cfg.max_order) == (0.5, 1e-4, 3)
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        ModelConfig(final_dropout=1.0)
    with pytest.raises(ValueError):
        ModelConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        ModelConfig(optimizer="rmsprop")


def test_split_indices():
    tr, te = split_indices(60, 0.1, 0)
    assert len(te) == 6 and len(tr) == 54 and not set(tr) & set(te)
    assert np.array_equal(te, split_indices(60, 0.1, 0)[1])
    assert not np.array_equal(te, split_indices(60, 0.1, 1)[1])


def test_aggregate_is_population_std():
    vals = [0.9, 1.0, 0.8, 0.85, 0.95]
    mean, std = aggregate(vals)
    m = sum(vals) / 5
    assert mean == pytest.approx(m)
    assert std == pytest.approx((sum((v - m) ** 2 for v in vals) / 5) ** 0.5)
    with pytest.raises(EmptyDataset):
        aggregate([])


def test_training_is_deterministic_and_learns(samples):
    cfg = ModelConfig(epochs=40, batch_size=4, seed=2)
    p1, h1 = train(samples, cfg)
    p2, h2 = train(samples, cfg)
    assert all(np.array_equal(p1[k], p2[k]) for k in p1)
    assert [m.loss for m in h1] == [m.loss for m in h2]
    assert h1[-1].loss < h1[0].loss


def test_sgd_option_runs(samples):
    _, hist = train(samples, ModelConfig(epochs=2, optimizer="sgd", learning_rate=1e-5))
    assert len(hist) == 2


def test_repeated_runs_summary(samples):
    cfg = ModelConfig(epochs=3, repetitions=3, test_fraction=0.25)
    out = repeated_runs(samples, cfg)
    accs = [r["test_accuracy"] for r in out["runs"]]
    assert [r["seed"] for r in out["runs"]] == [0, 1, 2]
    assert (out["test_mean"], out["test_std"]) == pytest.approx(aggregate(accs))


def test_empty_inputs():
    with pytest.raises(EmptyDataset):
        train([], ModelConfig())
    with pytest.raises(EmptyDataset):
        evaluate([], {})
