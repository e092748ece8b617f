"""End-to-end training runs at desk scale. These take minutes; deselect with -m "not slow"."""

from dataclasses import replace

import pytest

from moose.data import SyntheticDataset, generate
from moose.models import AggregationMode, FusionMode, MooseModel
from moose.training import Trainer, evaluate
from moose.utils.config import RunConfig

pytestmark = pytest.mark.slow


def run(config: RunConfig, **model_overrides):
    """Train on the configured dataset and score the best model on the test split."""
    dataset = generate(config.synthetic_spec(), config.clips_per_class, config.seed)
    model = MooseModel(replace(config.moose_config(), **model_overrides))
    result = Trainer(model, config.train_config()).train(dataset)
    return result, evaluate(model, dataset.split("test"))


class TestTemporalOrder:
    def test_full_model_separates_reversed_sweeps(self):
        config = RunConfig({"classes": "reversal", "clips_per_class": 200, "seed": 1})
        _, test = run(config)
        assert test.top1 >= 0.95

    def test_order_blind_ablation_stays_at_chance(self):
        config = RunConfig({"classes": "reversal", "clips_per_class": 200, "seed": 1})
        _, test = run(config, flow_input="zeroed", aggregation=AggregationMode.MEAN)
        assert abs(test.top1 - 0.5) <= 0.07


@pytest.mark.parametrize("fusion", list(FusionMode))
def test_every_fusion_mode_learns_directions(fusion):
    config = RunConfig({"classes": "directions", "clips_per_class": 100, "seed": 2})
    _, test = run(config, fusion=fusion)
    assert test.top1 >= 0.90


def test_small_set_is_memorized(small_spec):
    full = generate(small_spec, count_per_class=5, seed=3)
    clips = full.split("train")[:10]
    dataset = SyntheticDataset(spec=small_spec, splits={"train": clips, "val": clips}, seed=3)
    config = RunConfig(
        {"frames": 2, "width": 16, "height": 16, "patch": 8, "epochs": 200, "patience": 200}
    )
    model = MooseModel(config.moose_config())
    result = Trainer(model, config.train_config()).train(dataset)
    first, last = result.records[0].train_loss, result.records[-1].train_loss
    assert last <= 0.1 * first
    assert min(r.train_loss for r in result.records) < 0.05
