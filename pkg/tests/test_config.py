"""Tests for the key = value run configuration."""

from pathlib import Path

import pytest

from moose.data import DIRECTION_CLASSES, REVERSAL_CLASSES
from moose.models import AggregationMode, FusionMode
from moose.utils.config import (
    DEFAULTS,
    ConfigError,
    RunConfig,
    load_config,
    parse_config,
    parse_config_text,
)


class TestParse:
    def test_empty_text_gives_defaults(self):
        assert parse_config_text("") == RunConfig()
        assert parse_config_text("# only a comment\n\n").to_dict() == DEFAULTS

    def test_values_are_typed(self):
        config = parse_config_text(
            "frames = 4\nlr_max = 0.01  # peak\naugment_flip = yes\nfusion = flow_prior\n"
        )
        assert config["frames"] == 4
        assert config["lr_max"] == 0.01
        assert config["augment_flip"] is True
        assert config.fusion is FusionMode.FLOW_PRIOR
        assert config["width"] == DEFAULTS["width"]

    def test_later_keys_win(self):
        assert parse_config_text("seed = 1\nseed = 2\n").seed == 2

    def test_bad_value_names_its_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text("frames = eight\n")
        assert info.value.line_number == 1
        assert str(info.value).startswith("line 1: ")

    @pytest.mark.parametrize(
        "text, line",
        [
            ("frames = 4\nbogus = 1\n", 2),
            ("\n\nframes 4\n", 3),
            ("frames =\n", 1),
            ("fusion = sideways\n", 1),
            ("arrow_mask = maybe\n", 1),
        ],
    )
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert info.value.line_number == line

    def test_config_error_is_value_error(self):
        assert issubclass(ConfigError, ValueError)

    def test_unknown_key_in_dict(self):
        with pytest.raises(ConfigError):
            RunConfig({"colour": "red"})


class TestFiles:
    def test_parse_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("classes = reversal\nframes = 6\n")
        config = parse_config(path)
        assert config.class_names == REVERSAL_CLASSES
        assert config["frames"] == 6

    def test_missing_explicit_path(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "absent.cfg")

    def test_default_location(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setattr(Path, "home", lambda: tmp_path / "home")
        assert load_config() == RunConfig()
        (tmp_path / "moose.cfg").write_text("seed = 9\n")
        assert load_config().seed == 9


class TestOverrides:
    def test_none_leaves_values(self):
        config = RunConfig({"fusion": "visual_prior"})
        assert config.with_overrides(fusion=None, aggregation=None) == config

    def test_strings_are_parsed(self):
        config = RunConfig().with_overrides(fusion="flow_prior", aggregation="mean")
        assert config.fusion is FusionMode.FLOW_PRIOR
        assert config.aggregation is AggregationMode.MEAN

    def test_original_untouched(self):
        config = RunConfig()
        config.with_overrides(seed=5)
        assert config.seed == DEFAULTS["seed"]

    def test_bad_overrides(self):
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(fusion="sideways")
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(depth=3)


class TestBuilders:
    def test_defaults_build_every_section(self):
        config = RunConfig()
        model = config.moose_config()
        assert model.num_classes == len(DIRECTION_CLASSES)
        assert model.unit_dim == 96
        assert model.flow.iterations == 100
        train = config.train_config()
        assert train.lr_max == 0.005 and train.patience == 10
        spec = config.synthetic_spec()
        assert spec.classes == DIRECTION_CLASSES
        assert (spec.width, spec.height, spec.frames) == (32, 32, 8)

    def test_model_errors_become_config_errors(self):
        with pytest.raises(ConfigError, match="invalid model settings"):
            RunConfig({"patch": 5}).moose_config()

    def test_training_errors_become_config_errors(self):
        with pytest.raises(ConfigError, match="invalid training settings"):
            RunConfig({"lr_max": 0.0}).train_config()

    def test_paths(self):
        config = RunConfig({"data_dir": "d", "out_dir": "o"})
        assert config.data_dir == Path("d") and config.out_dir == Path("o")
