"""Run configuration: a plain ``key = value`` file covering model, training and data."""

from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

from ..data import CLASS_SETS, SyntheticSpec, class_names_for
from ..flow import FlowParams
from ..models import AggregationMode, FusionMode, MooseConfig
from ..models.encoder import FLOW_INPUTS
from ..training import TrainConfig

CONFIG_NAME = "moose.cfg"

Value = Union[int, float, bool, str]


class ConfigError(ValueError):
    """Exception raised for unreadable or invalid configuration, with the offending line."""

    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _choice(*choices: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {text!r}")
        return text

    return parse


_FUSIONS = tuple(mode.value for mode in FusionMode)
_AGGREGATIONS = tuple(mode.value for mode in AggregationMode)

# key -> (parser, default)
KEYS: Dict[str, Tuple[Callable[[str], Any], Value]] = {
    "frames": (int, 8),
    "channels": (int, 1),
    "width": (int, 32),
    "height": (int, 32),
    "patch": (int, 8),
    "spatial_dim": (int, 64),
    "spatial_layers": (int, 2),
    "spatial_heads": (int, 4),
    "temporal_dim": (int, 32),
    "temporal_layers": (int, 2),
    "temporal_heads": (int, 2),
    "fusion": (_choice(*_FUSIONS), FusionMode.BIDIRECTIONAL.value),
    "aggregation": (_choice(*_AGGREGATIONS), AggregationMode.CAUSAL.value),
    "aggregation_heads": (int, 4),
    "classes": (_choice(*CLASS_SETS), "directions"),
    "arrow_mask": (_parse_bool, True),
    "flow_input": (_choice(*FLOW_INPUTS), "estimated"),
    "flow_alpha": (float, 1.0),
    "flow_iterations": (int, 100),
    "lr_max": (float, 0.005),
    "lr_min": (float, 0.0),
    "epochs": (int, 100),
    "momentum": (float, 0.9),
    "weight_decay": (float, 1e-4),
    "batch_size": (int, 8),
    "patience": (int, 10),
    "augment_flip": (_parse_bool, False),
    "clips_per_class": (int, 100),
    "blob_size": (int, 12),
    "speed": (float, 1.0),
    "noise_sigma": (float, 0.02),
    "texture_sigma": (float, 3.0),
    "seed": (int, 0),
    "data_dir": (str, "data"),
    "out_dir": (str, "runs"),
}

DEFAULTS: Dict[str, Value] = {key: default for key, (_, default) in KEYS.items()}


class RunConfig:
    """Configuration container for one MOOSE run."""

    def __init__(self, values: Optional[Dict[str, Value]] = None) -> None:
        unknown = set(values or {}) - set(KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        self._config: Dict[str, Value] = {**DEFAULTS, **(values or {})}

    def __getitem__(self, key: str) -> Value:
        return self._config[key]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RunConfig) and self._config == other._config

    def __repr__(self) -> str:
        return f"RunConfig({self._config!r})"

    @property
    def fusion(self) -> FusionMode:
        return FusionMode.parse(str(self._config["fusion"]))

    @property
    def aggregation(self) -> AggregationMode:
        return AggregationMode.parse(str(self._config["aggregation"]))

    @property
    def class_names(self) -> Tuple[str, ...]:
        """Class names of the configured class set, in label order."""
        return tuple(class_names_for(str(self._config["classes"])))

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def clips_per_class(self) -> int:
        return int(self._config["clips_per_class"])

    @property
    def seed(self) -> int:
        return int(self._config["seed"])

    @property
    def data_dir(self) -> Path:
        return Path(str(self._config["data_dir"]))

    @property
    def out_dir(self) -> Path:
        return Path(str(self._config["out_dir"]))

    def flow_params(self) -> FlowParams:
        return FlowParams(
            alpha=float(self._config["flow_alpha"]),
            iterations=int(self._config["flow_iterations"]),
        )

    def moose_config(self) -> MooseConfig:
        """Model architecture built from the config; errors surface as ConfigError."""
        c = self._config
        try:
            return MooseConfig(
                frames=int(c["frames"]),
                channels=int(c["channels"]),
                width=int(c["width"]),
                height=int(c["height"]),
                patch=int(c["patch"]),
                spatial_dim=int(c["spatial_dim"]),
                spatial_layers=int(c["spatial_layers"]),
                spatial_heads=int(c["spatial_heads"]),
                temporal_dim=int(c["temporal_dim"]),
                temporal_layers=int(c["temporal_layers"]),
                temporal_heads=int(c["temporal_heads"]),
                fusion=self.fusion,
                aggregation=self.aggregation,
                aggregation_heads=int(c["aggregation_heads"]),
                num_classes=self.num_classes,
                arrow_mask=bool(c["arrow_mask"]),
                flow_input=str(c["flow_input"]),
                flow=self.flow_params(),
                seed=self.seed,
            )
        except ValueError as e:
            raise ConfigError(f"invalid model settings: {e}") from e

    def train_config(self) -> TrainConfig:
        c = self._config
        try:
            return TrainConfig(
                lr_max=float(c["lr_max"]),
                lr_min=float(c["lr_min"]),
                epochs=int(c["epochs"]),
                momentum=float(c["momentum"]),
                weight_decay=float(c["weight_decay"]),
                batch_size=int(c["batch_size"]),
                patience=int(c["patience"]),
                augment_flip=bool(c["augment_flip"]),
                seed=self.seed,
            )
        except ValueError as e:
            raise ConfigError(f"invalid training settings: {e}") from e

    def synthetic_spec(self) -> SyntheticSpec:
        c = self._config
        try:
            return SyntheticSpec(
                classes=self.class_names,
                frames=int(c["frames"]),
                channels=int(c["channels"]),
                width=int(c["width"]),
                height=int(c["height"]),
                blob_size=int(c["blob_size"]),
                speed=float(c["speed"]),
                noise_sigma=float(c["noise_sigma"]),
                texture_sigma=float(c["texture_sigma"]),
            )
        except ValueError as e:
            raise ConfigError(f"invalid dataset settings: {e}") from e

    def to_dict(self) -> Dict[str, Value]:
        return dict(self._config)

    def with_overrides(self, **overrides: Optional[Value]) -> "RunConfig":
        """Copy with command-line overrides applied; ``None`` leaves a key unchanged."""
        values = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            parser, _ = KEYS[key]
            try:
                values[key] = parser(str(value)) if isinstance(value, str) else value
            except ValueError as e:
                raise ConfigError(f"{key}: {e}") from e
        return RunConfig(values)


def parse_config_text(text: str) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment and later keys win."""
    values: Dict[str, Value] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line_number)
        key, _, value = (part.strip() for part in line.partition("="))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line_number)
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}", line_number)
        parser, _ = KEYS[key]
        try:
            values[key] = parser(value)
        except ValueError as e:
            raise ConfigError(f"bad value for {key}: {e}", line_number) from e
    return RunConfig(values)


def parse_config(path: Path) -> RunConfig:
    """
    Parse a config file.

    Args:
        path: Path to a ``key = value`` file

    Returns:
        RunConfig with defaults for absent keys

    Raises:
        ConfigError: Unreadable file, unknown key, malformed line or bad value
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config_text(text)


def load_config(config_path: Optional[Path] = None) -> RunConfig:
    """
    Load configuration from file or fall back to defaults.

    Args:
        config_path: Path to configuration file (optional)

    Returns:
        RunConfig from the given file, the first default location found, or defaults

    Raises:
        FileNotFoundError: If specified config file doesn't exist
        ConfigError: If the config file is invalid
    """
    if config_path:
        if not Path(config_path).exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")
        return parse_config(Path(config_path))

    default_paths = [
        Path.cwd() / CONFIG_NAME,
        Path.home() / ".config" / "moose" / CONFIG_NAME,
    ]
    for path in default_paths:
        if path.exists():
            return parse_config(path)

    return RunConfig()
