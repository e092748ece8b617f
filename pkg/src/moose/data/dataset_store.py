"""On-disk dataset layout: ``<root>/<split>/<class>/<id>.mtsr`` plus manifests."""

import csv
import logging
from collections import Counter
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .clip import VideoClip
from .synthetic import SPLITS, DatasetError, SyntheticDataset, SyntheticSpec, generate
from .tensor_file import SUFFIX, read_tensor, write_tensor

MANIFEST_NAME = "manifest.csv"
SPEC_NAME = "dataset.yml"
MANIFEST_FIELDS = ("id", "class", "split", "seed")


class DatasetStore:
    """Reads and writes a generated dataset under one root directory."""

    def __init__(self, root: Path, logger: Optional[logging.Logger] = None) -> None:
        self.root = Path(root)
        self.logger = logger or logging.getLogger(__name__)

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    @property
    def spec_path(self) -> Path:
        return self.root / SPEC_NAME

    def clip_path(self, split: str, class_name: str, clip_id: str) -> Path:
        return self.root / split / class_name / f"{clip_id}{SUFFIX}"

    def save(self, dataset: SyntheticDataset) -> Path:
        """Write every clip, the manifest and the generator settings."""
        self.root.mkdir(parents=True, exist_ok=True)
        rows: List[Dict[str, Any]] = []
        for split in SPLITS:
            for clip in dataset.splits.get(split, []):
                write_tensor(self.clip_path(split, clip.class_name, clip.clip_id), clip.frames)
                rows.append(
                    {
                        "id": clip.clip_id,
                        "class": clip.class_name,
                        "split": split,
                        "seed": clip.seed,
                    }
                )

        with open(self.manifest_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=MANIFEST_FIELDS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)

        spec = dataset.spec
        with open(self.spec_path, "w", encoding="utf-8") as f:
            yaml.safe_dump(
                {
                    "seed": dataset.seed,
                    "classes": list(spec.classes),
                    "frames": spec.frames,
                    "channels": spec.channels,
                    "width": spec.width,
                    "height": spec.height,
                    "blob_size": spec.blob_size,
                    "speed": spec.speed,
                    "noise_sigma": spec.noise_sigma,
                    "texture_sigma": spec.texture_sigma,
                    "background": spec.background,
                },
                f,
                sort_keys=False,
            )
        self.logger.info(f"Wrote {len(rows)} clips to {self.root}")
        return self.root

    def load(self) -> SyntheticDataset:
        """Read a dataset written by :meth:`save`."""
        if not self.manifest_path.exists() or not self.spec_path.exists():
            raise DatasetError(f"No dataset found at {self.root} (missing {MANIFEST_NAME})")

        with open(self.spec_path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
        seed = int(raw.pop("seed", 0))
        raw["classes"] = tuple(raw.get("classes", ()))
        try:
            spec = SyntheticSpec(**raw)
        except (TypeError, ValueError) as e:
            raise DatasetError(f"Invalid {SPEC_NAME} in {self.root}: {e}") from e

        splits: Dict[str, List[VideoClip]] = {name: [] for name in SPLITS}
        with open(self.manifest_path, "r", encoding="utf-8", newline="") as f:
            for row in csv.DictReader(f):
                split, class_name = row["split"], row["class"]
                if split not in splits:
                    raise DatasetError(f"Manifest lists unknown split {split!r}")
                if class_name not in spec.classes:
                    raise DatasetError(f"Manifest lists unknown class {class_name!r}")
                frames = read_tensor(self.clip_path(split, class_name, row["id"]))
                splits[split].append(
                    VideoClip(
                        frames=frames,
                        label=spec.label_of(class_name),
                        clip_id=row["id"],
                        class_name=class_name,
                        seed=int(row["seed"]),
                    )
                )

        self.logger.debug(
            "Loaded dataset: " + ", ".join(f"{k}={len(v)}" for k, v in splits.items())
        )
        return SyntheticDataset(spec=spec, splits=splits, seed=seed)


def stored_mismatches(
    dataset: SyntheticDataset, spec: SyntheticSpec, count_per_class: int, seed: int
) -> List[str]:
    """Settings that differ between a stored dataset and the requested one, as ``key: a != b``."""
    stored: Dict[str, Any] = asdict(dataset.spec)
    wanted: Dict[str, Any] = asdict(spec)
    counts = Counter(clip.class_name for clip in dataset.all_clips())
    stored["clips_per_class"] = max(counts.values(), default=0)
    wanted["clips_per_class"] = count_per_class
    stored["seed"], wanted["seed"] = dataset.seed, seed
    return [
        f"{key}: {stored[key]!r} != {wanted[key]!r}"
        for key in wanted
        if stored[key] != wanted[key]
    ]


def load_or_generate(
    root: Path,
    spec: SyntheticSpec,
    count_per_class: int,
    seed: int,
    logger: Optional[logging.Logger] = None,
) -> SyntheticDataset:
    """
    Load the dataset stored under ``root``, or generate it in memory when absent.

    Raises:
        DatasetError: The stored dataset was generated with other settings
    """
    log = logger or logging.getLogger(__name__)
    store = DatasetStore(root, log)
    if not store.manifest_path.exists():
        log.info(f"No dataset at {root}; generating {count_per_class} clips per class in memory")
        return generate(spec, count_per_class, seed, log)

    dataset = store.load()
    mismatches = stored_mismatches(dataset, spec, count_per_class, seed)
    if mismatches:
        raise DatasetError(
            f"Dataset at {root} was generated with different settings ({'; '.join(mismatches)}); "
            "regenerate it with `moose generate` or point data_dir elsewhere"
        )
    return dataset
