"""Generate command: render the synthetic dataset to disk."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from ..data import SPLITS, DatasetStore, generate
from ..utils.config import RunConfig
from ..utils.helpers import SimpleTimer, format_error_message


@dataclass
class GenerateResult:
    """Result of generate command execution."""

    success: bool
    root: Optional[Path] = None
    counts: Dict[str, int] = field(default_factory=dict)
    error: Optional[str] = None


class GenerateCommand:
    """Command that writes every split of the synthetic dataset."""

    def __init__(self, config: RunConfig, logger: logging.Logger) -> None:
        self.config = config
        self.logger = logger

    def execute(self, out_dir: Optional[Path] = None) -> GenerateResult:
        """
        Execute generate command.

        Args:
            out_dir: Dataset root (defaults to the configured ``data_dir``)

        Returns:
            GenerateResult with the root directory and clip count per split
        """
        root = Path(out_dir) if out_dir is not None else self.config.data_dir
        try:
            spec = self.config.synthetic_spec()
            self.logger.info(
                f"Generating {self.config.clips_per_class} clips per class for "
                f"{', '.join(spec.classes)}"
            )
            with SimpleTimer("Dataset generation", self.logger):
                dataset = generate(spec, self.config.clips_per_class, self.config.seed, self.logger)
            DatasetStore(root, self.logger).save(dataset)
            counts = {name: len(dataset.splits.get(name, [])) for name in SPLITS}
            return GenerateResult(success=True, root=root, counts=counts)

        except Exception as e:
            self.logger.error(format_error_message(e, "Generate failed"))
            return GenerateResult(success=False, root=root, error=str(e))
