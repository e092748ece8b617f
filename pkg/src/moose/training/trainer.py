"""Training loop: seeded minibatch SGD, per-epoch evaluation, early stopping."""

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..core import Tape
from ..data import FLIP_CLASSES, DatasetError, SyntheticDataset, VideoClip
from ..flow import FlowCache
from ..models import MooseModel
from ..utils.helpers import SimpleTimer
from .checkpoint import save_checkpoint
from .metrics import cross_entropy, per_class_accuracy, topk_accuracy
from .optim import SgdState, TrainConfig, cosine_lr, sgd_step

METRIC_FIELDS = ("epoch", "train_loss", "train_top1", "val_top1", "val_top5", "lr")
METRICS_NAME = "metrics.csv"
BEST_DIR = "best"
LAST_DIR = "last"
TOP_K = 5


@dataclass
class MetricRecord:
    """One row of the metric log."""

    epoch: int
    train_loss: float
    train_top1: float
    val_top1: float
    val_top5: float
    lr: float

    def __post_init__(self) -> None:
        for name in ("train_top1", "val_top1", "val_top5"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass
class EvalResult:
    """Loss and accuracy of a model over a list of clips."""

    loss: float
    top1: float
    top5: float
    count: int
    per_class: Dict[str, float] = field(default_factory=dict)


@dataclass
class TrainResult:
    """Outcome of a training run."""

    records: List[MetricRecord]
    best_epoch: int
    best_val_top1: float
    best_val_loss: float
    stopped_early: bool
    checkpoint_dir: Optional[Path] = None
    metrics_path: Optional[Path] = None


def evaluate(
    model: MooseModel,
    clips: Sequence[VideoClip],
    flows: Optional[FlowCache] = None,
    class_names: Sequence[str] = (),
) -> EvalResult:
    """Mean cross-entropy and top-1/top-k accuracy; ``k`` is capped at the class count."""
    if not clips:
        raise DatasetError("cannot evaluate on an empty split")
    cache = flows or FlowCache(model.config.flow)
    logits: List[np.ndarray] = []
    losses: List[float] = []
    for clip in clips:
        flow = None if model.config.flow_input == "zeroed" else cache.get(clip)
        out = model.forward(clip, flow)
        logits.append(out.data)
        losses.append(cross_entropy(out, clip.label).item())
    labels = [clip.label for clip in clips]
    k = min(TOP_K, model.config.num_classes)
    per_class = per_class_accuracy(logits, labels, class_names) if class_names else {}
    return EvalResult(
        loss=float(np.mean(losses)),
        top1=topk_accuracy(logits, labels, 1),
        top5=topk_accuracy(logits, labels, k),
        count=len(clips),
        per_class=per_class,
    )


class Trainer:
    """Fits a :class:`MooseModel` on the train split and keeps the best validation state."""

    def __init__(
        self,
        model: MooseModel,
        config: TrainConfig,
        logger: Optional[logging.Logger] = None,
        out_dir: Optional[Path] = None,
        run_config: Optional[Dict[str, Any]] = None,
    ) -> None:
        self.model = model
        self.config = config
        self.logger = logger or logging.getLogger(__name__)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.run_config = dict(run_config or {})
        self.flows = FlowCache(model.config.flow, self.logger)
        self.rng = np.random.default_rng(config.seed)

    def _flow_for(self, clip: VideoClip, flipped: bool = False) -> Any:
        if self.model.config.flow_input == "zeroed":
            return None
        return self.flows.get(clip, flipped=flipped)

    def _augment(self, clip: VideoClip, class_names: Sequence[str]) -> tuple:
        """Mirror ``clip`` horizontally with probability 1/2, remapping its label."""
        if not self.config.augment_flip or self.rng.random() >= 0.5:
            return clip, self._flow_for(clip)
        target = FLIP_CLASSES.get(clip.class_name)
        if target is None or target not in class_names:
            return clip, self._flow_for(clip)
        mirrored = clip.flipped(label=list(class_names).index(target), class_name=target)
        return mirrored, self._flow_for(clip, flipped=True)

    def _train_epoch(
        self, clips: Sequence[VideoClip], lr: float, state: SgdState, class_names: Sequence[str]
    ) -> tuple:
        params = self.model.parameters()
        decay = self.model.decay_mask()
        order = self.rng.permutation(len(clips))
        batch_size = self.config.batch_size
        losses: List[float] = []
        logits: List[np.ndarray] = []
        labels: List[int] = []

        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            self.model.zero_grad()
            for index in batch:
                clip, flow = self._augment(clips[int(index)], class_names)
                with Tape() as tape:
                    out = self.model.forward(clip, flow)
                    loss = cross_entropy(out, clip.label)
                    scaled = loss * (1.0 / len(batch))
                tape.backward(scaled)
                losses.append(loss.item())
                logits.append(out.data)
                labels.append(clip.label)
            grads = {
                name: (p.grad if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()
            }
            sgd_step(params, grads, state, lr, self.config, decay)

        return float(np.mean(losses)), topk_accuracy(logits, labels, 1)

    def _write_metrics(self, records: List[MetricRecord]) -> Optional[Path]:
        if self.out_dir is None:
            return None
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / METRICS_NAME
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=METRIC_FIELDS, lineterminator="\n")
            writer.writeheader()
            for record in records:
                writer.writerow({k: repr(v) for k, v in asdict(record).items()})
        return path

    def _save(self, name: str, metadata: Dict[str, Any]) -> Optional[Path]:
        if self.out_dir is None:
            return None
        return save_checkpoint(self.out_dir / name, self.model, self.run_config, metadata)

    def train(self, dataset: SyntheticDataset) -> TrainResult:
        """
        Run up to ``epochs`` epochs with early stopping on validation top-1.

        The untrained model's validation score is the epoch-0 baseline; an epoch
        improves when val top-1 rises, or stays equal with a lower val loss.
        Training stops after ``patience`` consecutive epochs without improvement.
        Epoch ``e`` runs at ``cosine_lr(e - 1)``, so the first epoch uses ``lr_max``.

        Returns:
            TrainResult with the metric log; the model holds the best parameters
        """
        train_clips = dataset.split("train")
        val_clips = dataset.split("val")
        if not train_clips:
            raise DatasetError("train split is empty")
        if not val_clips:
            raise DatasetError("val split is empty")
        class_names = list(dataset.spec.classes)
        if len(class_names) != self.model.config.num_classes:
            raise DatasetError(
                f"dataset has {len(class_names)} classes, model expects "
                f"{self.model.config.num_classes}"
            )

        if self.model.config.flow_input != "zeroed":
            self.flows.warm(list(train_clips) + list(val_clips))

        baseline = evaluate(self.model, val_clips, self.flows)
        best_top1, best_loss, best_epoch = baseline.top1, baseline.loss, 0
        best_state = self.model.state_dict()
        self.logger.info(f"Epoch 0: val top-1 {baseline.top1:.3f}, val loss {baseline.loss:.4f}")

        state = SgdState()
        records: List[MetricRecord] = []
        stale = 0
        stopped_early = False

        for epoch in range(1, self.config.epochs + 1):
            lr = cosine_lr(epoch - 1, self.config)
            with SimpleTimer(f"Epoch {epoch}", self.logger):
                train_loss, train_top1 = self._train_epoch(train_clips, lr, state, class_names)
                val = evaluate(self.model, val_clips, self.flows)

            record = MetricRecord(
                epoch=epoch,
                train_loss=train_loss,
                train_top1=train_top1,
                val_top1=val.top1,
                val_top5=val.top5,
                lr=lr,
            )
            records.append(record)
            self._write_metrics(records)
            self.logger.info(
                f"Epoch {epoch}: loss {train_loss:.4f}, top-1 {train_top1:.3f}, "
                f"val top-1 {val.top1:.3f}, val top-5 {val.top5:.3f}, lr {lr:.6f}"
            )

            if val.top1 > best_top1 or (val.top1 == best_top1 and val.loss < best_loss):
                best_top1, best_loss, best_epoch = val.top1, val.loss, epoch
                best_state = self.model.state_dict()
                stale = 0
                self._save(BEST_DIR, self._metadata(epoch, val.top1, val.loss, class_names))
                self.logger.info(f"New best checkpoint at epoch {epoch} (val top-1 {val.top1:.3f})")
            else:
                stale += 1
                if stale >= self.config.patience:
                    stopped_early = True
                    self.logger.info(
                        f"Early stopping after epoch {epoch}: no improvement for {stale} epochs"
                    )
                    break

        last = records[-1]
        self._save(LAST_DIR, self._metadata(last.epoch, last.val_top1, None, class_names))
        self.model.load_state(best_state)
        if best_epoch == 0:
            self._save(BEST_DIR, self._metadata(0, best_top1, best_loss, class_names))

        return TrainResult(
            records=records,
            best_epoch=best_epoch,
            best_val_top1=best_top1,
            best_val_loss=best_loss,
            stopped_early=stopped_early,
            checkpoint_dir=self.out_dir / BEST_DIR if self.out_dir is not None else None,
            metrics_path=self.out_dir / METRICS_NAME if self.out_dir is not None else None,
        )

    @staticmethod
    def _metadata(
        epoch: int, val_top1: float, val_loss: Optional[float], class_names: Sequence[str]
    ) -> Dict[str, Any]:
        metadata: Dict[str, Any] = {
            "epoch": int(epoch),
            "val_top1": float(val_top1),
            "classes": list(class_names),
        }
        if val_loss is not None:
            metadata["val_loss"] = float(val_loss)
        return metadata


def train(
    model: MooseModel,
    dataset: SyntheticDataset,
    cfg: TrainConfig,
    out_dir: Optional[Path] = None,
    logger: Optional[logging.Logger] = None,
) -> TrainResult:
    """Functional form of :meth:`Trainer.train`."""
    return Trainer(model, cfg, logger=logger, out_dir=out_dir).train(dataset)
