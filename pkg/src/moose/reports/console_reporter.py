"""Console reports using Jinja2 templates."""

from pathlib import Path
from typing import Dict, List, Optional

from jinja2 import Template

from ..models import MooseConfig
from ..training import EvalResult, TrainResult


class ConsoleReporter:
    """Renders training, evaluation and accounting summaries."""

    TRAINING_TEMPLATE = """
{%- set dash60 = '─' * 60 -%}
{%- set equal60 = '=' * 60 -%}
{{ equal60 }}
🫎 MOOSE TRAINING REPORT
{{ equal60 }}
🧩 Model: {{ fusion }} fusion, {{ aggregation }} aggregation ({{ params }} parameters)
📅 Epochs run: {{ epochs_run }}{% if stopped_early %} (stopped early){% endif %}

📊 PROGRESS
{{ dash60 }}
{{ header }}
{%- for row in rows %}
{{ row }}
{%- endfor %}

🏆 Best epoch {{ best_epoch }}: val top-1 {{ best_val_top1 }}, val loss {{ best_val_loss }}
{%- if checkpoint_dir %}
💾 Checkpoint: {{ checkpoint_dir }}
{%- endif %}
{%- if metrics_path %}
📄 Metrics: {{ metrics_path }}
{%- endif %}
""".strip()

    EVALUATION_TEMPLATE = """
{%- set dash60 = '─' * 60 -%}
{%- set equal60 = '=' * 60 -%}
{{ equal60 }}
🫎 MOOSE EVALUATION REPORT
{{ equal60 }}
💾 Checkpoint: {{ checkpoint }}
📂 Split: {{ split }} ({{ count }} clips)

🎯 top1 {{ top1 }}
🎯 top5 {{ top5 }}
📉 loss {{ "%.6f"|format(loss) }}
{%- if per_class %}

📊 PER-CLASS TOP-1
{{ dash60 }}
{%- for name, value in per_class %}
{{ "%-16s %.4f"|format(name, value) }}
{%- endfor %}
{%- endif %}
""".strip()

    ACCOUNTING_TEMPLATE = """
{%- set dash60 = '─' * 60 -%}
{{ params }}
{{ macs }}
{%- if breakdown %}

📊 PARAMETERS
{{ dash60 }}
{%- for name, value in param_rows %}
{{ "%-12s %12d"|format(name, value) }}
{%- endfor %}

⚡ MULTIPLY-ACCUMULATES
{{ dash60 }}
{%- for name, value in mac_rows %}
{{ "%-12s %12d"|format(name, value) }}
{%- endfor %}
{%- endif %}
""".strip()

    ROW_FORMAT = "%-6d %-10.4f %-10.4f %-10.4f %-10.4f %-10.6f"
    HEADER_FORMAT = "%-6s %-10s %-10s %-10s %-10s %-10s"

    def __init__(self) -> None:
        self.training_template = Template(self.TRAINING_TEMPLATE)
        self.evaluation_template = Template(self.EVALUATION_TEMPLATE)
        self.accounting_template = Template(self.ACCOUNTING_TEMPLATE)

    def training_report(self, result: TrainResult, config: MooseConfig, params: int) -> str:
        epochs_run = max((r.epoch for r in result.records), default=0)
        return self.training_template.render(
            fusion=config.fusion.value,
            aggregation=config.aggregation.value,
            params=params,
            epochs_run=epochs_run,
            stopped_early=result.stopped_early,
            header=self.HEADER_FORMAT % ("epoch", "loss", "top1", "val_top1", "val_top5", "lr"),
            rows=[
                self.ROW_FORMAT
                % (r.epoch, r.train_loss, r.train_top1, r.val_top1, r.val_top5, r.lr)
                for r in result.records
            ],
            best_epoch=result.best_epoch,
            best_val_top1=f"{result.best_val_top1:.4f}",
            best_val_loss=f"{result.best_val_loss:.4f}",
            checkpoint_dir=result.checkpoint_dir,
            metrics_path=result.metrics_path,
        )

    def evaluation_report(
        self, result: EvalResult, split: str, checkpoint: Optional[Path] = None
    ) -> str:
        """Top-1/top-5 are printed with ``repr`` so they compare exactly with the metric log."""
        return self.evaluation_template.render(
            checkpoint=checkpoint or "(untrained)",
            split=split,
            count=result.count,
            top1=repr(result.top1),
            top5=repr(result.top5),
            loss=result.loss,
            per_class=list(result.per_class.items()),
        )

    def accounting_report(
        self,
        params: Dict[str, int],
        macs: Dict[str, int],
        breakdown: bool = True,
    ) -> str:
        """Total parameters and MACs on the first two lines, then the per-component tables."""
        param_rows: List[tuple] = list(params.items())
        mac_rows: List[tuple] = list(macs.items())
        return self.accounting_template.render(
            params=sum(params.values()),
            macs=sum(macs.values()),
            breakdown=breakdown,
            param_rows=param_rows,
            mac_rows=mac_rows,
        )
