#!/usr/bin/env python3
"""
MOOSE CLI - Main command-line interface

Commands:
- generate: Render the synthetic motion dataset to disk
- train: Train a model and write checkpoints plus the metric log
- eval: Score a checkpoint on a dataset split
- viz: Write attention heatmap overlays for one clip
- flops: Print parameter and multiply-accumulate counts for a config
"""

import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import click

from .. import __version__
from ..data import SPLITS
from ..models import AggregationMode, FusionMode
from ..utils.config import RunConfig, load_config
from ..utils.logger import setup_logger

USAGE_EXIT = 2


def config_option(func: Callable[..., Any]) -> Callable[..., Any]:
    """``--config`` accepted after the subcommand as well as before it."""
    return click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        default=None,
        help="Path to a key = value configuration file",
    )(func)


def model_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """``--fusion`` and ``--agg``, which override the config file."""
    func = click.option(
        "--agg",
        type=click.Choice([mode.value for mode in AggregationMode]),
        default=None,
        help="Unit aggregation (overrides config)",
    )(func)
    return click.option(
        "--fusion",
        type=click.Choice([mode.value for mode in FusionMode]),
        default=None,
        help="Fusion mode (overrides config)",
    )(func)


def _run_config(
    ctx: click.Context,
    config_path: Optional[Path],
    fusion: Optional[str] = None,
    agg: Optional[str] = None,
) -> RunConfig:
    logger = ctx.obj["logger"]
    path = config_path or ctx.obj.get("config_path")
    try:
        config = load_config(path)
        return config.with_overrides(fusion=fusion, aggregation=agg)
    except Exception as e:
        logger.error(f"Failed to load configuration: {e}")
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(1)


@click.group()
@click.version_option(version=__version__, prog_name="moose")
@config_option
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    help="Enable verbose logging",
)
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[Path], verbose: bool) -> None:
    """
    MOOSE: two-pathway video encoder fusing frames with optical flow.

    Generate a synthetic motion dataset, train and evaluate the encoder, count its
    parameters and MACs, and render its attention maps.

    \b
    Examples:
        moose generate --config moose.cfg
        moose train --fusion bidirectional --agg causal
        moose eval --checkpoint runs/best --split test
        moose flops --config moose.cfg
    """
    logger = setup_logger(verbose=verbose)
    ctx.ensure_object(dict)
    ctx.obj["logger"] = logger
    ctx.obj["config_path"] = config_path


@cli.command()
@config_option
@click.option(
    "--out",
    "-o",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Dataset directory (defaults to data_dir)",
)
@click.pass_context
def generate(ctx: click.Context, config_path: Optional[Path], out: Optional[Path]) -> None:
    """
    Render every split of the synthetic dataset to disk.

    \b
    Examples:
        moose generate
        moose generate --out data/reversal --config reversal.cfg
    """
    logger = ctx.obj["logger"]
    config = _run_config(ctx, config_path)

    from ..commands.generate import GenerateCommand

    try:
        result = GenerateCommand(config=config, logger=logger).execute(out_dir=out)
        if result.success:
            counts = ", ".join(f"{name} {count}" for name, count in result.counts.items())
            click.echo(f"✅ Dataset written to {result.root} ({counts})")
        else:
            click.echo(f"❌ Generate failed: {result.error}", err=True)
            sys.exit(1)

    except Exception as e:
        logger.error(f"Generate command failed: {e}")
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(1)


@cli.command()
@config_option
@click.option(
    "--out",
    "-o",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Run directory for checkpoints and metrics (defaults to out_dir)",
)
@model_options
@click.pass_context
def train(
    ctx: click.Context,
    config_path: Optional[Path],
    out: Optional[Path],
    fusion: Optional[str],
    agg: Optional[str],
) -> None:
    """
    Train the encoder on the train split with early stopping on val top-1.

    \b
    Examples:
        moose train
        moose train --fusion flow_prior --agg mean --out runs/ablation
    """
    logger = ctx.obj["logger"]
    config = _run_config(ctx, config_path, fusion, agg)

    click.echo(
        f"🚂 Training {config.fusion.value} fusion with {config.aggregation.value} aggregation"
    )

    from ..commands.train import TrainCommand

    try:
        result = TrainCommand(config=config, logger=logger).execute(out_dir=out)
        if result.success:
            click.echo(result.report)
            click.echo("✅ Training completed!")
        else:
            click.echo(f"❌ Training failed: {result.error}", err=True)
            sys.exit(1)

    except Exception as e:
        logger.error(f"Train command failed: {e}")
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(1)


@cli.command(name="eval")
@config_option
@click.option(
    "--checkpoint",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
    help="Checkpoint directory (defaults to <out_dir>/best)",
)
@click.option(
    "--split",
    type=click.Choice(list(SPLITS)),
    default="test",
    help="Dataset split to score",
)
@click.pass_context
def eval_command(
    ctx: click.Context, config_path: Optional[Path], checkpoint: Optional[Path], split: str
) -> None:
    """
    Print top-1 and top-5 accuracy of a checkpoint on one split.

    \b
    Examples:
        moose eval --checkpoint runs/best --split val
    """
    logger = ctx.obj["logger"]
    config = _run_config(ctx, config_path)

    from ..commands.evaluate import EvalCommand

    try:
        result = EvalCommand(config=config, logger=logger).execute(
            checkpoint=checkpoint, split=split
        )
        if result.success:
            click.echo(result.report)
        else:
            click.echo(f"❌ Evaluation failed: {result.error}", err=True)
            sys.exit(1)

    except Exception as e:
        logger.error(f"Eval command failed: {e}")
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(1)


@cli.command()
@config_option
@click.option("--clip", "clip_id", required=True, help="Clip id, e.g. move_right_00003")
@click.option(
    "--checkpoint",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
    help="Checkpoint directory (an untrained model from the config when omitted)",
)
@click.option(
    "--out",
    "-o",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Image directory (defaults to <out_dir>/viz)",
)
@model_options
@click.pass_context
def viz(
    ctx: click.Context,
    config_path: Optional[Path],
    clip_id: str,
    checkpoint: Optional[Path],
    out: Optional[Path],
    fusion: Optional[str],
    agg: Optional[str],
) -> None:
    """
    Write spatial and flow attention overlays for every frame of a clip.

    \b
    Examples:
        moose viz --clip sweep_LR_00002 --checkpoint runs/best --out figures
    """
    logger = ctx.obj["logger"]
    config = _run_config(ctx, config_path, fusion, agg)

    from ..commands.viz import VizCommand

    try:
        result = VizCommand(config=config, logger=logger).execute(
            clip_id=clip_id, checkpoint=checkpoint, out_dir=out
        )
        if result.success and result.export is not None:
            export = result.export
            click.echo(f"🖼️  Wrote {len(export.images)} images to {export.directory}")
        else:
            click.echo(f"❌ Visualization failed: {result.error}", err=True)
            sys.exit(1)

    except Exception as e:
        logger.error(f"Viz command failed: {e}")
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(1)


@cli.command()
@config_option
@model_options
@click.pass_context
def flops(
    ctx: click.Context, config_path: Optional[Path], fusion: Optional[str], agg: Optional[str]
) -> None:
    """
    Print the parameter count and the MAC count of one forward pass.

    The first two output lines are the totals; per-component tables follow.
    """
    logger = ctx.obj["logger"]
    config = _run_config(ctx, config_path, fusion, agg)

    from ..commands.flops import FlopsCommand

    try:
        result = FlopsCommand(config=config, logger=logger).execute()
        if result.success:
            click.echo(result.report)
        else:
            click.echo(f"❌ Accounting failed: {result.error}", err=True)
            sys.exit(1)

    except Exception as e:
        logger.error(f"Flops command failed: {e}")
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(1)


def dispatch(argv: Sequence[str]) -> int:
    """
    Run one subcommand and return its exit code.

    0 on success, 1 on runtime failure, 2 on usage errors (no arguments included).
    """
    args = list(argv)
    if not args:
        with click.Context(cli, info_name="moose") as ctx:
            click.echo(ctx.get_help(), err=True)
        return USAGE_EXIT

    try:
        rv = cli.main(args=args, prog_name="moose", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return USAGE_EXIT
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    return rv if isinstance(rv, int) else 0


def main() -> None:
    """Entry point for the CLI application."""
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
