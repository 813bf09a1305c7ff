"""Command-line entry point: ``oilsense generate|train|evaluate|reproduce``."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import pipeline
from .config import load_config
from .errors import OilSenseError

log = logging.getLogger("oilsense")


def _csv_list(ctx, param, value):
    if value is None:
        return None
    items = [v.strip() for v in value.split(",") if v.strip()]
    return items or None


config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                             help="YAML run configuration.")
seed_option = click.option("--seed", type=int, help="Master seed (overrides config).")
out_option = click.option("--out", "out_dir", type=click.Path(file_okay=False),
                          help="Output directory (overrides config).")
oils_option = click.option("--oils", callback=_csv_list, help="Comma-separated subset of oils.")
mode_option = click.option("--feature-mode", type=click.Choice(["raw", "resonance"]),
                           help="Raw sweep rows or per-trace resonance features.")
models_option = click.option("--models", callback=_csv_list,
                             help="Comma-separated subset of logistic,knn,forest,svm.")
force_option = click.option("--force", is_flag=True, help="Ignore config-hash mismatches.")


def _config(config_path, **overrides):
    return load_config(config_path, **overrides)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose):
    """Simulate, train and evaluate oil classifiers for a two-mode resonant sensor."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@cli.command()
@config_option
@seed_option
@oils_option
@mode_option
@out_option
def generate(config_path, seed, oils, feature_mode, out_dir):
    """Write the sweep dataset CSV and its manifest."""
    cfg = _config(config_path, seed=seed, oils=oils, feature_mode=feature_mode, out_dir=out_dir)
    path, data = pipeline.run_generate(cfg)
    click.echo(f"{path}: {len(data)} rows")
    for name, count in data.manifest["class_counts"].items():
        click.echo(f"  {name}: {count}")


@cli.command()
@click.argument("dataset", type=click.Path(dir_okay=False))
@config_option
@seed_option
@models_option
@out_option
@force_option
def train(dataset, config_path, seed, models, out_dir, force):
    """Split DATASET 80/20 and train the classifiers."""
    cfg = _config(config_path, seed=seed, out_dir=out_dir)
    manifest_file = pipeline.manifest_path(dataset)
    if manifest_file.exists() and not force:
        recorded = pipeline._read_json(manifest_file, "dataset manifest").get("config_hash")
        if recorded and recorded != cfg.config_hash():
            log.warning("dataset was generated under a different config hash (%s)", recorded[:12])
    paths, split = pipeline.run_train(cfg, dataset, models=models)
    for p in paths:
        click.echo(str(p))
    click.echo(str(split))


@cli.command()
@click.argument("models", nargs=-1, type=click.Path(dir_okay=False))
@click.option("--split", "split_path", required=True, type=click.Path(dir_okay=False),
              help="Split manifest written by `train`.")
@out_option
@force_option
def evaluate(models, split_path, out_dir, force):
    """Score MODELS on the held-out split; write reports and charts."""
    if not models:
        raise click.UsageError("give at least one model file")
    out = Path(out_dir) if out_dir else Path(split_path).parent
    result = pipeline.run_evaluate(list(models), split_path, out, force=force)
    click.echo(result["table"])


@cli.command()
@config_option
@seed_option
@oils_option
@mode_option
@models_option
@out_option
def reproduce(config_path, seed, oils, feature_mode, models, out_dir):
    """Run generate, train and evaluate end to end, then summarize."""
    cfg = _config(config_path, seed=seed, oils=oils, feature_mode=feature_mode, out_dir=out_dir)
    result = pipeline.run_reproduce(cfg, models=models)
    click.echo(result["table"])
    click.echo(f"summary: {Path(cfg.out_dir) / 'summary.md'}")


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="oilsense", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except OilSenseError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
