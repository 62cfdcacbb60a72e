import os
import json
from collections import Counter
import click
import numpy as np
from rich.console import Console
from rich.table import Table

from config import Config
from models.audio_models import CLASS_NAMES, SPLITS, DEFAULT_PROFILES
from models.feature_models import FRONTENDS
from models.run_config import RunConfig
from services.audio_service import read_wav, segment
from services.checkpoint_service import save_checkpoint, load_checkpoint
from services.cnn_layers import one_hot
from services.cnn_model import build_reference_model, gradient_check, model_footprint
from services.dataset_service import make_dataset, load_manifest, MANIFEST_FILE
from services.feature_io import export_image
from services.filterbank_service import build_filterbank, export_kernels_csv, export_metadata_csv
from services.latency_service import latency_benchmark
from services.metrics_service import write_report
from services.pipeline_service import (
    extract_features, train_from_features, evaluate, compare_frontends,
    compute_feature_image, prepare_clip, end_to_end_pipeline, inference_pipeline
)
from services.training_service import write_history_csv
from middleware.command_logger import generate_run_id, log_command, log_stage
from utils.error_handlers import register_error_handlers, ConfigError, NumericError, EXIT_IO
from utils.env_logging import setup_environment_logging, configure_environment_loggers
from utils.logging_config import get_logger

logger = get_logger('cli')
console = Console()

GRADIENT_TOLERANCE = 1e-4


def _run_config(ctx: click.Context, **overrides) -> RunConfig:
    """Effective config: file (or defaults), then command flags"""
    return ctx.obj['run_config'].with_overrides(**overrides)


def _write_json(document, path: str) -> str:
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(document, fh, sort_keys=True, indent=2)
    return path


@click.group()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
              help='Run configuration JSON; command flags override its values.')
@click.option('--log-level', type=click.Choice(Config.VALID_LOG_LEVELS, case_sensitive=False), default=None,
              help='Overrides LOG_LEVEL for this run.')
@click.pass_context
def cli(ctx, config_path, log_level):
    """Gammatone cochleagram + CNN vessel classification toolkit"""
    ctx.ensure_object(dict)
    ctx.obj['run_id'] = generate_run_id()
    try:
        Config.validate()
    except ValueError as e:
        raise ConfigError(f"Configuration error: {e}")
    setup_environment_logging(log_level)
    configure_environment_loggers(log_level)

    if config_path:
        run_config = RunConfig.from_json_file(config_path)
    else:
        run_config = RunConfig().with_overrides(**{
            'dataset.data_dir': Config.DATA_DIR,
            'dataset.features_dir': Config.FEATURES_DIR,
        })
    ctx.obj['run_config'] = run_config
    logger.debug(f"RUN_CONFIG - ID: {ctx.obj['run_id']} - Source: {config_path or 'defaults'} - "
                 f"Hash: {run_config.config_hash(sorted(run_config.to_dict()))}")


register_error_handlers(cli)


@cli.command()
@click.option('--out-dir', default=None, help='Dataset directory (default: dataset.data_dir).')
@click.option('--per-class', type=int, default=None)
@click.option('--duration', type=float, default=None)
@click.option('--seed', type=int, default=None)
@click.option('--snr-min', type=float, default=None)
@click.option('--snr-max', type=float, default=None)
@click.option('--workers', type=int, default=1, show_default=True)
@click.pass_context
@log_command('synth')
def synth(ctx, out_dir, per_class, duration, seed, snr_min, snr_max, workers):
    """Write the synthetic vessel corpus and its manifest"""
    run_config = _run_config(ctx, seed=seed, **{
        'dataset.data_dir': out_dir, 'dataset.per_class': per_class, 'dataset.duration': duration,
        'dataset.snr_min': snr_min, 'dataset.snr_max': snr_max,
    })
    dataset = run_config.dataset
    profiles = DEFAULT_PROFILES
    if dataset.snr_min is not None:
        profiles = [p.with_snr_range(dataset.snr_min, dataset.snr_max) for p in profiles]

    manifest = make_dataset(
        dataset.data_dir, profiles=profiles, per_class=dataset.per_class, duration=dataset.duration,
        seed=run_config.seed, sample_rate=run_config.filterbank.sample_rate,
        split_fractions=dataset.split_fractions, workers=workers
    )
    _write_json(run_config.to_dict(), os.path.join(dataset.data_dir, 'run_config.json'))

    counts = Counter((e.class_id, e.split) for e in manifest.entries)
    table = Table(title=f"Synthetic corpus in {dataset.data_dir}")
    table.add_column('Class')
    for split in SPLITS:
        table.add_column(split, justify='right')
    table.add_column('total', justify='right')
    for class_id, name in enumerate(CLASS_NAMES):
        row = [counts[(class_id, split)] for split in SPLITS]
        table.add_row(name, *[str(v) for v in row], str(sum(row)))
    console.print(table)
    console.print(os.path.join(dataset.data_dir, MANIFEST_FILE))


@cli.command()
@click.argument('manifest_path', type=click.Path(exists=True))
@click.option('--frontend', type=click.Choice(FRONTENDS), default=None)
@click.option('--out-dir', default=None, help='Feature directory (default: dataset.features_dir).')
@click.option('--workers', type=int, default=None, help='Process count (default: EXTRACT_WORKERS).')
@click.pass_context
@log_command('extract')
def extract(ctx, manifest_path, frontend, out_dir, workers):
    """Compute one feature file per segment for every manifest entry"""
    run_config = _run_config(ctx, frontend=frontend, **{'dataset.features_dir': out_dir})
    manifest = load_manifest(manifest_path)
    summary = extract_features(manifest, run_config, run_config.dataset.features_dir,
                               workers=workers or Config.EXTRACT_WORKERS)

    console.print(
        f"[bold]{run_config.frontend}[/bold] features in {run_config.dataset.features_dir}: "
        f"computed {summary['computed']}, skipped {summary['skipped']}, "
        f"failed {len(summary['failed'])}, resampled {summary['resampled']}"
    )
    for failure in summary['failed']:
        console.print(f"[red]failed[/red] {failure['path']}: {failure['error']}")
    if summary['failed']:
        ctx.exit(EXIT_IO)


@cli.command()
@click.option('--features-dir', default=None)
@click.option('--out', 'checkpoint_path', default=None, help='Checkpoint path.')
@click.option('--epochs', type=int, default=None)
@click.option('--batch-size', type=int, default=None)
@click.option('--lr', type=float, default=None)
@click.option('--seed', type=int, default=None)
@click.pass_context
@log_command('train')
def train(ctx, features_dir, checkpoint_path, epochs, batch_size, lr, seed):
    """Train the reference CNN on stored features; writes checkpoint and history CSV"""
    run_config = _run_config(ctx, seed=seed, **{
        'dataset.features_dir': features_dir, 'train.epochs': epochs,
        'train.batch_size': batch_size, 'train.learning_rate': lr, 'train.seed': seed,
    })
    checkpoint_path = checkpoint_path or os.path.join(Config.CHECKPOINT_DIR, 'model.gtcn')
    base = os.path.splitext(checkpoint_path)[0]

    result = train_from_features(run_config.dataset.features_dir, run_config)
    save_checkpoint(result.model, result.optimizer_state, checkpoint_path)
    write_history_csv(result.history, f'{base}_history.csv')
    _write_json(run_config.to_dict(), f'{base}_config.json')

    log_stage(logger, 'training_summary', checkpoint=checkpoint_path,
              best_epoch=result.history.best_epoch, best_val_acc=result.history.best_val_acc)
    if result.history.records:
        console.print(f"Best epoch {result.history.best_epoch}: val acc {result.history.best_val_acc:.4f}")
    else:
        console.print("No epochs run; initial weights saved")
    console.print(checkpoint_path)


@cli.command(name='eval')
@click.argument('checkpoint_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--features-dir', default=None)
@click.option('--split', type=click.Choice(SPLITS), default='test', show_default=True)
@click.option('--out-dir', default='reports', show_default=True)
@click.pass_context
@log_command('eval')
def eval_command(ctx, checkpoint_path, features_dir, split, out_dir):
    """Evaluate a checkpoint on one split; writes JSON, CSV and PGM outputs"""
    run_config = _run_config(ctx, **{'dataset.features_dir': features_dir})
    model = load_checkpoint(checkpoint_path)
    report = evaluate(model, run_config.dataset.features_dir, split)
    paths = write_report(report, out_dir, prefix=f'eval_{split}')

    console.print(
        f"{split}: accuracy {report.accuracy:.4f} - kappa {report.kappa:.4f} - "
        f"macro F1 {report.scores.macro_f1:.4f}"
    )
    for name in sorted(paths):
        console.print(f"  {name}: {paths[name]}")


@cli.command()
@click.argument('checkpoint_path', type=click.Path(exists=True, dir_okay=False))
@click.argument('clip_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--iterations', type=int, default=50, show_default=True)
@click.option('--frontend', type=click.Choice(FRONTENDS), default=None)
@click.option('--out', 'out_path', default=None, help='Latency JSON path.')
@click.pass_context
@log_command('bench')
def bench(ctx, checkpoint_path, clip_path, iterations, frontend, out_path):
    """End-to-end and inference-only latency on one window"""
    model = load_checkpoint(checkpoint_path)
    _, height, width = model.input_shape
    run_config = _run_config(ctx, frontend=frontend, image_size=(height, width))

    clip, _ = prepare_clip(read_wav(clip_path), run_config)
    windows = segment(clip, run_config.dataset.segment_window)
    window = windows[0] if windows else clip
    image = compute_feature_image(window, run_config)

    stats = {
        'end_to_end': latency_benchmark(end_to_end_pipeline(model, run_config), window, iterations,
                                        window.duration, label='end_to_end'),
        'inference_only': latency_benchmark(inference_pipeline(model), image, iterations,
                                            window.duration, label='inference_only'),
    }
    document = {name: s.to_dict() for name, s in stats.items()}
    document['window_seconds'] = window.duration
    document['model'] = model_footprint(model)
    document['config'] = run_config.to_dict()
    out_path = out_path or os.path.splitext(checkpoint_path)[0] + '_latency.json'
    _write_json(document, out_path)

    table = Table(title=f"Latency over {iterations} runs, {window.duration:.2f} s window")
    for column in ('pipeline', 'mean ms', 'p50 ms', 'p95 ms', 'windows/s', 'real-time factor'):
        table.add_column(column, justify='right' if column != 'pipeline' else 'left')
    for name, s in stats.items():
        table.add_row(name, f"{s.mean_ms:.2f}", f"{s.p50_ms:.2f}", f"{s.p95_ms:.2f}",
                      f"{s.throughput_per_s:.1f}", f"{s.real_time_factor:.1f}")
    console.print(table)
    console.print(out_path)


@cli.command(name='export-image')
@click.argument('feature_path', type=click.Path())
@click.argument('out_path', type=click.Path())
@log_command('export_image')
def export_image_command(feature_path, out_path):
    """Render channel 0 of a feature file as 8-bit PGM or PNG"""
    console.print(export_image(feature_path, out_path))


@cli.command()
@click.option('--out-dir', default='filterbank', show_default=True)
@click.pass_context
@log_command('filterbank')
def filterbank(ctx, out_dir):
    """Export the configured gammatone kernels and their metadata as CSV"""
    bank = build_filterbank(ctx.obj['run_config'].filterbank)
    os.makedirs(out_dir, exist_ok=True)
    export_kernels_csv(bank, os.path.join(out_dir, 'kernels.csv'))
    rows = export_metadata_csv(bank, os.path.join(out_dir, 'metadata.csv'))
    console.print(f"{len(rows)} filters, {bank.kernels.shape[1]} taps, "
                  f"{rows[0]['fc']:.1f}-{rows[-1]['fc']:.1f} Hz -> {out_dir}")


@cli.command()
@click.argument('manifest_path', type=click.Path(exists=True))
@click.option('--seeds', default='0,1,2,3,4', show_default=True, help='Comma-separated seeds.')
@click.option('--work-dir', default='compare', show_default=True)
@click.option('--workers', type=int, default=None)
@click.pass_context
@log_command('compare')
def compare(ctx, manifest_path, seeds, work_dir, workers):
    """Train the same network on both front-ends and compare test accuracy"""
    try:
        seed_list = [int(s) for s in seeds.split(',') if s.strip()]
    except ValueError:
        raise ConfigError(f"--seeds must be comma-separated integers, got '{seeds}'")
    run_config = ctx.obj['run_config']
    rows = compare_frontends(load_manifest(manifest_path), run_config, seed_list, work_dir,
                             workers=workers or Config.EXTRACT_WORKERS)
    _write_json({'config': run_config.to_dict(), 'results': rows}, os.path.join(work_dir, 'compare.json'))

    table = Table(title='Test accuracy by front-end')
    for column in ('seed',) + FRONTENDS:
        table.add_column(column, justify='right')
    for row in rows:
        table.add_row(str(row['seed']), *[f"{row[f]:.4f}" for f in FRONTENDS])
    console.print(table)
    wins = sum(1 for row in rows if row['gammatone'] >= row['mfcc'])
    console.print(f"gammatone >= mfcc in {wins} of {len(rows)} seeds")


@cli.command()
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--max-checks', type=int, default=300, show_default=True)
@log_command('gradcheck')
def gradcheck(seed, max_checks):
    """Central-difference check of the reference model at 32x32"""
    model = build_reference_model((32, 32, 3), num_classes=len(CLASS_NAMES), seed=seed)
    rng = np.random.default_rng(seed)
    x = rng.random((2, 3, 32, 32))
    targets = one_hot(rng.integers(0, len(CLASS_NAMES), size=2), len(CLASS_NAMES))
    worst = gradient_check(model, x, targets, max_checks=max_checks, seed=seed)
    console.print(f"max relative error {worst:.3e}")
    if worst >= GRADIENT_TOLERANCE:
        raise NumericError(f"Gradient check failed: max relative error {worst:.3e} >= {GRADIENT_TOLERANCE}",
                           details={'max_relative_error': worst})


if __name__ == '__main__':
    cli()
