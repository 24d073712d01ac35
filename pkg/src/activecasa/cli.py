"""Command-line interface: ``activecasa <command>``."""
from __future__ import annotations

import configparser
import functools
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

import click
import numpy as np

from .errors import ActiveCasaError, ConfigError

log = logging.getLogger("activecasa")


def _fail_cleanly(fn):
    """Turn library errors into a one-line message and exit status 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ActiveCasaError, ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _renderer(hrir_dir):
    from .render import HrirRenderer, SphericalHeadRenderer

    return HrirRenderer(hrir_dir) if hrir_dir else SphericalHeadRenderer()


def _pool(data_dir, items_per_class, item_duration, seed):
    from .synth import synthetic_pool, wav_pool

    if data_dir:
        return wav_pool(data_dir)
    return synthetic_pool(items_per_class, item_duration, seed)


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def main(verbose: int) -> None:
    """Active binaural scene analysis: localize, segregate and classify sources."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("train-loc")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output bank (.npz).")
@click.option("--duration", default=10.0, show_default=True, help="Seconds of noise per azimuth.")
@click.option("--azimuths", default=360, show_default=True, help="Grid size over the full circle.")
@click.option("--seed", default=0, show_default=True)
@click.option("--hrir", "hrir_dir", type=click.Path(file_okay=False, exists=True), default=None,
              help="Directory of measured HRIR WAVs instead of the spherical head.")
@_fail_cleanly
def train_loc(out, duration, azimuths, seed, hrir_dir):
    """Train the Gaussian azimuth bank from rendered white noise."""
    from .frontend import AuditoryFrontend
    from .localization import train_bank

    if duration <= 0:
        raise ConfigError("--duration must be positive")
    with click.progressbar(length=azimuths, label="azimuths", file=sys.stderr) as bar:
        bank = train_bank(
            _renderer(hrir_dir), AuditoryFrontend(), azimuths, duration, seed,
            progress=lambda done, total: bar.update(1),
        )
    bank.save(out)
    click.echo(f"wrote {out} (config hash {bank.meta['config_hash']})")


@main.command("train-clf")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output models (.json).")
@click.option("--data", "data_dir", type=click.Path(file_okay=False, exists=True), default=None,
              help="Directory with one subdirectory of WAVs per class.")
@click.option("--items-per-class", default=10, show_default=True)
@click.option("--item-duration", default=10.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_fail_cleanly
def train_clf(out, data_dir, items_per_class, item_duration, seed):
    """Train one GMM per sound class on clean monaural ratemaps."""
    import warnings

    from .classifier import save_models, train_source_models
    from .frontend import AuditoryFrontend
    from .harness import item_features

    pool = _pool(data_dir, items_per_class, item_duration, seed)
    feats = item_features(pool, AuditoryFrontend())
    train = {label: np.concatenate(items) for label, items in feats.items()}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        models = train_source_models(train, seed=seed)
    save_models(models, out, {"pool": pool.source, "seed": seed})
    click.echo(f"wrote {out} ({len(models)} classes)")


@main.command()
@click.option("--bank", required=True, type=click.Path(dir_okay=False), help="Azimuth bank from train-loc.")
@click.option("--models", required=True, type=click.Path(dir_okay=False), help="Models from train-clf.")
@click.option("--config", "config_file", type=click.Path(dir_okay=False, exists=True), default=None,
              help="Scene file with key = value lines.")
@click.option("--sources", type=int, default=None)
@click.option("--policy", type=click.Choice(["none", "random", "feedback"]), default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--duration", type=float, default=None)
@click.option("--data", "data_dir", type=click.Path(file_okay=False, exists=True), default=None)
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="JSON-lines trace.")
@click.option("--wav", type=click.Path(dir_okay=False), default=None, help="Also write the binaural mix.")
@_fail_cleanly
def simulate(bank, models, config_file, sources, policy, alpha, seed, duration, data_dir, out, wav):
    """Run one closed-loop scene and write a per-block trace."""
    from .audio import write_wav
    from .classifier import load_models
    from .frontend import AuditoryFrontend
    from .harness import load_bank
    from .render import SphericalHeadRenderer
    from .scene import SceneConfig, compose_scene, load_scene_config, run_scene, scene_metrics, write_records

    overrides = dict(n_sources=sources, policy=policy, alpha=alpha, seed=seed, duration=duration)
    if config_file:
        cfg = load_scene_config(config_file, **overrides)
    else:
        cfg = SceneConfig(**{k: v for k, v in overrides.items() if v is not None})
    bank_obj = load_bank(bank)
    if not Path(models).exists():
        raise ConfigError(f"models not found at {models!r}; run `activecasa train-clf --out MODELS` first")
    model_list = load_models(models)
    frontend = AuditoryFrontend()
    pool = _pool(data_dir, 2, max(cfg.duration, 3.0), cfg.seed + 1)
    cfg = replace(cfg, classes=tuple(c for c in cfg.classes if c in pool.items) or tuple(pool.labels))
    srcs = compose_scene(cfg, pool.items, frontend.cfg.sample_rate)
    records, audio = run_scene(cfg, srcs, SphericalHeadRenderer(), frontend, bank_obj, model_list, keep_audio=True)
    Path(out).write_text("")
    write_records(records, out)
    if wav:
        write_wav(wav, np.concatenate([a[0] for a in audio]), np.concatenate([a[1] for a in audio]))
    m = scene_metrics(records)
    click.echo(f"{len(records)} blocks, rmse {m['rmse_deg']:.2f} deg, "
               f"{m['errors']}/{m['decisions']} classification errors")


_EVAL_LIST_KEYS = {"scenarios": int, "policies": str}


def _eval_config_from_file(path) -> dict:
    from .harness import EvalConfig

    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        parser.read_string("[evaluate]\n" + fh.read())
    known = {f.name: f for f in fields(EvalConfig)}
    out = {}
    for key, raw in parser["evaluate"].items():
        if key not in known or key == "clustering":
            raise ConfigError(f"unknown evaluation key {key!r}")
        if key in _EVAL_LIST_KEYS:
            out[key] = tuple(_EVAL_LIST_KEYS[key](p.strip()) for p in raw.split(",") if p.strip())
        elif key == "data_dir":
            out[key] = raw
        else:
            out[key] = type(known[key].default)(raw)
    return out


@main.command()
@click.option("--bank", required=True, type=click.Path(dir_okay=False), help="Azimuth bank from train-loc.")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--config", "config_file", type=click.Path(dir_okay=False, exists=True), default=None)
@click.option("--sources", multiple=True, type=int, help="Scenario source counts (repeatable).")
@click.option("--policy", multiple=True, type=click.Choice(["none", "random", "feedback"]))
@click.option("--folds", type=int, default=None)
@click.option("--scenes-per-fold", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--duration", type=float, default=None)
@click.option("--data", "data_dir", type=click.Path(file_okay=False, exists=True), default=None)
@click.option("--jobs", default=1, show_default=True, help="Worker processes for scenes.")
@_fail_cleanly
def evaluate(bank, out, config_file, sources, policy, folds, scenes_per_fold, alpha, seed, duration,
             data_dir, jobs):
    """Run the cross-validated protocol and write report.json and summary.csv."""
    from .harness import EvalConfig, format_table, load_bank, run_evaluation, write_report

    values = _eval_config_from_file(config_file) if config_file else {}
    cli = dict(scenarios=tuple(sources) or None, policies=tuple(policy) or None, folds=folds,
               scenes_per_fold=scenes_per_fold, alpha=alpha, seed=seed, duration=duration,
               data_dir=data_dir)
    values.update({k: v for k, v in cli.items() if v is not None})
    cfg = EvalConfig(**values)
    bank_obj = load_bank(bank)
    total = len(cfg.scenarios) * len(cfg.policies) * cfg.folds * cfg.scenes_per_fold
    with click.progressbar(length=total, label="scenes", file=sys.stderr) as bar:
        last = [0]

        def progress(done):
            bar.update(done - last[0])
            last[0] = done

        report = run_evaluation(cfg, bank_obj, jobs=jobs, progress=progress)
    json_path, csv_path = write_report(report, out)
    click.echo(format_table(report))
    click.echo(f"wrote {json_path} and {csv_path}")


@main.command()
@click.option("--only", multiple=True, help="Run only the named checks.")
@_fail_cleanly
def selftest(only):
    """Run the numerical property checks."""
    from .checks import CHECKS, run_checks

    unknown = [n for n in only if n not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks {unknown}; available: {', '.join(CHECKS)}")
    results = run_checks(only or None)
    for r in results:
        click.echo(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<20} {r.detail} ({r.seconds:.2f}s)")
    if not all(r.passed for r in results):
        sys.exit(1)


if __name__ == "__main__":
    main()
