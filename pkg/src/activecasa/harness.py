"""Cross-validated evaluation over scenarios and head-rotation policies."""
from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .classifier import train_source_models
from .errors import ConfigError, MissingArtifactError
from .frontend import AuditoryFrontend, spectral_features_batch
from .localization import GaussianAzimuthBank, config_hash
from .render import SphericalHeadRenderer
from .scene import POLICIES, ClusteringConfig, SceneConfig, compose_scene, run_scene, scene_metrics
from .synth import SoundPool, synthetic_pool, wav_pool

log = logging.getLogger(__name__)

REPORT_VERSION = 1
# frames quieter than this fraction of an item's loudest frame count as silence
SILENCE_FLOOR = 1e-3


@dataclass(frozen=True)
class EvalConfig:
    scenarios: tuple = (2, 3, 4)
    policies: tuple = POLICIES
    folds: int = 10
    scenes_per_fold: int = 30
    alpha: float = 5.0
    seed: int = 0
    duration: float = 3.0
    items_per_class: int = 10
    item_duration: float = 10.0
    data_dir: str | None = None
    classifier_seed: int = 0
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("need at least 2 folds")
        if self.item_duration < self.duration:
            raise ConfigError("item_duration must cover the scene duration")
        if self.scenes_per_fold < 1:
            raise ConfigError("scenes_per_fold must be >= 1")
        bad = [p for p in self.policies if p not in POLICIES]
        if bad:
            raise ConfigError(f"unknown policies {bad}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenarios"] = list(self.scenarios)
        d["policies"] = list(self.policies)
        return d


def training_frames(ratemap, center_freqs) -> np.ndarray:
    """Spectral attribute rows of a clean ratemap with silent frames removed."""
    feats, degenerate = spectral_features_batch(ratemap, center_freqs)
    total = ratemap.sum(axis=1)
    loud = total > SILENCE_FLOOR * total.max() if total.size and total.max() > 0 else np.zeros(len(total), bool)
    return feats[loud & ~degenerate]


def item_features(pool: SoundPool, frontend: AuditoryFrontend) -> dict:
    return {
        label: [training_frames(frontend.monaural_ratemap(x), frontend.center_freqs) for x in sounds]
        for label, sounds in pool.items.items()
    }


def train_fold_models(features: dict, fold: int, folds: int, seed: int = 0, **kw):
    train = {
        label: np.concatenate([f for i, f in enumerate(items) if i % folds != fold])
        for label, items in features.items()
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # sklearn ConvergenceWarning at the iteration cap
        return train_source_models(train, seed=seed, **kw)


def _scene_job(args):
    scene_cfg, sources, renderer, frontend, bank, models, clustering = args
    records = run_scene(scene_cfg, sources, renderer, frontend, bank, models, clustering)
    return scene_metrics(records)


def load_bank(path) -> GaussianAzimuthBank:
    if path is None or not Path(path).exists():
        raise MissingArtifactError(
            f"azimuth bank not found at {path!r}; run `activecasa train-loc --out BANK` first"
        )
    return GaussianAzimuthBank.load(path)


def run_evaluation(
    cfg: EvalConfig,
    bank: GaussianAzimuthBank,
    renderer=None,
    frontend: AuditoryFrontend | None = None,
    pool: SoundPool | None = None,
    jobs: int = 1,
    progress=None,
) -> dict:
    """Run the full protocol and return the report as a plain dict."""
    renderer = renderer or SphericalHeadRenderer()
    frontend = frontend or AuditoryFrontend()
    if pool is None:
        pool = wav_pool(cfg.data_dir) if cfg.data_dir else synthetic_pool(
            cfg.items_per_class, cfg.item_duration, cfg.seed
        )
    for label, items in pool.items.items():
        if len(items) < cfg.folds:
            raise ConfigError(f"class {label!r} has {len(items)} items, fewer than {cfg.folds} folds")
    features = item_features(pool, frontend)

    rows = []
    executor = None
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        executor = ProcessPoolExecutor(jobs)
    try:
        for fold in range(cfg.folds):
            models = train_fold_models(features, fold, cfg.folds, cfg.classifier_seed)
            _, test = pool.split(fold, cfg.folds)
            jobs_args, keys = [], []
            for n in cfg.scenarios:
                for s in range(cfg.scenes_per_fold):
                    scene_seed = int(np.random.SeedSequence([cfg.seed, fold, n, s]).generate_state(1)[0])
                    base = SceneConfig(
                        n_sources=n, duration=cfg.duration, alpha=cfg.alpha, seed=scene_seed,
                        classes=tuple(pool.labels),
                    )
                    sources = compose_scene(base, test, frontend.cfg.sample_rate)
                    for policy in cfg.policies:
                        scfg = SceneConfig(
                            n_sources=n, duration=cfg.duration, alpha=cfg.alpha, seed=scene_seed,
                            classes=tuple(pool.labels), policy=policy,
                        )
                        jobs_args.append((scfg, sources, renderer, frontend, bank, models, cfg.clustering))
                        keys.append({"fold": fold, "scenario": n, "scene": s, "policy": policy,
                                     "seed": scene_seed,
                                     "sources": [[src.label, float(np.rad2deg(src.azimuth))] for src in sources]})
            results = executor.map(_scene_job, jobs_args) if executor else map(_scene_job, jobs_args)
            for key, res in zip(keys, results):
                rows.append({**key, **res})
                if progress is not None:
                    progress(len(rows))
    finally:
        if executor is not None:
            executor.shutdown()
    return build_report(cfg, bank, rows, pool)


def _summarize(rows) -> dict:
    rmse = [r["rmse_deg"] for r in rows if np.isfinite(r["rmse_deg"])]
    decisions = sum(r["decisions"] for r in rows)
    errors = sum(r["errors"] for r in rows)
    return {
        "rmse_deg": float(np.mean(rmse)) if rmse else float("nan"),
        "rmse_std_deg": float(np.std(rmse)) if rmse else float("nan"),
        "classification_error_pct": 100.0 * errors / decisions if decisions else float("nan"),
        "n_scenes": len(rows),
        "n_decisions": decisions,
    }


def build_report(cfg: EvalConfig, bank, rows, pool: SoundPool) -> dict:
    results = []
    for n in cfg.scenarios:
        for policy in cfg.policies:
            sel = [r for r in rows if r["scenario"] == n and r["policy"] == policy]
            entry = {"scenario": n, "policy": policy, **_summarize(sel)}
            entry["per_fold"] = [
                {"fold": f, **_summarize([r for r in sel if r["fold"] == f])} for f in range(cfg.folds)
            ]
            results.append(entry)
    cfg_dict = cfg.to_dict()
    return {
        "version": REPORT_VERSION,
        "config": cfg_dict,
        "config_hash": config_hash(cfg_dict),
        "bank_hash": bank.meta.get("config_hash"),
        "sound_pool": pool.source,
        "classes": pool.labels,
        "results": results,
        "scenes": rows,
    }


def write_report(report: dict, out_dir) -> tuple[Path, Path]:
    """Write ``report.json`` and a ``summary.csv`` laid out like the results table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    with open(json_path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    csv_path = out / "summary.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "head_rotation", "localization_error_deg", "classification_error_pct"])
        for r in report["results"]:
            w.writerow([
                f"{r['scenario']} sources", r["policy"],
                f"{r['rmse_deg']:.2f}", f"{r['classification_error_pct']:.2f}",
            ])
    return json_path, csv_path


def format_table(report: dict) -> str:
    lines = [f"{'sources':>7}  {'rotation':<9} {'loc. error (deg)':>17} {'class. error (%)':>17}"]
    for r in report["results"]:
        lines.append(
            f"{r['scenario']:>7}  {r['policy']:<9} {r['rmse_deg']:>17.2f} {r['classification_error_pct']:>17.2f}"
        )
    return "\n".join(lines)
