"""Closed-loop scene simulation: render, localize, segregate, classify, rotate."""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .circular import wrap
from .classifier import classify_block, stream_features
from .errors import ConfigError, EmptyObservationsError
from .frontend import AuditoryFrontend
from .localization import stack_block
from .render import render_block
from .synth import CLASSES
from .metrics import match_streams
from .vonmises import circular_kmeans, em_fit, min_kappa_component, soft_masks

POLICIES = ("none", "random", "feedback")
PREROLL_FRAMES = 5


@dataclass(frozen=True)
class ClusteringConfig:
    tol: float = 1e-6
    max_iter: int = 100
    restarts: int = 5
    warm_start: bool = False


@dataclass(frozen=True)
class SceneConfig:
    n_sources: int = 2
    slots_deg: tuple = (30.0, 70.0, 110.0, 150.0)
    duration: float = 3.0
    look_direction_deg: float = 90.0
    limits_deg: tuple = (10.0, 170.0)
    policy: str = "none"
    alpha: float = 5.0
    seed: int = 0
    classes: tuple = CLASSES

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        if not 1 <= self.n_sources <= len(self.slots_deg):
            raise ConfigError(f"n_sources must be between 1 and {len(self.slots_deg)}")
        if self.n_sources > len(self.classes):
            raise ConfigError("not enough sound classes for distinct sources")
        if len(set(self.slots_deg)) != len(self.slots_deg):
            raise ConfigError("source slots must be distinct")
        lo, hi = self.limits_deg
        if not lo <= self.look_direction_deg <= hi:
            raise ConfigError("initial look direction must lie within the rotation limits")

    @property
    def limits(self) -> tuple[float, float]:
        return float(np.deg2rad(self.limits_deg[0])), float(np.deg2rad(self.limits_deg[1]))

    def n_blocks(self, block_duration: float) -> int:
        nb = self.duration / block_duration
        if abs(nb - round(nb)) > 1e-9 or round(nb) < 1:
            raise ConfigError("scene duration must be a whole number of blocks")
        return int(round(nb))


_TUPLE_KEYS = {"slots_deg", "limits_deg", "classes"}


def load_scene_config(path, **overrides) -> SceneConfig:
    """Read ``key = value`` lines (``#`` comments) into a SceneConfig.

    Tuple-valued keys take comma-separated lists. Non-None ``overrides``
    win over file values.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        parser.read_string("[scene]\n" + fh.read())
    known = {f.name: f for f in fields(SceneConfig)}
    values = {}
    for key, raw in parser["scene"].items():
        if key not in known:
            raise ConfigError(f"unknown scene key {key!r}")
        default = known[key].default
        if key in _TUPLE_KEYS:
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            values[key] = tuple(parts if key == "classes" else (float(p) for p in parts))
        elif isinstance(default, bool):
            values[key] = parser["scene"].getboolean(key)
        else:
            values[key] = type(default)(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SceneConfig(**values)


@dataclass
class Source:
    label: str
    azimuth: float
    signal: np.ndarray = field(repr=False)


def compose_scene(cfg: SceneConfig, sounds: dict, fs: float = 44100.0) -> list[Source]:
    """Pick distinct slots and distinct classes, then a random sound of each class."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 11]))
    n = int(round(cfg.duration * fs))
    labels = [c for c in cfg.classes if sounds.get(c)]
    if len(labels) < cfg.n_sources:
        raise ConfigError(f"need {cfg.n_sources} classes with sounds, have {len(labels)}")
    slots = rng.choice(len(cfg.slots_deg), cfg.n_sources, replace=False)
    chosen = rng.choice(len(labels), cfg.n_sources, replace=False)
    sources = []
    for slot, ci in zip(slots, chosen):
        label = labels[ci]
        pool = sounds[label]
        sig = np.asarray(pool[rng.integers(len(pool))], dtype=np.float64)
        if sig.size < n:
            sig = np.tile(sig, int(np.ceil(n / sig.size)))
        start = int(rng.integers(0, sig.size - n + 1))
        sources.append(Source(label, float(np.deg2rad(cfg.slots_deg[slot])), sig[start : start + n]))
    return sources


def clamp(psi: float, limits) -> float:
    return float(min(max(psi, limits[0]), limits[1]))


def random_rotation(psi_prev: float, rng, limits) -> float:
    return clamp(psi_prev + np.pi / 180.0 * rng.standard_normal(), limits)


def feedback_rotation(psi_prev: float, mix, alpha: float, limits) -> float:
    """Turn towards the least concentrated component's mean by gain ``alpha``."""
    target = mix.means[min_kappa_component(mix)]
    return clamp(psi_prev + alpha * wrap(target - psi_prev), limits)


@dataclass
class ListenerState:
    psi: float
    policy: str
    alpha: float
    limits: tuple
    rng: np.random.Generator = field(repr=False, default=None)

    def update(self, mix) -> float:
        if self.policy == "random":
            self.psi = random_rotation(self.psi, self.rng, self.limits)
        elif self.policy == "feedback" and mix is not None:
            self.psi = feedback_rotation(self.psi, mix, self.alpha, self.limits)
        return self.psi


def run_scene(
    cfg: SceneConfig,
    sources: list[Source],
    renderer,
    frontend: AuditoryFrontend,
    bank,
    models,
    clustering: ClusteringConfig = ClusteringConfig(),
    keep_audio: bool = False,
) -> list[dict]:
    """Simulate one scene block by block and return per-block records.

    Head orientation is constant within a block; the policy picks the next
    block's orientation from the block just processed.
    """
    fcfg = frontend.cfg
    n_blocks = cfg.n_blocks(fcfg.block_duration)
    B = fcfg.block_samples
    P = PREROLL_FRAMES * fcfg.frame_samples
    truths = np.array([s.azimuth for s in sources])
    true_labels = [s.label for s in sources]
    C = len(sources)
    listener = ListenerState(
        float(np.deg2rad(cfg.look_direction_deg)), cfg.policy, cfg.alpha, cfg.limits,
        np.random.default_rng(np.random.SeedSequence([cfg.seed, 23])),
    )
    records = []
    prev_mix = None
    audio = []
    for b in range(n_blocks):
        psi = listener.psi
        start = b * B - P
        segs = []
        for s in sources:
            seg = s.signal[max(start, 0) : (b + 1) * B]
            if start < 0:
                seg = np.concatenate([np.zeros(-start), seg])
            segs.append((seg, s.azimuth))
        left, right = render_block(renderer, segs, psi)
        if keep_audio:
            audio.append((left[P:], right[P:]))
        cues = frontend.analyze(left, right, P)
        block = frontend.make_block(cues, slice(0, fcfg.block_frames), psi)
        rec = {
            "block": b,
            "psi_deg": float(np.rad2deg(psi)),
            "true_azimuths_deg": [float(np.rad2deg(a)) for a in truths],
            "true_labels": true_labels,
        }
        try:
            obs = stack_block(block, bank)
            if len(obs) < C:
                raise EmptyObservationsError("fewer observations than sources")
        except EmptyObservationsError:
            rec.update(skipped=True, n_obs=int(block.valid.sum()))
            records.append(rec)
            listener.update(None)
            continue
        init = prev_mix if (clustering.warm_start and prev_mix is not None) else None
        seed = np.random.SeedSequence([cfg.seed, 31, b])
        if init is None:
            init = circular_kmeans(obs.angles, C, seed=seed, restarts=clustering.restarts)
        mix = em_fit(obs.angles, C, init=init, tol=clustering.tol, max_iter=clustering.max_iter)
        masks = soft_masks(obs, mix)
        streams = stream_features(block.ratemap, masks.beta, block.center_freqs)
        perm = match_streams(mix.means, truths)
        errors = wrap(mix.means - truths[list(perm)])
        decisions = []
        for c, (feats, skip) in enumerate(streams):
            d = classify_block(feats, skip, models)
            decisions.append({
                "stream": c,
                "label": d.label,
                "truth": true_labels[perm[c]],
                "posterior": [float(p) for p in d.posterior],
            })
        rec.update(
            skipped=False,
            n_obs=len(obs),
            mixture=mix.to_record(),
            assignment=list(perm),
            errors_deg=[float(np.rad2deg(e)) for e in errors],
            decisions=decisions,
        )
        records.append(rec)
        prev_mix = mix
        listener.update(mix)
    if keep_audio:
        return records, audio
    return records


def scene_metrics(records) -> dict:
    """Pooled squared error and decision counts for one scene."""
    sq = []
    n_dec = 0
    n_wrong = 0
    for rec in records:
        n_src = len(rec["true_labels"])
        if rec["skipped"]:
            n_dec += n_src
            n_wrong += n_src
            continue
        sq.extend(np.square(rec["errors_deg"]).tolist())
        for d in rec["decisions"]:
            n_dec += 1
            n_wrong += int(d["label"] is None or d["label"] != d["truth"])
    rmse = float(np.sqrt(np.mean(sq))) if sq else float("nan")
    return {"rmse_deg": rmse, "decisions": n_dec, "errors": n_wrong}


def write_records(records, path) -> None:
    with open(path, "a") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def with_policy(cfg: SceneConfig, policy: str) -> SceneConfig:
    return replace(cfg, policy=policy)
