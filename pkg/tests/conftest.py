import warnings
from pathlib import Path

import numpy as np
import pytest

from activecasa.classifier import train_source_models
from activecasa.frontend import AuditoryFrontend
from activecasa.harness import item_features
from activecasa.localization import GaussianAzimuthBank, train_bank
from activecasa.render import SphericalHeadRenderer
from activecasa.synth import synthetic_pool

# Bank used by the acceptance suite: full 1-degree grid, 1 s of noise per azimuth.
ACCEPTANCE_BANK_SECONDS = 1.0


@pytest.fixture(scope="session")
def frontend():
    return AuditoryFrontend()


@pytest.fixture(scope="session")
def renderer():
    return SphericalHeadRenderer()


def _cached_bank(request, name, **kw) -> GaussianAzimuthBank:
    cache_dir = Path(request.config.cache.mkdir("activecasa"))
    path = cache_dir / f"{name}.npz"
    if path.exists():
        try:
            return GaussianAzimuthBank.load(path)
        except (ValueError, OSError, KeyError):
            path.unlink()
    bank = train_bank(SphericalHeadRenderer(), AuditoryFrontend(), **kw)
    bank.save(path)
    return bank


@pytest.fixture(scope="session")
def small_bank(request):
    """Coarse 5-degree bank, cheap enough for unit tests."""
    return _cached_bank(request, "bank-72az-0.3s", n_azimuths=72, duration=0.3, seed=0)


@pytest.fixture(scope="session")
def full_bank(request):
    return _cached_bank(
        request, f"bank-360az-{ACCEPTANCE_BANK_SECONDS}s", n_azimuths=360,
        duration=ACCEPTANCE_BANK_SECONDS, seed=0,
    )


@pytest.fixture(scope="session")
def small_models(frontend):
    """Source models from a small synthetic pool (training floor lowered for speed)."""
    pool = synthetic_pool(items_per_class=3, duration=6.0, seed=100)
    feats = item_features(pool, frontend)
    train = {label: np.concatenate(items[:2]) for label, items in feats.items()}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        models = train_source_models(train, seed=0, min_frames=300)
    held_out = {label: pool.items[label][2] for label in pool.items}
    return models, held_out


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
