"""Active binaural auditory scene analysis with head-rotation feedback."""
from .errors import ActiveCasaError, ConfigError, EmptyObservationsError, MissingArtifactError, TrainingError
from .frontend import AuditoryBlock, AuditoryFrontend, FrontendConfig
from .localization import GaussianAzimuthBank, train_bank
from .render import HrirRenderer, SphericalHeadRenderer
from .scene import SceneConfig, run_scene
from .vonmises import VonMisesMixture, em_fit

__version__ = "0.1.0"

__all__ = [
    "ActiveCasaError",
    "AuditoryBlock",
    "AuditoryFrontend",
    "ConfigError",
    "EmptyObservationsError",
    "FrontendConfig",
    "GaussianAzimuthBank",
    "HrirRenderer",
    "MissingArtifactError",
    "SceneConfig",
    "SphericalHeadRenderer",
    "TrainingError",
    "VonMisesMixture",
    "em_fit",
    "run_scene",
    "train_bank",
]
