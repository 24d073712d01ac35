class ActiveCasaError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ActiveCasaError, ValueError):
    pass


class TrainingError(ActiveCasaError):
    pass


class EmptyObservationsError(ActiveCasaError):
    """A block has no valid time-frequency units to localize."""


class MissingArtifactError(ActiveCasaError):
    pass
