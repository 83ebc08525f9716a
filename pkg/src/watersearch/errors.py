"""Exception hierarchy shared across the toolkit."""


class WatersearchError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(WatersearchError):
    """A configuration value violates its documented domain."""


class InputError(WatersearchError):
    """Runtime input (text, vectors, ids) violates a precondition."""


class TrainingError(WatersearchError):
    """Model training received unusable data."""


class DomainError(WatersearchError):
    """A numeric kernel was called outside its mathematical domain."""
