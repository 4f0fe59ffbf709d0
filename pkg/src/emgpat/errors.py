"""Exception types shared across the toolkit."""


class EmgPatError(Exception):
    """Base class for toolkit errors."""


class BundleError(EmgPatError):
    """Malformed, inconsistent or unreadable bundle data."""


class ConfigError(EmgPatError):
    """Invalid pipeline configuration or CLI arguments."""


class PipelineError(EmgPatError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str, artifact: str | None = None):
        self.stage = stage
        self.artifact = artifact
        detail = f"stage '{stage}': {message}"
        if artifact:
            detail += f" (artifact: {artifact})"
        super().__init__(detail)
