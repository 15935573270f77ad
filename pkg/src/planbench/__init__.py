"""planbench: a benchmark harness for local (reactive) motion planners."""

__version__ = "0.1.0"

from importlib import resources as _resources
from pathlib import Path as _Path


def bundled_config(name: str) -> _Path:
    """Path of a configuration file shipped with the package, e.g. ``"pm2d.yaml"``."""
    return _Path(str(_resources.files(__name__) / "configs" / name))
