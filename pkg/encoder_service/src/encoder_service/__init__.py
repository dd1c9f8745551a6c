"""Reference HTTP encoder service speaking the vatkg wire contract."""

from .app import create_app
from .models import create_checkpoints
from .registry import ModelRegistry, RegistryConfig

__version__ = "0.1.0"

__all__ = ["ModelRegistry", "RegistryConfig", "create_app", "create_checkpoints"]
