"""HTTP service package."""

from .app import EngineState, ServiceSettings, create_app

__all__ = ["EngineState", "ServiceSettings", "create_app"]
