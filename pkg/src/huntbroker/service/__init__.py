"""HTTP API, CLI, and CI gate runner binding the hunt pipeline together."""

from .app import ServiceConfig, build_app
from .auth import PRINCIPAL_ROLES, sign

__all__ = ["PRINCIPAL_ROLES", "ServiceConfig", "build_app", "sign"]
