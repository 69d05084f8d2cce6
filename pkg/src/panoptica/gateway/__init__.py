"""HTTP service and command-line front end for the engine."""

from .service import GatewayState, create_app

__all__ = ["GatewayState", "create_app"]
