"""Out-of-process environment bridge speaking line-delimited JSON."""

__version__ = "0.1.0"

from .envs import BUILTIN, UnknownEnvironment, resolve
from .server import BridgeServer, BridgeSession, serve, serve_stdio, serve_streams

__all__ = ["BUILTIN", "BridgeServer", "BridgeSession", "UnknownEnvironment",
           "resolve", "serve", "serve_stdio", "serve_streams"]
