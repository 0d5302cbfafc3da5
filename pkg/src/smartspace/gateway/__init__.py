"""Process entry point: wiring, HTTP/WS API, REPL and scenario harness."""

from .runtime import DEFAULT_REGISTRY, Runtime, RuntimeConfig

__all__ = ["DEFAULT_REGISTRY", "Runtime", "RuntimeConfig"]
