"""Experiment runner: configuration schema, figure presets, result files and the ``probe`` CLI.

Heavy numerical modules load on first use so the CLI can set thread limits
before numpy starts.
"""
from .config import SCHEMA, ConfigError, resolve
from .presets import get_preset, list_presets, preset_names

__all__ = ["SCHEMA", "ConfigError", "ResultBundle", "PipelineError", "get_preset", "list_presets",
           "preset_names", "resolve", "run", "validate"]


def __getattr__(name):
    if name in ("run", "validate", "ResultBundle", "PipelineError"):
        from . import runner
        return getattr(runner, name)
    raise AttributeError(name)
