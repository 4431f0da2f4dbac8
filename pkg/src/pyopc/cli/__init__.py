# src/pyopc/cli/__init__.py
from .config import RunConfig, config_from_dict, load_config, parse_config
from .main import build_parser, main
from .pipeline import Pipeline, RunResult, run_command
from .store import DirectoryResultStore, InMemoryResultStore, ResultStore, render_json, render_table

__all__ = [
    "RunConfig",
    "parse_config",
    "load_config",
    "config_from_dict",
    "ResultStore",
    "InMemoryResultStore",
    "DirectoryResultStore",
    "render_table",
    "render_json",
    "Pipeline",
    "RunResult",
    "run_command",
    "build_parser",
    "main",
]
