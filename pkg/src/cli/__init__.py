"""Configuration-driven runner: config schema, output files, task runners and the command line"""
from .config import Experiment, RunConfig, SuiteKind, TaskKind, load_config, parse_config
from .io import read_grid, report_render, sha256_file, write_grid
from .models import ErrorResponse, FileRecord, RunManifest
from .tasks import run

__all__ = [
    'Experiment', 'RunConfig', 'SuiteKind', 'TaskKind', 'load_config', 'parse_config',
    'read_grid', 'report_render', 'sha256_file', 'write_grid',
    'ErrorResponse', 'FileRecord', 'RunManifest', 'run',
]
