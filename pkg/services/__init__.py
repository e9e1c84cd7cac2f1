"""Service layer driven by the command-line entry point."""
from .pipeline_service import PipelineService
from .run_config import RunConfig, load_run_config, parse_run_config

__all__ = ["PipelineService", "RunConfig", "load_run_config", "parse_run_config"]
