"""Stereo and monocular cost-volume fusion with deterministic building blocks."""

from .errors import (DegenerateInputError, DomainError, FormatError, ParameterError, ShapeError,
                     StereoFuseError)
from .io import FloatMap, RunReport, read_float_map, read_mask, write_float_map, write_mask, write_report
from .pipeline import PipelineConfig, PipelineResult, StageError, run_pipeline
from .scaling import ScaleShift, solve_scale_shift

__all__ = [
    "DegenerateInputError", "DomainError", "FloatMap", "FormatError", "ParameterError",
    "PipelineConfig", "PipelineResult", "RunReport", "ScaleShift", "ShapeError", "StageError",
    "StereoFuseError", "read_float_map", "read_mask", "run_pipeline", "solve_scale_shift",
    "write_float_map", "write_mask", "write_report",
]
