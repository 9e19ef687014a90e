"""Generative latent enhancement: DDIM schedules, injection, audit."""

from .config import load_enhancement_config, parse_enhancement_config
from .engine import (
    AuditRecord,
    BlendMask,
    InjectionConfig,
    audit_to_jsonl,
    blend_latents,
    run_enhancement,
)
from .predictors import (
    PredictorOutput,
    RecordingPredictor,
    ScalingPredictor,
    StructuredPredictor,
    ZeroPredictor,
)
from .schedule import (
    DiffusionSchedule,
    EnhancementError,
    ddim_denoise_step,
    ddim_invert,
    make_linear_beta_schedule,
)

__all__ = [
    "AuditRecord",
    "BlendMask",
    "DiffusionSchedule",
    "EnhancementError",
    "InjectionConfig",
    "PredictorOutput",
    "RecordingPredictor",
    "ScalingPredictor",
    "StructuredPredictor",
    "ZeroPredictor",
    "audit_to_jsonl",
    "blend_latents",
    "ddim_denoise_step",
    "ddim_invert",
    "load_enhancement_config",
    "make_linear_beta_schedule",
    "parse_enhancement_config",
    "run_enhancement",
]
