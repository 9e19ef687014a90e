"""Joint coarse/refined denoising with scheduled tensor injection.

The engine inverts the coarse latent, copies its endpoint as the refined
starting point, and walks the steps back down. At every step the coarse
latent is re-evaluated to extract its per-layer feature and attention
tensors; while the step count is inside the configured injection windows
those tensors override the refined path's own, steering it toward the coarse
structure. An optional background blend pins masked latent regions to a
precomputed background trajectory each step. A second predictor can take
over the final fraction of steps.

All latents are carried in the signal-normalized frame internally (see
``schedule.invert_normalized``), which is what makes the zero-predictor
round trip return the input bit-for-bit. Predictors always receive
latent-space tensors.

Injection windows count down from T: a fraction tau covers the first
``tau * T`` denoising steps (strictly, t > (1 - tau) * T), and the refiner
covers the last ``refiner_fraction * T`` (t <= that bound, inclusive).
Boundaries are evaluated with a small epsilon so fractions that land exactly
on an integer step are honored despite float rounding.
"""

from __future__ import annotations

import json
import math
from typing import NamedTuple

import numpy as np

from .schedule import EnhancementError, invert_normalized, noise_sigma, signal_rate

_BOUNDARY_EPS = 1e-9


class InjectionConfig:
    """Injection windows and layer subsets for the joint denoising loop."""

    __slots__ = (
        "tau_f",
        "tau_A",
        "feature_layers",
        "attention_layers",
        "refiner_fraction",
    )

    def __init__(self, tau_f, tau_A, feature_layers, attention_layers,
                 refiner_fraction=0.0):
        for name, value in (
            ("tau_f", tau_f),
            ("tau_A", tau_A),
            ("refiner_fraction", refiner_fraction),
        ):
            value = float(value)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "feature_layers", tuple(sorted(set(feature_layers))))
        object.__setattr__(
            self, "attention_layers", tuple(sorted(set(attention_layers)))
        )

    def __setattr__(self, name, value):
        raise AttributeError("InjectionConfig is immutable")

    def __repr__(self):
        return (
            f"InjectionConfig(tau_f={self.tau_f}, tau_A={self.tau_A}, "
            f"refiner_fraction={self.refiner_fraction}, "
            f"{len(self.feature_layers)} feature / "
            f"{len(self.attention_layers)} attention layers)"
        )


class BlendMask:
    """Boolean background mask plus the background latent trajectory."""

    __slots__ = ("mask", "trajectory")

    def __init__(self, mask, trajectory):
        mask = np.asarray(mask)
        if not (((mask == 0) | (mask == 1)).all()):
            raise ValueError("mask entries must be 0 or 1")
        mask = mask.astype(bool, copy=True)
        mask.setflags(write=False)
        trajectory = np.asarray(trajectory, dtype=np.float64)
        if trajectory.ndim < 1 or len(trajectory) < 1:
            raise ValueError("trajectory must hold at least one latent")
        trajectory = trajectory.copy()
        trajectory.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "trajectory", trajectory)

    def __setattr__(self, name, value):
        raise AttributeError("BlendMask is immutable")


class AuditRecord(NamedTuple):
    step: int
    predictor: str
    features: tuple
    attentions: tuple

    @property
    def overridden_layers(self):
        return tuple(f"f:{n}" for n in self.features) + tuple(
            f"A:{n}" for n in self.attentions
        )

    def to_record(self):
        return {
            "step": self.step,
            "predictor": self.predictor,
            "overridden_layers": list(self.overridden_layers),
        }


def audit_to_jsonl(records) -> str:
    """Serialize audit records to the newline-delimited wire format."""
    return "\n".join(json.dumps(r.to_record()) for r in records) + "\n"


def blend_latents(latent, mask, background):
    """Pin mask-on regions of a latent to the background latent."""
    mask = np.asarray(mask).astype(bool)
    keep = mask.reshape(mask.shape + (1,) * (latent.ndim - mask.ndim))
    return np.where(keep, background, latent)


def _inject_floor(tau, n_steps):
    """Largest step NOT injected under 'inject iff t > (1 - tau) * T'."""
    return math.floor((1.0 - tau) * n_steps + _BOUNDARY_EPS)


def _refiner_ceiling(fraction, n_steps):
    """Largest step the refiner handles under 't <= fraction * T'."""
    return math.floor(fraction * n_steps + _BOUNDARY_EPS)


def _predictor_name(predictor):
    return getattr(predictor, "name", type(predictor).__name__)


def run_enhancement(
    coarse,
    conditioning_inv,
    conditioning_fwd,
    predictor,
    refiner_predictor,
    config,
    schedule,
    blend=None,
):
    """Invert the coarse latent, then jointly denoise with injection.

    Returns ``(final_latent, audit)`` where ``audit`` is a list of
    :class:`AuditRecord`, one per step from T down to 1 plus a terminal
    record for the identity decode stage.
    """
    coarse = np.asarray(coarse, dtype=np.float64)
    if coarse.ndim != 3:
        raise ValueError(f"latent must have shape (h, w, c), got {coarse.shape}")
    if not np.isfinite(coarse).all():
        raise ValueError("latent contains non-finite values")

    n = schedule.n_steps
    feat_floor = _inject_floor(config.tau_f, n)
    att_floor = _inject_floor(config.tau_A, n)
    refine_until = _refiner_ceiling(config.refiner_fraction, n)

    declared = set(predictor.layer_names)
    needed = []
    if feat_floor < n:  # the window holds at least one step
        needed += config.feature_layers
    if att_floor < n:
        needed += config.attention_layers
    missing = sorted({name for name in needed if name not in declared})
    if missing:
        raise ValueError(f"layers not declared by the predictor: {missing}")
    if refiner_predictor is not None:
        if set(refiner_predictor.layer_names) != declared:
            raise ValueError("predictors must declare the same layer names")
    elif refine_until > 0:
        raise ValueError("refiner_fraction > 0 requires a refiner predictor")

    if blend is not None:
        if len(blend.trajectory) != n + 1:
            raise ValueError(
                f"blend trajectory must hold {n + 1} latents, "
                f"got {len(blend.trajectory)}"
            )
        if blend.trajectory.shape[1:] != coarse.shape:
            raise ValueError(
                f"blend trajectory latent shape {blend.trajectory.shape[1:]} "
                f"does not match {coarse.shape}"
            )
        if blend.mask.shape != coarse.shape[:2]:
            raise ValueError(
                f"blend mask shape {blend.mask.shape} does not match latent "
                f"grid {coarse.shape[:2]}"
            )

    # coarse trajectory in the signal-normalized frame; never written again
    y_coarse = invert_normalized(coarse, predictor, conditioning_inv, schedule)
    y_coarse.setflags(write=False)

    y = y_coarse[n]
    audit = []
    for t in range(n, 0, -1):
        active = refiner_predictor if t <= refine_until else predictor
        rate_t = signal_rate(schedule, t)

        try:
            coarse_out = active.evaluate(
                y_coarse[t] * rate_t, conditioning_inv, t, None
            )
        except Exception as exc:  # noqa: BLE001 - contract: name the step
            raise EnhancementError(t, exc) from exc

        inject_f = config.feature_layers if t > feat_floor else ()
        inject_a = config.attention_layers if t > att_floor else ()
        overrides = {f"f:{name}": coarse_out.features[name] for name in inject_f}
        overrides.update(
            {f"A:{name}": coarse_out.attentions[name] for name in inject_a}
        )

        try:
            refined_out = active.evaluate(y * rate_t, conditioning_fwd, t, overrides)
        except Exception as exc:  # noqa: BLE001
            raise EnhancementError(t, exc) from exc
        eps = np.asarray(refined_out.epsilon, dtype=np.float64)
        if eps.shape != coarse.shape:
            raise EnhancementError(
                t, f"epsilon shape {eps.shape} does not match latent {coarse.shape}"
            )

        y = y + (noise_sigma(schedule, t - 1) - noise_sigma(schedule, t)) * eps
        if blend is not None:
            bg = blend.trajectory[t - 1] / signal_rate(schedule, t - 1)
            y = blend_latents(y, blend.mask, bg)

        audit.append(AuditRecord(t, _predictor_name(active), inject_f, inject_a))

    audit.append(AuditRecord(0, "identity-decoder", (), ()))
    # signal_rate(0) is exactly 1: the return is bit-identical to y_0
    return y * signal_rate(schedule, 0), audit
