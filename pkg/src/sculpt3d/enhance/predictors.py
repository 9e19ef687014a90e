"""Deterministic mock noise predictors.

A predictor maps (latent, conditioning, step, overrides) to a noise estimate
plus named intermediate tensors: per-layer feature maps and self-attention
maps. Overrides are keyed ``"f:<layer>"`` / ``"A:<layer>"``; honoring one
means the returned noise estimate is computed from the substituted tensor
instead of the layer's own. Real text-to-image backbones plug in behind this
same interface; the mocks here exist so the scheduling engine is testable
bit-for-bit.
"""

from __future__ import annotations

import zlib
from types import SimpleNamespace
from typing import NamedTuple

import numpy as np


class PredictorOutput(NamedTuple):
    epsilon: np.ndarray
    features: dict
    attentions: dict


def _conditioning_term(conditioning):
    """Deterministic scalar from the conditioning payload."""
    term = 0.0
    if conditioning:
        prompt = conditioning.get("prompt")
        if prompt is not None:
            term += (zlib.crc32(str(prompt).encode()) % 1000) / 1000.0 * 1e-3
        depth = conditioning.get("depth")
        if depth is not None:
            term += 1e-3 * float(np.mean(depth))
    return term


class ZeroPredictor:
    """Predicts zero noise; all declared layers emit zero tensors."""

    def __init__(self, layer_names=(), name="zero"):
        self.layer_names = tuple(layer_names)
        self.name = name

    def evaluate(self, latent, conditioning, t, overrides=None):
        zero = np.zeros_like(np.asarray(latent, dtype=np.float64))
        return PredictorOutput(
            zero,
            {layer: zero for layer in self.layer_names},
            {layer: zero for layer in self.layer_names},
        )


class ScalingPredictor:
    """Linear predictor eps = rate * latent; conditioning-insensitive.

    Its closed-form per-step factors make drift through invert/denoise
    round trips computable by hand, which is what the oracle tests use.
    """

    def __init__(self, rate, name="scaling"):
        self.rate = float(rate)
        self.layer_names = ()
        self.name = name

    def evaluate(self, latent, conditioning, t, overrides=None):
        latent = np.asarray(latent, dtype=np.float64)
        return PredictorOutput(self.rate * latent, {}, {})


class StructuredPredictor:
    """Deterministic mock whose noise estimate depends on everything the
    engine is supposed to plumb through: the latent, the step, the
    conditioning, and any overridden layer tensors.

    Layer emissions are distinct affine images of the latent so that two
    different latents produce bitwise-distinct tensors, making injection
    observable in the output.
    """

    def __init__(self, layer_names, name="structured"):
        self.layer_names = tuple(layer_names)
        self.name = name

    def _own_tensors(self, latent, t):
        features = {}
        attentions = {}
        for i, layer in enumerate(self.layer_names):
            features[layer] = 0.1 * (i + 1) * latent + 0.01 * t
            attentions[layer] = 0.05 * (i + 1) * np.roll(latent, i + 1, axis=-1)
        return features, attentions

    def evaluate(self, latent, conditioning, t, overrides=None):
        latent = np.asarray(latent, dtype=np.float64)
        features, attentions = self._own_tensors(latent, t)
        overrides = overrides or {}
        drive = 0.0
        for i, layer in enumerate(self.layer_names):
            f = overrides.get(f"f:{layer}", features[layer])
            a = overrides.get(f"A:{layer}", attentions[layer])
            drive += 0.02 * (i + 1) * (float(np.mean(f)) + float(np.mean(a)))
        eps = 0.05 * latent + drive + _conditioning_term(conditioning)
        return PredictorOutput(eps, features, attentions)


class RecordingPredictor:
    """Wraps a predictor and records every call in order.

    Each record keeps the latent, step, conditioning, the overrides object
    as received, and the delegate's output, so tests can check the engine's
    plumbing tensor-for-tensor.
    """

    def __init__(self, inner):
        self.inner = inner
        self.calls = []

    @property
    def layer_names(self):
        return self.inner.layer_names

    @property
    def name(self):
        return self.inner.name

    def evaluate(self, latent, conditioning, t, overrides=None):
        out = self.inner.evaluate(latent, conditioning, t, overrides)
        self.calls.append(
            SimpleNamespace(
                latent=np.array(latent, copy=True),
                conditioning=conditioning,
                t=t,
                overrides=overrides,
                output=out,
            )
        )
        return out
