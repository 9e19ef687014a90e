"""Depth-map fidelity: RMSE between depth images, with optional affine fit.

The comparison domain is the intersection of the two validity masks; pixels
covered in only one image never contribute. ``align="affine"`` first fits
scale and shift mapping the second map onto the first by least squares and
scores the residual — this compensates depth sources that are only defined
up to an affine transform (monocular estimators), and makes the score
invariant to relabeling the second map's units.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .render import DepthImage

__all__ = ["DepthPair", "DepthStats", "d_rmse", "depth_mask_stats"]


class DepthPair:
    """Two equally-sized depth images compared where both are valid."""

    __slots__ = ("a", "b", "domain")

    def __init__(self, a: DepthImage, b: DepthImage):
        if a.values.shape != b.values.shape:
            raise ValueError(
                f"dimension mismatch: {a.values.shape} vs {b.values.shape}"
            )
        domain = a.valid & b.valid
        domain.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "domain", domain)

    def __setattr__(self, name, value):
        raise AttributeError("DepthPair is immutable")

    def __repr__(self):
        return (
            f"DepthPair({self.a.values.shape[1]}x{self.a.values.shape[0]}, "
            f"{int(self.domain.sum())} shared px)"
        )


class DepthStats(NamedTuple):
    valid_fraction: float
    dmin: float
    dmax: float
    mean: float


def d_rmse(pair: DepthPair, align: str = "none") -> float:
    """Root-mean-square depth discrepancy over the shared validity domain."""
    if align not in ("none", "affine"):
        raise ValueError(f"align must be 'none' or 'affine', got {align!r}")
    if not pair.domain.any():
        raise ValueError("comparison domain is empty")
    av = pair.a.values[pair.domain]
    bv = pair.b.values[pair.domain]
    if align == "affine":
        a_mean, b_mean = np.mean(av), np.mean(bv)
        db = bv - b_mean
        var = np.mean(db * db)
        # constant reference: the scale term is unidentifiable, only the
        # shift survives (same residual as the least-norm solution)
        scale = np.mean((av - a_mean) * db) / var if var > 0.0 else 0.0
        resid = scale * bv + (a_mean - scale * b_mean) - av
    else:
        resid = av - bv
    return float(np.sqrt(np.mean(resid * resid)))


def depth_mask_stats(depth: DepthImage) -> DepthStats:
    """Coverage fraction and value range over the valid pixels."""
    n_valid = int(depth.valid.sum())
    fraction = n_valid / depth.valid.size
    if n_valid == 0:
        return DepthStats(0.0, float("nan"), float("nan"), float("nan"))
    vals = depth.values[depth.valid]
    return DepthStats(
        fraction, float(vals.min()), float(vals.max()), float(vals.mean())
    )
