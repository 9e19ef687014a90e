"""Noise schedules and the deterministic (eta = 0) DDIM recurrences.

The denoising step and the inversion both pivot on the predicted clean
latent: with a_t the cumulative signal fraction at step t,

    x0_hat = (x_t - sqrt(1 - a_t) * eps) / sqrt(a_t)
    x_s    = sqrt(a_s) * x0_hat + sqrt(1 - a_s) * eps

moving to s = t - 1 (denoise) or s = t + 1 (inversion, with eps evaluated at
x_t, which is what makes inversion only approximately the inverse).
"""

from __future__ import annotations

import numpy as np


class EnhancementError(RuntimeError):
    """Predictor or shape failure inside a stepped loop; names the step."""

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


class DiffusionSchedule:
    """Cumulative signal fractions a_0..a_T with a_0 = 1, strictly decreasing.

    ``n_steps`` is T; index t of ``alpha_bar`` is the fraction remaining
    after t noising steps.
    """

    __slots__ = ("alpha_bar",)

    def __init__(self, alpha_bar):
        alpha_bar = np.asarray(alpha_bar, dtype=np.float64)
        if alpha_bar.ndim != 1 or alpha_bar.size < 2:
            raise ValueError("alpha_bar must be a 1-d sequence of length >= 2")
        if alpha_bar[0] != 1.0:
            raise ValueError(f"alpha_bar[0] must be 1, got {alpha_bar[0]}")
        if not np.isfinite(alpha_bar).all() or alpha_bar[-1] <= 0.0:
            raise ValueError("alpha_bar entries must be finite and positive")
        if not (np.diff(alpha_bar) < 0.0).all():
            raise ValueError("alpha_bar must be strictly decreasing")
        alpha_bar = alpha_bar.copy()
        alpha_bar.setflags(write=False)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    def __setattr__(self, name, value):
        raise AttributeError("DiffusionSchedule is immutable")

    @property
    def n_steps(self):
        return len(self.alpha_bar) - 1

    def __repr__(self):
        return (f"DiffusionSchedule(T={self.n_steps}, "
                f"alpha_bar_T={self.alpha_bar[-1]:.3g})")


def make_linear_beta_schedule(n_steps, beta_start, beta_end) -> DiffusionSchedule:
    """Linearly spaced per-step noise rates, accumulated into the schedule."""
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    beta_start, beta_end = float(beta_start), float(beta_end)
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(
            f"betas must satisfy 0 < start <= end < 1, got [{beta_start}, {beta_end}]"
        )
    betas = np.linspace(beta_start, beta_end, n_steps)
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    return DiffusionSchedule(alpha_bar)


def _check_step(t, schedule):
    t = int(t)
    if not 1 <= t <= schedule.n_steps:
        raise ValueError(f"step must be in [1, {schedule.n_steps}], got {t}")
    return t


def ddim_denoise_step(x_t, epsilon, t, schedule):
    """One deterministic denoise step t -> t-1 in latent space."""
    t = _check_step(t, schedule)
    x_t = np.asarray(x_t, dtype=np.float64)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    a_t = schedule.alpha_bar[t]
    a_prev = schedule.alpha_bar[t - 1]
    x0_hat = (x_t - np.sqrt(1.0 - a_t) * epsilon) / np.sqrt(a_t)
    return np.sqrt(a_prev) * x0_hat + np.sqrt(1.0 - a_prev) * epsilon


def signal_rate(schedule, t):
    """sqrt(alpha_bar_t): latent scale factor at step t."""
    return np.sqrt(schedule.alpha_bar[t])


def noise_sigma(schedule, t):
    """sqrt(1 - alpha_bar_t) / sqrt(alpha_bar_t): noise scale in the
    signal-normalized frame (exactly 0 at t = 0)."""
    a = schedule.alpha_bar[t]
    return np.sqrt(1.0 - a) / np.sqrt(a)


def invert_normalized(y0, predictor, conditioning, schedule):
    """DDIM inversion carried in the signal-normalized frame.

    With y_t = x_t / sqrt(alpha_bar_t) the recurrence collapses to
    ``y_{t+1} = y_t + (sigma_{t+1} - sigma_t) * eps``, so a predictor that
    returns zeros leaves the trajectory bit-identical to y_0 — the property
    the enhancement engine's round-trip guarantee rests on. Returns the
    (T+1, ...) y trajectory; callers rescale by sqrt(alpha_bar_t) for
    latent-space values.
    """
    n = schedule.n_steps
    traj = np.empty((n + 1,) + y0.shape, dtype=np.float64)
    traj[0] = y0
    for t in range(n):
        x_t = traj[t] * signal_rate(schedule, t)
        try:
            out = predictor.evaluate(x_t, conditioning, t, None)
        except Exception as exc:  # noqa: BLE001 - contract: name the step
            raise EnhancementError(t, exc) from exc
        eps = np.asarray(out.epsilon, dtype=np.float64)
        if eps.shape != y0.shape:
            raise EnhancementError(
                t, f"epsilon shape {eps.shape} does not match latent {y0.shape}"
            )
        ds = noise_sigma(schedule, t + 1) - noise_sigma(schedule, t)
        traj[t + 1] = traj[t] + ds * eps
    return traj


def ddim_invert(x0, predictor, conditioning, schedule):
    """Invert a clean latent into its noise trajectory x_0..x_T."""
    x0 = np.asarray(x0, dtype=np.float64)
    if not np.isfinite(x0).all():
        raise ValueError("latent contains non-finite values")
    # alpha_bar_0 = 1 so the normalized frame starts bit-equal to x0
    y = invert_normalized(x0, predictor, conditioning, schedule)
    rates = np.array([signal_rate(schedule, t) for t in range(schedule.n_steps + 1)])
    return y * rates.reshape((-1,) + (1,) * x0.ndim)
