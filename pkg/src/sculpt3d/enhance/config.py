"""Enhancement settings loaded from JSON records.

A record fixes the step count, injection windows, layer subsets, and the
noise schedule in one strict-field document so runs are reproducible from a
single file::

    {
      "T": 50,
      "tau_f": 0.2,
      "tau_A": 0.5,
      "refiner_fraction": 0.1,
      "feature_layers": ["down0"],
      "attention_layers": ["down0", "down1", "mid"],
      "schedule": {"kind": "linear", "beta_start": 0.001, "beta_end": 0.1}
    }

Unknown or missing fields are rejected rather than ignored: a typo'd window
fraction silently falling back to a default would change every step of the
run.
"""

from __future__ import annotations

import json
from pathlib import Path

from .engine import InjectionConfig
from .schedule import make_linear_beta_schedule

_TOP_FIELDS = frozenset(
    {
        "T",
        "tau_f",
        "tau_A",
        "refiner_fraction",
        "feature_layers",
        "attention_layers",
        "schedule",
    }
)
_SCHEDULE_FIELDS = frozenset({"kind", "beta_start", "beta_end"})


def _check_fields(record, expected, where):
    unknown = sorted(set(record) - expected)
    if unknown:
        raise ValueError(f"unknown {where} fields: {unknown}")
    missing = sorted(expected - set(record))
    if missing:
        raise ValueError(f"missing {where} fields: {missing}")


def parse_enhancement_config(record):
    """Build ``(InjectionConfig, DiffusionSchedule)`` from a parsed record."""
    if not isinstance(record, dict):
        raise ValueError(f"config must be a mapping, got {type(record).__name__}")
    _check_fields(record, _TOP_FIELDS, "config")
    sched_rec = record["schedule"]
    if not isinstance(sched_rec, dict):
        raise ValueError("schedule must be a mapping")
    _check_fields(sched_rec, _SCHEDULE_FIELDS, "schedule")
    if sched_rec["kind"] != "linear":
        raise ValueError(f"unsupported schedule kind: {sched_rec['kind']!r}")
    n_steps = record["T"]
    if not isinstance(n_steps, int) or isinstance(n_steps, bool) or n_steps < 1:
        raise ValueError(f"T must be a positive integer, got {n_steps!r}")
    schedule = make_linear_beta_schedule(
        n_steps, float(sched_rec["beta_start"]), float(sched_rec["beta_end"])
    )
    config = InjectionConfig(
        tau_f=record["tau_f"],
        tau_A=record["tau_A"],
        feature_layers=record["feature_layers"],
        attention_layers=record["attention_layers"],
        refiner_fraction=record["refiner_fraction"],
    )
    return config, schedule


def load_enhancement_config(path):
    """Read a JSON settings file; see :func:`parse_enhancement_config`."""
    return parse_enhancement_config(json.loads(Path(path).read_text()))
