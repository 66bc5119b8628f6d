"""Evaluation configuration.

All thresholds that drive scoring live here so a report can echo the exact
configuration it was produced with. Values can be overridden from a JSON file
whose keys mirror the dataclass fields.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass


@dataclass(frozen=True)
class EvalConfig:
    max_eval_size: int = 512          # longer image side at evaluation scale
    histogram_bins: int = 256
    gaussian_sigma: float = 2.0       # smoothness-residual filter width, px
    jacobian_mean_tol: float = 0.10   # |mean(J) - 1| tolerance
    jacobian_std_max: float = 0.25
    folding_max_fraction: float = 0.015
    epsilon: float = 1e-6             # slack for degenerate IQR comparisons
    tissue_is_dark: bool = True       # stained tissue on bright background
    min_component_fraction: float = 0.0005
    circular_direction: bool = False  # recenter angles on the circular mean

    def __post_init__(self):
        if self.max_eval_size < 32:
            raise ValueError("max_eval_size must be >= 32")
        if self.histogram_bins < 2:
            raise ValueError("histogram_bins must be >= 2")
        if self.gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be > 0")
        for name in ("jacobian_mean_tol", "jacobian_std_max",
                     "folding_max_fraction", "epsilon"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 0.0 <= self.min_component_fraction < 1.0:
            raise ValueError("min_component_fraction must be in [0, 1)")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EvalConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def load_config(path) -> EvalConfig:
    """Read an EvalConfig from a JSON file; absent keys keep their defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must contain a JSON object")
    return EvalConfig.from_dict(data)
