"""Frozen slack constants used by the verifiers (fitted once by fraclab.calibrate)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class LogBound:
    """log_coeff * log2(r) + const."""

    log_coeff: float
    const: float

    def __call__(self, r) -> float:
        return self.log_coeff * (math.log2(r) if r > 1 else 0.0) + self.const


@dataclass(frozen=True)
class Constants:
    version: str
    c_copy: int
    gamma: int
    C1: LogBound
    C2: LogBound
    c_sym: LogBound
    c_sym2: LogBound
    alpha: dict
    lz_subadditivity: float
    raw: dict

    def alpha_for(self, n: int) -> float:
        try:
            return float(self.alpha[str(n)])
        except KeyError:
            raise KeyError(f"no frozen alpha for dimension {n}") from None


def _bound(d) -> LogBound:
    return LogBound(float(d["log_coeff"]), float(d["const"]))


def constants_path() -> Path:
    return Path(str(resources.files("fraclab").joinpath("data/constants.json")))


def load_constants(path: Optional[str] = None) -> Constants:
    p = Path(path) if path else constants_path()
    raw = json.loads(p.read_text())
    return Constants(
        version=str(raw["version"]),
        c_copy=int(raw["c_copy"]),
        gamma=int(raw["gamma"]),
        C1=_bound(raw["C1"]),
        C2=_bound(raw["C2"]),
        c_sym=_bound(raw["c_sym"]),
        c_sym2=_bound(raw["c_sym2"]),
        alpha=dict(raw["alpha"]),
        lz_subadditivity=float(raw["lz_subadditivity"]),
        raw=raw,
    )
