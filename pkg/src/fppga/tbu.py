"""Tunable basic unit: a 3-dB Mach-Zehnder coupler with one phase shifter per arm.

Convention: two fixed 50:50 couplers ``(1/sqrt2)[[1, j], [j, 1]]`` around
the arm phases ``diag(exp(j theta_upper), exp(j theta_lower))``. Multiplying
out gives

    j exp(j mean) [[sin(diff/2),  cos(diff/2)],
                   [cos(diff/2), -sin(diff/2)]]

with ``mean`` the average and ``diff`` the difference of the arm phases.
``diff = 0`` is the cross state, ``diff = pi`` the bar state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

DEFAULT_LOSS_DB = 0.3
DEFAULT_LENGTH_M = 811e-6


@dataclass(frozen=True)
class TBUSettings:
    """Arm phases in radians plus insertion loss.

    ``insertion_loss_db=None`` defers to the simulator default, which lets
    presets be simulated both lossless and with the default loss.
    """

    theta_upper: float
    theta_lower: float
    insertion_loss_db: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.theta_upper) and math.isfinite(self.theta_lower)):
            raise ValueError("TBU phases must be finite")
        loss = self.insertion_loss_db
        if loss is not None and not (math.isfinite(loss) and loss >= 0):
            raise ValueError(f"insertion loss must be a finite value >= 0, got {loss!r}")

    @property
    def mean_phase(self) -> float:
        return 0.5 * (self.theta_upper + self.theta_lower)

    @property
    def phase_difference(self) -> float:
        return self.theta_upper - self.theta_lower

    def loss_db(self, default: float = 0.0) -> float:
        return default if self.insertion_loss_db is None else self.insertion_loss_db

    def shifted(self, common: float) -> "TBUSettings":
        """Same splitting with ``common`` radians added to both arms."""
        return TBUSettings(self.theta_upper + common, self.theta_lower + common, self.insertion_loss_db)


MODE_KINDS = ("bar", "cross", "tunable", "off")


@dataclass(frozen=True)
class TBUMode:
    kind: str
    settings: Optional[TBUSettings] = None

    def __post_init__(self):
        if self.kind not in MODE_KINDS:
            raise ValueError(f"unknown TBU mode {self.kind!r}")
        if (self.kind == "tunable") != (self.settings is not None):
            raise ValueError("only tunable modes carry settings")

    @classmethod
    def tunable(cls, settings: TBUSettings) -> "TBUMode":
        return cls("tunable", settings)

    @property
    def is_off(self) -> bool:
        return self.kind == "off"


BAR = TBUMode("bar")
CROSS = TBUMode("cross")
OFF = TBUMode("off")


def tbu_transfer(s: TBUSettings, default_loss_db: float = 0.0) -> np.ndarray:
    """2x2 field transfer of a TBU; rows are outputs, columns inputs."""
    half = 0.5 * s.phase_difference
    amp = 10.0 ** (-s.loss_db(default_loss_db) / 20.0)
    pre = amp * 1j * np.exp(1j * s.mean_phase)
    sn, cs = math.sin(half), math.cos(half)
    return pre * np.array([[sn, cs], [cs, -sn]], dtype=complex)


def settings_for_coupling(kappa: float, common_phase: float = 0.0,
                          loss_db: Optional[float] = None) -> TBUSettings:
    """Settings whose cross-port power fraction equals ``kappa``."""
    if not (0.0 <= kappa <= 1.0):
        raise ValueError(f"power coupling ratio must be in [0, 1], got {kappa!r}")
    diff = 2.0 * math.acos(math.sqrt(kappa))
    return TBUSettings(common_phase + diff / 2, common_phase - diff / 2, loss_db)


def mode_settings(mode: TBUMode, default_loss_db: Optional[float] = None) -> TBUSettings:
    if mode.kind == "bar":
        return settings_for_coupling(0.0, 0.0, default_loss_db)
    if mode.kind == "cross":
        return settings_for_coupling(1.0, 0.0, default_loss_db)
    if mode.kind == "tunable":
        return mode.settings
    raise ValueError("an 'off' TBU has no transfer settings")


def cross_power(s: TBUSettings) -> float:
    """Lossless power fraction sent to the cross port."""
    return math.cos(0.5 * s.phase_difference) ** 2
