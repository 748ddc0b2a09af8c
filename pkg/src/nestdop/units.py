"""Physical-unit layer: axial velocity <-> normalized Doppler frequency.

All core modules work in normalized frequency (cycles per PRI). Configs
may specify velocities together with transducer parameters; conversion
happens once at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalParams:
    f0_hz: float  # transducer center frequency
    fprf_hz: float  # pulse repetition frequency
    c_m_s: float = 1540.0  # speed of sound

    def __post_init__(self):
        if self.f0_hz <= 0 or self.fprf_hz <= 0 or self.c_m_s <= 0:
            raise ValueError("physical parameters must be positive")

    def doppler_frequency(self, velocity_m_s: float) -> float:
        """Doppler shift in Hz for an axial velocity (positive = away)."""
        return -2.0 * velocity_m_s * self.f0_hz / self.c_m_s

    def normalized_frequency(self, velocity_m_s: float) -> float:
        return self.doppler_frequency(velocity_m_s) / self.fprf_hz

    def velocity(self, nu: float) -> float:
        """Axial velocity in m/s for a normalized frequency."""
        return -nu * self.fprf_hz * self.c_m_s / (2.0 * self.f0_hz)
