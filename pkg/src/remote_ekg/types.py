"""Core value types shared by every component of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

MS_PER_DAY = 86_400_000
ADC_MAX = 1023
N_CHANNELS = 6
SAMPLE_RATE_HZ = 250
SAMPLE_PERIOD_MS = 4


class InvalidSpec(ValueError):
    """Signal spec violates its documented field ranges."""


@dataclass(frozen=True)
class Timestamp:
    """Wall-clock time of day with millisecond resolution."""

    hours: int
    minutes: int
    seconds: int
    millis: int

    def __post_init__(self):
        if not (0 <= self.hours <= 23 and 0 <= self.minutes <= 59
                and 0 <= self.seconds <= 59 and 0 <= self.millis <= 999):
            raise ValueError(f"timestamp field out of range: {self!r}")

    @classmethod
    def from_ms(cls, t_ms: int) -> "Timestamp":
        t_ms %= MS_PER_DAY
        return cls(t_ms // 3_600_000, (t_ms // 60_000) % 60,
                   (t_ms // 1000) % 60, t_ms % 1000)

    def to_ms(self) -> int:
        return ((self.hours * 60 + self.minutes) * 60 + self.seconds) * 1000 + self.millis


@dataclass(frozen=True)
class Sample:
    """One 4 ms acquisition tick: timestamp plus six 10-bit ADC values."""

    ts: Timestamp
    channels: tuple[int, ...]

    def __post_init__(self):
        if len(self.channels) != N_CHANNELS:
            raise ValueError(f"expected {N_CHANNELS} channels, got {len(self.channels)}")
        for v in self.channels:
            if not (0 <= v <= ADC_MAX):
                raise ValueError(f"channel value {v} outside [0, {ADC_MAX}]")


@dataclass(frozen=True)
class EkgMessage:
    """Patient-to-relay wire unit: one timestamped channel value."""

    t_ms: int
    value: int

    def __post_init__(self):
        if not (0 <= self.t_ms < MS_PER_DAY):
            raise ValueError(f"t_ms {self.t_ms} outside [0, {MS_PER_DAY})")
        if not (0 <= self.value <= ADC_MAX):
            raise ValueError(f"value {self.value} outside [0, {ADC_MAX}]")


@dataclass(frozen=True)
class SignalSpec:
    """Parameters of the synthetic single-lead waveform."""

    heart_rate_bpm: float = 60.0
    amplitude_counts: int = 400
    baseline_counts: int = 512
    powerline_hz: float = 0.0
    powerline_amplitude_counts: float = 0.0
    noise_rms_counts: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (30.0 <= self.heart_rate_bpm <= 220.0):
            raise InvalidSpec(f"heart_rate_bpm {self.heart_rate_bpm} outside [30, 220]")
        if self.amplitude_counts > 511:
            raise InvalidSpec(f"amplitude_counts {self.amplitude_counts} > 511")
        if self.powerline_hz < 0 or self.powerline_amplitude_counts < 0:
            raise InvalidSpec("powerline parameters must be nonnegative")
        if self.noise_rms_counts < 0:
            raise InvalidSpec("noise_rms_counts must be nonnegative")
