from pydantic import BaseModel
from pydantic import Field
from pydantic import model_validator

V_MIN = 2.0
V_MAX = 10.05
_V_TOLERANCE = 1e-9


class UnbalanceSpec(BaseModel):
    """Attached unbalance weight; tolerances are stored verbatim, never propagated."""

    mass_g: float = Field(ge=0.0)
    mass_tol_g: float = Field(default=0.0, ge=0.0)
    radius_mm: float = Field(default=0.0, ge=0.0)
    radius_tol_mm: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_radius(self) -> "UnbalanceSpec":
        if self.mass_g > 0 and self.radius_mm <= 0:
            raise ValueError("An unbalance with mass > 0 needs a radius > 0")
        return self

    @property
    def factor(self) -> float:
        """Unbalance factor in mm*g."""
        return self.mass_g * self.radius_mm


class VoltageStep(BaseModel):
    voltage: float
    duration: float = Field(gt=0.0)


class VoltageProfile(BaseModel):
    steps: list[VoltageStep]
    repetitions: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_voltages(self) -> "VoltageProfile":
        if not self.steps:
            raise ValueError("A voltage profile needs at least one step")
        for step in self.steps:
            if not V_MIN - _V_TOLERANCE <= step.voltage <= V_MAX + _V_TOLERANCE:
                raise ValueError(
                    f"Step voltage {step.voltage} V outside [{V_MIN}, {V_MAX}] V"
                )
        return self

    @property
    def duration(self) -> float:
        return self.repetitions * sum(step.duration for step in self.steps)


class ResonanceBand(BaseModel):
    center_rpm: float
    width_rpm: float = Field(gt=0.0)
    gain: float = Field(ge=0.0)


class SimConfig(BaseModel):
    unbalance: UnbalanceSpec
    profile: VoltageProfile
    base_noise_sigma: float = Field(default=0.01, ge=0.0)
    noise_cutoff_hz: float = Field(default=1600.0, gt=0.0, lt=2048.0)
    harmonic_gains: list[float] = Field(default_factory=lambda: [1.0, 0.3, 0.1])
    resonance_bands: list[ResonanceBand] = Field(
        default_factory=lambda: [
            ResonanceBand(center_rpm=1150.0, width_rpm=100.0, gain=3.0),
            ResonanceBand(center_rpm=1550.0, width_rpm=100.0, gain=3.0),
        ]
    )
    channel_gains: list[float] = Field(default_factory=lambda: [1.0, 0.7, 0.5])
    remount_jitter: float = Field(default=0.05, ge=0.0)
    lag_seconds: float = Field(default=1.0, gt=0.0)
    rpm_noise_sigma: float = Field(default=1.0, ge=0.0)
    # Synchronous amplitude produced by reference_factor at reference_rpm
    reference_amplitude: float = Field(default=0.1, gt=0.0)
    reference_factor: float = Field(default=152.1, gt=0.0)
    reference_rpm: float = Field(default=2300.0, gt=0.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_gains(self) -> "SimConfig":
        if any(g < 0 for g in self.harmonic_gains):
            raise ValueError("Harmonic gains must be >= 0")
        if len(self.channel_gains) != 3 or any(g < 0 for g in self.channel_gains):
            raise ValueError("channel_gains needs three values >= 0")
        return self


class ProfileSpec(BaseModel):
    """Overrides for the standard development / evaluation voltage profiles."""

    step_seconds: float = Field(default=20.0, gt=0.0)
    repetitions: int = Field(default=2, ge=1)


class SimSpec(BaseModel):
    """
    Everything needed to synthesise the ten datasets 0D..4E.

    ``unbalances`` overrides entries of the standard unbalance table by
    strength; the remaining fields are shared by all recordings.
    """

    seed: int = 2020
    unbalances: dict[int, UnbalanceSpec] = Field(default_factory=dict)
    development: ProfileSpec = Field(default_factory=ProfileSpec)
    evaluation: ProfileSpec = Field(default_factory=ProfileSpec)
    base_noise_sigma: float = Field(default=0.01, ge=0.0)
    noise_cutoff_hz: float = Field(default=1600.0, gt=0.0, lt=2048.0)
    harmonic_gains: list[float] = Field(default_factory=lambda: [1.0, 0.3, 0.1])
    resonance_bands: list[ResonanceBand] | None = None
    channel_gains: list[float] = Field(default_factory=lambda: [1.0, 0.7, 0.5])
    remount_jitter: float = Field(default=0.05, ge=0.0)
    lag_seconds: float = Field(default=1.0, gt=0.0)
    rpm_noise_sigma: float = Field(default=1.0, ge=0.0)

    @model_validator(mode="after")
    def _check_strengths(self) -> "SimSpec":
        bad = sorted(k for k in self.unbalances if not 0 <= k <= 4)
        if bad:
            raise ValueError(f"Unbalance overrides for unknown strengths: {bad}")
        return self
