"""Synthetic recordings that emulate the unbalance test rig.

A DC motor is driven through a voltage profile; its speed follows the
voltage setpoint through a first-order lag. The unbalance produces a
rotation-synchronous centrifugal force ``m * r * omega**2`` that shows up on
the vibration sensors together with its harmonics, band-limited sensor noise
and speed-dependent structural resonances. Evaluation recordings get a
random re-mounting perturbation of phases and gains, because the unbalance
holder was taken apart between development and evaluation measurements.
"""
import logging

import numpy as np
from scipy import signal

from ..errors import OutOfRange
from ..scheme.simulation import V_MAX
from ..scheme.simulation import V_MIN
from ..scheme.simulation import ProfileSpec
from ..scheme.simulation import SimConfig
from ..scheme.simulation import SimSpec
from ..scheme.simulation import UnbalanceSpec
from ..scheme.simulation import VoltageProfile
from ..scheme.simulation import VoltageStep
from .data import SAMPLE_RATE
from .data import DatasetId
from .data import Recording
from .data import Role
from .data import Synthetic

logger = logging.getLogger(__name__)

RPM_PER_VOLT = 212.0
RPM_OFFSET = 209.0

# Parameters of the five measured unbalances, keyed by strength
UNBALANCE_TABLE: dict[int, UnbalanceSpec] = {
    0: UnbalanceSpec(mass_g=0.0),
    1: UnbalanceSpec(mass_g=3.281, mass_tol_g=0.003, radius_mm=14.0, radius_tol_mm=0.1),
    2: UnbalanceSpec(mass_g=3.281, mass_tol_g=0.003, radius_mm=18.5, radius_tol_mm=0.1),
    3: UnbalanceSpec(mass_g=3.281, mass_tol_g=0.003, radius_mm=23.0, radius_tol_mm=0.1),
    4: UnbalanceSpec(mass_g=6.614, mass_tol_g=0.007, radius_mm=23.0, radius_tol_mm=0.1),
}

_PROFILE_GRID = {
    Role.DEVELOPMENT: (2.0, 0.05, 162),
    Role.EVALUATION: (4.0, 0.1, 42),
}


def rpm_from_voltage(v):
    """Motor speed for a controller voltage; accepts scalars and arrays."""
    v_arr = np.asarray(v, dtype=np.float64)
    if np.any(v_arr < V_MIN - 1e-9) or np.any(v_arr > V_MAX + 1e-9):
        raise OutOfRange(f"Voltage must be within [{V_MIN}, {V_MAX}] V")
    rpm = RPM_PER_VOLT * v_arr + RPM_OFFSET
    return float(rpm) if rpm.ndim == 0 else rpm


def make_profile(
    role: Role, step_seconds: float = 20.0, repetitions: int = 2
) -> VoltageProfile:
    start, delta, n_steps = _PROFILE_GRID[role]
    voltages = np.round(start + delta * np.arange(n_steps), 2)
    return VoltageProfile(
        steps=[VoltageStep(voltage=float(v), duration=step_seconds) for v in voltages],
        repetitions=repetitions,
    )


def centrifugal_force(m: float, r: float, omega: float) -> float:
    """Force in newtons for mass in kg, radius in m and angular speed in rad/s."""
    if m < 0 or r < 0:
        raise ValueError("Mass and radius must be >= 0")
    return m * r * omega**2


def unbalance_factor(m: float, r: float) -> float:
    """Unbalance factor in mm*g for mass in g and radius in mm."""
    if m < 0 or r < 0:
        raise ValueError("Mass and radius must be >= 0")
    return m * r


def rpm_to_omega(rpm):
    return 2.0 * np.pi * np.asarray(rpm) / 60.0


def profile_sample_count(profile: VoltageProfile, sample_rate: int = SAMPLE_RATE) -> int:
    per_run = sum(int(round(step.duration * sample_rate)) for step in profile.steps)
    return per_run * profile.repetitions


def setpoint_voltage(profile: VoltageProfile, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """The voltage profile sampled at the recording rate."""
    counts = [int(round(step.duration * sample_rate)) for step in profile.steps]
    voltages = [step.voltage for step in profile.steps]
    one_run = np.repeat(np.asarray(voltages, dtype=np.float64), counts)
    return np.tile(one_run, profile.repetitions)


def lagged_rpm(
    rpm_setpoint: np.ndarray, lag_seconds: float, sample_rate: int = SAMPLE_RATE
) -> np.ndarray:
    """First-order lag of the speed setpoint, starting in steady state."""
    alpha = 1.0 - np.exp(-1.0 / (lag_seconds * sample_rate))
    b = [alpha]
    a = [1.0, -(1.0 - alpha)]
    zi = np.array([(1.0 - alpha) * rpm_setpoint[0]])
    rpm, _ = signal.lfilter(b, a, rpm_setpoint, zi=zi)
    return rpm


def amplitude_scale(cfg: SimConfig) -> float:
    """Sensor units per (mm*g * (rad/s)**2)."""
    omega_ref = rpm_to_omega(cfg.reference_rpm)
    return cfg.reference_amplitude / (cfg.reference_factor * omega_ref**2)


def resonance_gain(cfg: SimConfig, rpm: np.ndarray) -> np.ndarray:
    gain = np.ones_like(rpm)
    for band in cfg.resonance_bands:
        inside = np.abs(rpm - band.center_rpm) <= band.width_rpm / 2.0
        gain = np.where(inside, gain * band.gain, gain)
    return gain


def band_limited_noise(
    rng: np.random.Generator,
    n: int,
    sigma: float,
    cutoff_hz: float,
    sample_rate: int = SAMPLE_RATE,
) -> np.ndarray:
    if sigma == 0.0:
        return np.zeros(n)
    white = rng.normal(0.0, sigma * np.sqrt(sample_rate / (2.0 * cutoff_hz)), size=n)
    sos = signal.butter(4, cutoff_hz, btype="lowpass", fs=sample_rate, output="sos")
    return signal.sosfilt(sos, white)


def _remount(
    cfg: SimConfig, role: Role, n_harmonics: int, seed_seq: np.random.SeedSequence
) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel, per-harmonic gain factors and phase offsets."""
    rng = np.random.default_rng(seed_seq)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(3, n_harmonics))
    gains = np.ones((3, n_harmonics))
    if role is Role.EVALUATION and cfg.remount_jitter > 0:
        jitter_rng = np.random.default_rng(seed_seq.spawn(1)[0])
        gains = gains * (1.0 + cfg.remount_jitter * jitter_rng.uniform(-1, 1, (3, n_harmonics)))
        phases = phases + np.pi * cfg.remount_jitter * jitter_rng.uniform(
            -1, 1, (3, n_harmonics)
        )
    return gains, phases


def simulate(cfg: SimConfig, dataset_id: DatasetId) -> Recording:
    """
    Generate one recording. Deterministic for a fixed ``cfg.seed``.

    The role of ``dataset_id`` only decides whether the re-mounting jitter is
    applied; with ``remount_jitter == 0`` development and evaluation output
    are identical.
    """
    fs = SAMPLE_RATE
    root = np.random.SeedSequence(cfg.seed)
    noise_seq, rpm_seq, mount_seq = root.spawn(3)

    v_in = setpoint_voltage(cfg.profile, fs)
    rpm_true = lagged_rpm(rpm_from_voltage(v_in), cfg.lag_seconds, fs)
    omega = rpm_to_omega(rpm_true)
    # theta[n] = sum of omega over the samples before n
    theta = np.concatenate(([0.0], np.cumsum(omega[:-1]))) / fs

    n_harmonics = len(cfg.harmonic_gains)
    gains, phases = _remount(cfg, dataset_id.role, n_harmonics, mount_seq)
    sync_amplitude = amplitude_scale(cfg) * cfg.unbalance.factor * omega**2
    noise_gain = resonance_gain(cfg, rpm_true)

    noise_rngs = [np.random.default_rng(s) for s in noise_seq.spawn(3)]
    vib = []
    for ch in range(3):
        x = np.zeros(len(v_in))
        if cfg.unbalance.factor > 0:
            for k, harmonic_gain in enumerate(cfg.harmonic_gains, start=1):
                if harmonic_gain == 0:
                    continue
                x += (
                    harmonic_gain
                    * gains[ch, k - 1]
                    * sync_amplitude
                    * np.sin(k * theta + phases[ch, k - 1])
                )
        noise = band_limited_noise(
            noise_rngs[ch], len(v_in), cfg.base_noise_sigma, cfg.noise_cutoff_hz, fs
        )
        vib.append(cfg.channel_gains[ch] * (x + noise_gain * noise))

    rpm_rng = np.random.default_rng(rpm_seq)
    measured_rpm = rpm_true
    if cfg.rpm_noise_sigma > 0:
        measured_rpm = rpm_true + rpm_rng.normal(0.0, cfg.rpm_noise_sigma, size=len(v_in))
    measured_rpm = np.maximum(measured_rpm, 0.0)

    logger.debug(
        "Simulated %s: %d samples, factor %.1f mm*g", dataset_id, len(v_in), cfg.unbalance.factor
    )
    return Recording(
        v_in=v_in,
        measured_rpm=measured_rpm,
        vib1=vib[0],
        vib2=vib[1],
        vib3=vib[2],
        unbalance_id=dataset_id.strength,
        role=dataset_id.role,
        source=Synthetic(cfg.seed),
    )


def dataset_seed(seed: int, dataset_id: DatasetId) -> int:
    """Per-dataset seed that only depends on the base seed, strength and role."""
    role_index = 0 if dataset_id.role is Role.DEVELOPMENT else 1
    seq = np.random.SeedSequence([seed, dataset_id.strength, role_index])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _profile_for(spec: ProfileSpec, role: Role) -> VoltageProfile:
    return make_profile(role, step_seconds=spec.step_seconds, repetitions=spec.repetitions)


def config_for(spec: SimSpec, dataset_id: DatasetId) -> SimConfig:
    """Build the SimConfig of one dataset from a shared simulation spec."""
    unbalance = spec.unbalances.get(dataset_id.strength, UNBALANCE_TABLE[dataset_id.strength])
    profile_spec = spec.development if dataset_id.role is Role.DEVELOPMENT else spec.evaluation
    extra = {}
    if spec.resonance_bands is not None:
        extra["resonance_bands"] = spec.resonance_bands
    return SimConfig(
        unbalance=unbalance,
        profile=_profile_for(profile_spec, dataset_id.role),
        base_noise_sigma=spec.base_noise_sigma,
        noise_cutoff_hz=spec.noise_cutoff_hz,
        harmonic_gains=spec.harmonic_gains,
        channel_gains=spec.channel_gains,
        remount_jitter=spec.remount_jitter,
        lag_seconds=spec.lag_seconds,
        rpm_noise_sigma=spec.rpm_noise_sigma,
        seed=dataset_seed(spec.seed, dataset_id),
        **extra,
    )


def simulate_dataset(spec: SimSpec, dataset_id: DatasetId) -> Recording:
    return simulate(config_for(spec, dataset_id), dataset_id)
