"""Burst synthesis, capture filtering, transient detection, and noise injection.

Bursts are baseband complex sample sequences. Each synthetic emitter carries a
small set of front-end impairments (IQ imbalance, third-order nonlinearity,
frequency offset, phase-noise walk) that color its bursts in a device-specific
way. All randomness flows through explicit seeds so every operation replays
bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .errors import (
    DegenerateSignal,
    InvalidCutoff,
    InvalidLength,
    InvalidValue,
    NoTransientFound,
)

MIN_BURST_LEN = 150  # samples consumed by one time-frequency block


@dataclass(frozen=True)
class EmitterProfile:
    """Front-end impairment parameters of one synthetic radio."""

    radio_id: str
    iq_gain_imbalance: float = 1.0      # linear ratio, > 0
    iq_phase_imbalance: float = 0.0     # radians
    carrier_freq_offset: float = 0.0    # fraction of sample rate, in (-0.5, 0.5)
    phase_noise_std: float = 0.0        # radians per sample (random-walk step)
    pa_nonlinearity: float = 0.0        # third-order coefficient
    ramp_time_constant: float = 20.0    # samples

    def __post_init__(self):
        if self.iq_gain_imbalance <= 0:
            raise InvalidValue("iq_gain_imbalance must be > 0")
        if not -0.5 < self.carrier_freq_offset < 0.5:
            raise InvalidValue("carrier_freq_offset must lie in (-0.5, 0.5)")
        if self.phase_noise_std < 0:
            raise InvalidValue("phase_noise_std must be >= 0")


@dataclass
class ComplexBurst:
    """One near-transient burst of baseband complex samples."""

    samples: np.ndarray
    sample_rate: float = 1.0
    radio_id: str = ""
    snr_db: float | None = None   # None marks a clean (noise-free) burst

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)

    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


def ramp_template(template_len: int, time_constant: float) -> np.ndarray:
    """Clean turn-on envelope: 1 - exp(-n/tau), n = 1..template_len."""
    n = np.arange(1, template_len + 1, dtype=np.float64)
    return 1.0 - np.exp(-n / time_constant)


@lru_cache(maxsize=None)
def preamble(template_len: int, n_tones: int = 41, half_band: float = 0.25):
    """Fixed broadband multitone preamble shared by every radio.

    Wider than the capture filter, so the filter (not the emitter) sets the
    occupied band and every radio fills it. The tone grid is irregular, so
    no frequency offset maps the comb onto itself. Tone frequencies and
    phases come from a fixed generator seed: the preamble is a deterministic
    constant of the pipeline. Unit mean power.
    """
    rng = np.random.default_rng(20240518)
    freqs = np.sort(rng.uniform(-half_band, half_band, n_tones))
    phases = rng.uniform(0.0, 2.0 * np.pi, n_tones)
    n = np.arange(template_len)[:, None]
    tones = np.exp(1j * (2.0 * np.pi * freqs[None, :] * n + phases[None, :]))
    p = tones.sum(axis=1) / np.sqrt(n_tones)
    p.setflags(write=False)
    return p


def clean_template(template_len: int, time_constant: float) -> np.ndarray:
    """Unimpaired burst: turn-on ramp envelope over the multitone preamble."""
    return ramp_template(template_len, time_constant) * preamble(template_len)


def synth_burst(
    profile: EmitterProfile,
    template_len: int,
    seed,
    sample_rate: float = 1.0,
) -> ComplexBurst:
    """Synthesize one burst for ``profile``.

    Impairments are applied in a fixed order: ramp envelope, IQ imbalance,
    third-order nonlinearity, frequency offset, phase-noise walk. The identity
    profile reproduces the clean ramp template exactly.
    """
    if template_len < MIN_BURST_LEN:
        raise InvalidLength(
            f"template_len {template_len} < minimum {MIN_BURST_LEN}"
        )
    rng = np.random.default_rng(seed)
    x = clean_template(template_len, profile.ramp_time_constant).astype(
        np.complex128
    )

    # IQ imbalance: quadrature arm gain/phase error relative to in-phase arm.
    g = profile.iq_gain_imbalance
    phi = profile.iq_phase_imbalance
    i, q = x.real, x.imag
    x = i + 1j * g * (q * np.cos(phi) + i * np.sin(phi))

    # Third-order PA nonlinearity.
    if profile.pa_nonlinearity != 0.0:
        x = x + profile.pa_nonlinearity * x * np.abs(x) ** 2

    # Carrier frequency offset.
    if profile.carrier_freq_offset != 0.0:
        n = np.arange(template_len)
        x = x * np.exp(2j * np.pi * profile.carrier_freq_offset * n)

    # Phase-noise random walk.
    if profile.phase_noise_std > 0.0:
        theta = np.cumsum(rng.normal(0.0, profile.phase_noise_std, template_len))
        x = x * np.exp(1j * theta)

    return ComplexBurst(x, sample_rate=sample_rate, radio_id=profile.radio_id)


@lru_cache(maxsize=None)
def _butter_sos(order: int, cutoff: float):
    sos = sps.butter(order, cutoff, btype="low", output="sos")
    sos.setflags(write=False)
    return sos


def butterworth_filter(
    burst: ComplexBurst, order: int = 6, cutoff: float = 0.25
) -> ComplexBurst:
    """Forward-only low-pass Butterworth filter (cascaded biquads).

    ``cutoff`` is a fraction of the Nyquist frequency.
    """
    if not 0.0 < cutoff < 1.0:
        raise InvalidCutoff(f"cutoff {cutoff} outside (0, 1)")
    sos = _butter_sos(order, cutoff)
    y = sps.sosfilt(sos, burst.samples)
    return ComplexBurst(
        y, sample_rate=burst.sample_rate, radio_id=burst.radio_id,
        snr_db=burst.snr_db,
    )


def detect_transient(
    record: ComplexBurst, window: int = 32, threshold: float = 0.05
) -> int:
    """Amplitude variance-trajectory transient detection.

    Returns the first index whose sliding-window amplitude variance exceeds
    ``threshold`` times the maximum window variance over the record.
    """
    if window < 2:
        raise InvalidValue("window must be >= 2")
    amp = np.abs(record.samples)
    if len(amp) <= window:
        raise InvalidLength("record shorter than detection window")
    c1 = np.cumsum(np.concatenate(([0.0], amp)))
    c2 = np.cumsum(np.concatenate(([0.0], amp**2)))
    s1 = c1[window:] - c1[:-window]
    s2 = c2[window:] - c2[:-window]
    var = np.maximum(s2 / window - (s1 / window) ** 2, 0.0)
    vmax = float(var.max())
    if vmax <= 1e-30:
        raise NoTransientFound("amplitude variance is zero everywhere")
    idx = np.nonzero(var >= threshold * vmax)[0]
    return int(idx[0])


def add_awgn(
    burst: ComplexBurst,
    snr_db: float | None,
    filter_spec: tuple[int, float] = (6, 0.25),
    seed=0,
) -> ComplexBurst:
    """Add like-filtered complex AWGN at the target post-filter SNR.

    Noise is shaped by the same Butterworth filter as the signal path and then
    rescaled so the ratio of burst power to filtered-noise power equals the
    target exactly. ``snr_db=None`` returns the burst unchanged.
    """
    if snr_db is None:
        return ComplexBurst(
            burst.samples.copy(), sample_rate=burst.sample_rate,
            radio_id=burst.radio_id, snr_db=None,
        )
    p_sig = burst.power()
    if p_sig <= 0.0:
        raise DegenerateSignal("burst power is zero")
    order, cutoff = filter_spec
    rng = np.random.default_rng(seed)
    n = len(burst.samples)
    noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(0.5)
    noise = sps.sosfilt(_butter_sos(order, cutoff), noise)
    p_noise = float(np.mean(np.abs(noise) ** 2))
    scale = np.sqrt(p_sig / (p_noise * 10.0 ** (snr_db / 10.0)))
    return ComplexBurst(
        burst.samples + scale * noise, sample_rate=burst.sample_rate,
        radio_id=burst.radio_id, snr_db=float(snr_db),
    )


# ---------------------------------------------------------------------------
# IQ file + cohort manifest I/O
# ---------------------------------------------------------------------------

def write_iq(path, burst: ComplexBurst, profile: EmitterProfile | None = None,
             seed=None) -> None:
    """Write interleaved float32 little-endian IQ plus a JSON sidecar."""
    path = Path(path)
    inter = np.empty(2 * len(burst.samples), dtype="<f4")
    inter[0::2] = burst.samples.real
    inter[1::2] = burst.samples.imag
    path.write_bytes(inter.tobytes())
    meta = {
        "sample_rate": burst.sample_rate,
        "radio_id": burst.radio_id,
        "snr_db": burst.snr_db,
        "seed": seed,
    }
    if profile is not None:
        meta["profile"] = asdict(profile)
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(meta, indent=2)
    )


def read_iq(path) -> tuple[ComplexBurst, dict]:
    path = Path(path)
    inter = np.frombuffer(path.read_bytes(), dtype="<f4")
    samples = inter[0::2].astype(np.float64) + 1j * inter[1::2].astype(np.float64)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    burst = ComplexBurst(
        samples, sample_rate=meta.get("sample_rate", 1.0),
        radio_id=meta.get("radio_id", ""), snr_db=meta.get("snr_db"),
    )
    return burst, meta


def save_manifest(path, profiles: list[EmitterProfile], n_bursts: int) -> None:
    data = {"n_bursts": n_bursts, "profiles": [asdict(p) for p in profiles]}
    Path(path).write_text(json.dumps(data, indent=2))


def load_manifest(path) -> tuple[list[EmitterProfile], int]:
    data = json.loads(Path(path).read_text())
    profiles = [EmitterProfile(**p) for p in data["profiles"]]
    return profiles, int(data["n_bursts"])
