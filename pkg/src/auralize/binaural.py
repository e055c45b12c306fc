"""Hybrid binaural rendering.

Direct path: truncated-HRIR convolution at full spatial resolution.
Reverberation: Ambisonics rotation, decoding to 20 virtual loudspeakers
on dodecahedron vertices, per-speaker HRIR convolution. Mixing matches a
target direct-to-reverberant ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import sh
from .errors import AnalysisError, ValidationError
from .ga import AmbisonicsIR
from .hrir import HRIRSet

SPEED_OF_SOUND = 343.0
TRUNCATE_FLOOR = 158  # published safe minimum for HRIR truncation
FADE_SAMPLES = 16


@dataclass(frozen=True)
class SpeakerLayout:
    directions: np.ndarray

    def __post_init__(self):
        dirs = np.asarray(self.directions, dtype=float)
        object.__setattr__(self, "directions", dirs)
        if dirs.shape != (20, 3):
            raise ValidationError("layout must have 20 direction vectors")
        ref = np.sort(np.round(sh.dodecahedron_directions()
                               @ sh.dodecahedron_directions().T, 9), axis=None)
        got = np.sort(np.round(dirs @ dirs.T, 9), axis=None)
        if np.abs(ref - got).max() > 1e-9:
            raise ValidationError("directions are not dodecahedron vertices")

    @classmethod
    def dodecahedron(cls) -> "SpeakerLayout":
        return cls(sh.dodecahedron_directions())


@dataclass
class BinauralStimulus:
    sample_rate: float
    left: np.ndarray
    right: np.ndarray
    provenance: dict

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise ValidationError("channel lengths differ")
        if not (np.all(np.isfinite(self.left)) and np.all(np.isfinite(self.right))):
            raise ValidationError("non-finite samples")

    def stereo(self) -> np.ndarray:
        return np.stack([self.left, self.right])


def sh_rotate(air: AmbisonicsIR, yaw: float, pitch: float = 0.0, roll: float = 0.0) -> AmbisonicsIR:
    """Rotate the Ambisonics sound field; per-order norms are preserved."""
    if air.order > 3:
        raise ValidationError("rotation supported up to order 3")
    m = sh.sh_rotation_blocks(sh.rotation_matrix(yaw, pitch, roll), air.order)
    return AmbisonicsIR(
        sample_rate=air.sample_rate,
        order=air.order,
        channels=m @ air.channels,
        onset_index=air.onset_index,
        arrivals=air.arrivals,
        tail_energy_by_bin=air.tail_energy_by_bin,
        time_bin_width=air.time_bin_width,
    )


def decoding_matrix(layout: SpeakerLayout, order: int) -> np.ndarray:
    """Pseudo-inverse sampling decoder, shape (speakers, (order+1)^2)."""
    y = sh.sh_matrix(layout.directions, order)  # (20, n)
    if len(layout.directions) < y.shape[1]:
        raise ValidationError("layout has fewer speakers than SH channels")
    if np.linalg.matrix_rank(y) < y.shape[1]:
        raise ValidationError("rank-deficient speaker sampling matrix")
    return np.linalg.pinv(y.T)


def decode_to_speakers(air: AmbisonicsIR, layout: SpeakerLayout) -> np.ndarray:
    """Per-speaker feed signals, shape (20, samples)."""
    return decoding_matrix(layout, air.order) @ air.channels


def binauralize(air: AmbisonicsIR, hrirs: HRIRSet, layout: SpeakerLayout = None) -> np.ndarray:
    """Reverb BRIR: decode to virtual speakers, convolve nearest HRIRs, sum."""
    if layout is None:
        layout = SpeakerLayout.dodecahedron()
    if hrirs.sample_rate != air.sample_rate:
        raise ValidationError(
            f"sample-rate mismatch: HRIR {hrirs.sample_rate}, AIR {air.sample_rate}"
        )
    feeds = decode_to_speakers(air, layout)
    n_out = feeds.shape[1] + hrirs.num_taps - 1
    out = np.zeros((2, n_out))
    for k, d in enumerate(layout.directions):
        idx = hrirs.nearest(d)
        out[0] += fftconvolve(feeds[k], hrirs.left[idx])
        out[1] += fftconvolve(feeds[k], hrirs.right[idx])
    return out


def truncate_hrir(h: np.ndarray, truncate: int) -> np.ndarray:
    """Keep the first ``truncate`` samples, raised-cosine fade on the last 16."""
    if truncate > len(h):
        raise ValidationError("truncation longer than the HRIR")
    out = h[:truncate].copy()
    fade = min(FADE_SAMPLES, truncate)
    ramp = 0.5 * (1.0 + np.cos(np.linspace(0.0, math.pi, fade + 2)[1:-1]))
    out[-fade:] *= ramp[-fade:]
    return out


def render_direct(
    anechoic: np.ndarray,
    direction,
    distance: float,
    hrirs: HRIRSet,
    truncate: int = 198,
    allow_short: bool = False,
    speed_of_sound: float = SPEED_OF_SOUND,
) -> np.ndarray:
    """Direct-path binaural signal: nearest truncated HRIR, 1/r gain, delay."""
    if truncate < TRUNCATE_FLOOR and not allow_short:
        raise ValidationError(
            f"truncate below the safe floor of {TRUNCATE_FLOOR} samples"
        )
    if distance <= 0:
        raise ValidationError("distance must be positive")
    anechoic = np.asarray(anechoic, dtype=float)
    idx = hrirs.nearest(direction)
    delay = int(round(distance / speed_of_sound * hrirs.sample_rate))
    gain = 1.0 / distance
    out_len = len(anechoic) + truncate - 1 + delay
    out = np.zeros((2, out_len))
    for ear, table in ((0, hrirs.left), (1, hrirs.right)):
        h = truncate_hrir(table[idx], truncate) * gain
        sig = fftconvolve(anechoic, h)
        out[ear, delay:delay + len(sig)] = sig
    return out


def mix(direct: np.ndarray, reverb: np.ndarray, target_drr: float,
        sample_rate: float = 44100.0, provenance=None) -> BinauralStimulus:
    """Scale reverb so 10 log10(E_direct / E_reverb) hits target_drr, sum."""
    direct = np.atleast_2d(np.asarray(direct, dtype=float))
    reverb = np.atleast_2d(np.asarray(reverb, dtype=float))
    e_d = float((direct**2).sum())
    e_r = float((reverb**2).sum())
    if e_d <= 0 or e_r <= 0:
        raise AnalysisError("zero-energy direct or reverb signal")
    gain = math.sqrt(e_d / (e_r * 10.0 ** (target_drr / 10.0)))
    n = max(direct.shape[1], reverb.shape[1])
    out = np.zeros((2, n))
    out[:, :direct.shape[1]] += direct
    out[:, :reverb.shape[1]] += gain * reverb
    return BinauralStimulus(
        sample_rate=sample_rate,
        left=out[0],
        right=out[1],
        provenance=provenance or {},
    )


def render_scene(
    sources,
    airs: dict,
    hrirs: HRIRSet,
    model,
    receiver_label: str,
    head_yaw: float = 0.0,
    target_drrs: dict = None,
    truncate: int = 198,
    layout: SpeakerLayout = None,
) -> BinauralStimulus:
    """Render and sum every (anechoic signal, source label) for one receiver.

    The reverb field of each source is rotated by -head_yaw before
    decoding; the direct-path direction is rotated into the head frame.
    Per-source DRR targets default to the physical ratio measured on the
    reverberation AIR against the direct-path energy.
    """
    if layout is None:
        layout = SpeakerLayout.dodecahedron()
    receiver = np.asarray(model.receivers[receiver_label], dtype=float)
    rot_head = sh.rotation_matrix(-head_yaw)
    total = None
    fs = hrirs.sample_rate
    for signal_data, label in sorted(sources, key=lambda p: p[1]):
        if label not in airs:
            raise ValidationError(f"no AIR for source {label!r}")
        air = airs[label]
        src = np.asarray(model.sources[label], dtype=float)
        vec = src - receiver
        distance = float(np.linalg.norm(vec))
        direction = rot_head @ (vec / distance)

        direct = render_direct(
            signal_data, direction, distance, hrirs, truncate,
            speed_of_sound=model.speed_of_sound,
        )
        brir = binauralize(sh_rotate(air, -head_yaw), hrirs, layout)
        reverb = np.stack(
            [fftconvolve(signal_data, brir[0]), fftconvolve(signal_data, brir[1])]
        )
        if target_drrs and label in target_drrs:
            drr_target = target_drrs[label]
        else:
            e_dir = float((direct**2).sum())
            e_rev = float((reverb**2).sum())
            if e_rev <= 0:
                raise AnalysisError(f"source {label!r} has no reverberant energy")
            drr_target = 10.0 * math.log10(max(e_dir / e_rev, 1e-12))
        stim = mix(direct, reverb, drr_target, fs)
        pair = stim.stereo()
        if total is None:
            total = pair
        else:
            n = max(total.shape[1], pair.shape[1])
            merged = np.zeros((2, n))
            merged[:, :total.shape[1]] = total
            merged[:, :pair.shape[1]] += pair
            total = merged
    if total is None:
        raise ValidationError("render_scene needs at least one source")
    return BinauralStimulus(
        sample_rate=fs,
        left=total[0],
        right=total[1],
        provenance={"receiver": receiver_label, "head_yaw": head_yaw},
    )
