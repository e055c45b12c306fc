"""HRIR sets: validation, disk layout, and a synthetic spherical-head set.

On disk an HRIR set is a directory with an ``index.txt`` mapping
"azimuth_deg elevation_deg filename" per line to two-channel float WAVs.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import sh
from .errors import ValidationError
from .io import read_wav, write_wav


@dataclass
class HRIRSet:
    sample_rate: float
    directions: np.ndarray       # (n, 3) unit vectors
    left: np.ndarray             # (n, taps)
    right: np.ndarray            # (n, taps)
    name: str = "hrir"

    def __post_init__(self):
        self.directions = np.asarray(self.directions, dtype=float)
        self.left = np.asarray(self.left, dtype=float)
        self.right = np.asarray(self.right, dtype=float)
        n = len(self.directions)
        if n < 20:
            raise ValidationError(f"HRIR set needs at least 20 directions, got {n}")
        if self.left.shape != self.right.shape or self.left.shape[0] != n:
            raise ValidationError("HRIR table shapes are inconsistent")
        dots = self.directions @ self.directions.T
        np.fill_diagonal(dots, -1.0)
        if dots.max() > 1.0 - 1e-12:
            raise ValidationError("duplicate HRIR directions")
        if self.max_gap_deg() > 30.0 + 1e-9:
            raise ValidationError("HRIR coverage too sparse (gap above 30 degrees)")

    def max_gap_deg(self) -> float:
        """Largest angular distance from any probe direction to the set."""
        i = np.arange(2000)
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        z = 1.0 - (2.0 * i + 1.0) / len(i)
        r = np.sqrt(1.0 - z * z)
        probes = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
        best = (probes @ self.directions.T).max(axis=1)
        return math.degrees(math.acos(float(np.clip(best.min(), -1.0, 1.0))))

    def nearest(self, direction) -> int:
        """Index of the entry nearest in angle; ties go to the lowest index."""
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        return int(np.argmax(self.directions @ d))

    @property
    def num_taps(self) -> int:
        return self.left.shape[1]


def synthetic_hrir_set(
    sample_rate: float = 44100.0,
    az_step_deg: float = 30.0,
    el_step_deg: float = 30.0,
    taps: int = 256,
    head_radius: float = 0.0875,
) -> HRIRSet:
    """Spherical-head model HRIRs (Woodworth ITD, first-order head shadow).

    Not a measured dataset; adequate for pipeline tests and demos.
    """
    c = 343.0
    dirs, lefts, rights = [], [], []
    els = np.arange(-90.0 + el_step_deg, 90.0, el_step_deg)
    grid = [(0.0, -90.0), (0.0, 90.0)]
    for el in els:
        for az in np.arange(0.0, 360.0, az_step_deg):
            grid.append((az, el))
    for az_deg, el_deg in grid:
        az = math.radians(az_deg)
        el = math.radians(el_deg)
        d = sh.direction(az, el)
        # lateral angle: +1 fully left, -1 fully right
        lat = d[1]
        itd = head_radius / c * (math.asin(np.clip(lat, -1, 1)) + lat)
        base_delay = taps // 4 / sample_rate
        out = []
        for side in (+1.0, -1.0):  # left, right ear
            delay = base_delay + (-side * itd / 2.0)
            n0 = delay * sample_rate
            h = np.zeros(taps)
            i0 = int(math.floor(n0))
            frac = n0 - i0
            h[i0] = 1.0 - frac
            h[i0 + 1] = frac
            # crude head shadow: one-pole lowpass stronger on the far ear
            amount = float(np.clip(-side * lat, 0.0, 1.0))
            a = 0.6 * amount
            if a > 0:
                from scipy.signal import lfilter

                h = lfilter([1.0 - a], [1.0, -a], h) * (1.0 - 0.4 * amount)
            out.append(h)
        dirs.append(d)
        lefts.append(out[0])
        rights.append(out[1])
    return HRIRSet(
        sample_rate=sample_rate,
        directions=np.array(dirs),
        left=np.array(lefts),
        right=np.array(rights),
        name="synthetic-sphere",
    )


def save_hrir_set(hrirs: HRIRSet, directory):
    os.makedirs(directory, exist_ok=True)
    lines = []
    for i, d in enumerate(hrirs.directions):
        az = math.degrees(math.atan2(d[1], d[0])) % 360.0
        el = math.degrees(math.asin(np.clip(d[2], -1.0, 1.0)))
        fname = f"hrir_{i:04d}.wav"
        write_wav(
            os.path.join(directory, fname),
            np.stack([hrirs.left[i], hrirs.right[i]]),
            hrirs.sample_rate,
        )
        lines.append(f"{az:.4f} {el:.4f} {fname}")
    with open(os.path.join(directory, "index.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_hrir_set(directory, name=None) -> HRIRSet:
    index = os.path.join(directory, "index.txt")
    if not os.path.exists(index):
        raise ValidationError(f"no index.txt in {directory}")
    dirs, lefts, rights = [], [], []
    rate = None
    with open(index) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            az_s, el_s, fname = line.split()
            fs, data = read_wav(os.path.join(directory, fname))
            if data.shape[0] != 2:
                raise ValidationError(f"{fname}: expected two channels")
            if rate is None:
                rate = fs
            elif fs != rate:
                raise ValidationError("mixed sample rates in HRIR set")
            dirs.append(sh.direction(math.radians(float(az_s)), math.radians(float(el_s))))
            lefts.append(data[0])
            rights.append(data[1])
    return HRIRSet(
        sample_rate=rate,
        directions=np.array(dirs),
        left=np.array(lefts),
        right=np.array(rights),
        name=name or os.path.basename(str(directory)),
    )
