"""WAV and sidecar-metadata IO.

Ambisonics IRs are stored as 16-channel 32-bit-float WAV (AmbiX: ACN
order, SN3D) with the onset index in a ``<name>.meta.txt`` sidecar.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.io import wavfile


def write_wav(path, data: np.ndarray, sample_rate: float):
    """Write (channels, samples) float data as 32-bit-float WAV."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float32))
    wavfile.write(path, int(sample_rate), data.T.copy())


def read_wav(path):
    """Read a WAV file; returns (sample_rate, (channels, samples)) float64."""
    fs, data = wavfile.read(path)
    if data.ndim == 1:
        data = data[:, None]
    if data.dtype.kind == "i":
        data = data.astype(np.float64) / np.iinfo(data.dtype).max
    return float(fs), np.asarray(data, dtype=np.float64).T


def sidecar_path(wav_path) -> str:
    base, _ = os.path.splitext(str(wav_path))
    return base + ".meta.txt"


def write_air(path, air):
    """AmbisonicsIR -> WAV plus sidecar with onset/order metadata."""
    write_wav(path, air.channels, air.sample_rate)
    with open(sidecar_path(path), "w") as fh:
        fh.write(f"onset_index = {air.onset_index}\n")
        fh.write(f"order = {air.order}\n")
        fh.write(f"sample_rate = {air.sample_rate:g}\n")


def read_air(path):
    from .ga import AmbisonicsIR

    fs, channels = read_wav(path)
    meta = {}
    with open(sidecar_path(path)) as fh:
        for line in fh:
            if "=" in line:
                k, v = line.split("=", 1)
                meta[k.strip()] = v.strip()
    return AmbisonicsIR(
        sample_rate=float(meta.get("sample_rate", fs)),
        order=int(meta.get("order", 3)),
        channels=channels,
        onset_index=int(meta.get("onset_index", 0)),
    )
