"""Octave filterbank, ERB scale helpers and gammatone analysis filters."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import signal

from .errors import ValidationError
from .geometry import OCTAVE_CENTERS

SQRT2 = math.sqrt(2.0)


def octave_band_edges(center: float):
    return center / SQRT2, center * SQRT2


@lru_cache(maxsize=None)
def octave_band_sos(center: float, sample_rate: float, order: int = 4):
    """Butterworth bandpass SOS for one octave band (upper edge clipped at Nyquist)."""
    nyq = sample_rate / 2.0
    lo, hi = octave_band_edges(center)
    if lo >= nyq:
        raise ValidationError(f"band {center} Hz lies above Nyquist")
    hi = min(hi, 0.995 * nyq)
    return signal.butter(order, [lo / nyq, hi / nyq], btype="bandpass", output="sos")


def band_filter(x: np.ndarray, center: float, sample_rate: float) -> np.ndarray:
    """Zero-phase octave-band filtering."""
    return signal.sosfiltfilt(octave_band_sos(center, sample_rate), x)


@lru_cache(maxsize=None)
def _wide_band_sos(center: float, half_width: float, sample_rate: float, order: int = 4):
    """Butterworth bandpass with edges center/half_width .. center*half_width."""
    nyq = sample_rate / 2.0
    lo = max(center / half_width, 1.0)
    hi = min(center * half_width, 0.995 * nyq)
    if lo >= nyq:
        raise ValidationError(f"band {center} Hz lies above Nyquist")
    return signal.butter(order, [lo / nyq, hi / nyq], btype="bandpass", output="sos")


@lru_cache(maxsize=None)
def band_kernels(sample_rate: float, centers: tuple = OCTAVE_CENTERS,
                 length: int = 8191) -> np.ndarray:
    """Zero-phase, unit-energy band FIR kernels, shape (len(centers), length).

    ``centers`` must partition the 8-octave range geometrically (8, 4, 2 or
    1 merged octave bands); each kernel's passband widens accordingly. A
    kernel is the zero-phase band response of a centered unit impulse,
    rescaled so a single pulse keeps its energy after band filtering.
    """
    if length % 2 == 0:
        length += 1
    centers = tuple(float(c) for c in centers)
    half_width = 2.0 ** (len(OCTAVE_CENTERS) / (2.0 * len(centers)))
    kernels = np.empty((len(centers), length))
    pulse = np.zeros(length)
    pulse[length // 2] = 1.0
    for i, c in enumerate(centers):
        h = signal.sosfiltfilt(_wide_band_sos(c, half_width, sample_rate), pulse)
        kernels[i] = h / math.sqrt(float(np.dot(h, h)))
    return kernels


# ---------------------------------------------------------------------------
# ERB scale (Glasberg & Moore)

def erb_number(freq):
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(freq, dtype=float))

def erb_number_to_freq(n):
    return (np.power(10.0, np.asarray(n, dtype=float) / 21.4) - 1.0) / 0.00437

def erb_bandwidth(freq):
    return 24.7 * (0.00437 * np.asarray(freq, dtype=float) + 1.0)


def erb_band_edges(count: int = 42):
    """(low, center, high) frequency triples for ERB-number bands 1..count."""
    n = np.arange(1, count + 1, dtype=float)
    return erb_number_to_freq(n - 0.5), erb_number_to_freq(n), erb_number_to_freq(n + 0.5)


def gammatone_centers(count: int = 36, f_lo: float = 50.0, f_hi: float = 16000.0):
    """Center frequencies equally spaced on the ERB-number scale."""
    return erb_number_to_freq(np.linspace(erb_number(f_lo), erb_number(f_hi), count))


@lru_cache(maxsize=None)
def gammatone_ir(center: float, sample_rate: float, order: int = 4) -> np.ndarray:
    """FIR impulse response of a 4th-order gammatone, unit peak band gain.

    The IIR realizations are unstable for low center frequencies at audio
    rates; the FIR form is exact up to truncation (envelope below 1e-5 of
    its peak).
    """
    b = 1.019 * float(erb_bandwidth(center))
    n = int(sample_rate * 0.2)
    t = np.arange(1, n + 1) / sample_rate
    env = t ** (order - 1) * np.exp(-2.0 * math.pi * b * t)
    cutoff = np.flatnonzero(env > env.max() * 1e-5)
    h = env * np.cos(2.0 * math.pi * center * t)
    h = h[: cutoff[-1] + 1]
    # unit gain at the center frequency
    w = np.exp(-2j * math.pi * center * np.arange(len(h)) / sample_rate)
    h = h / abs(np.dot(h, w))
    return h


def gammatone_filter(x: np.ndarray, center: float, sample_rate: float) -> np.ndarray:
    """4th-order gammatone bandpass (causal; identical group delay both ears)."""
    h = gammatone_ir(float(center), float(sample_rate))
    return signal.fftconvolve(x, h)[: len(x)]
