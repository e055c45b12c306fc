"""Hybrid geometrical-acoustics engine.

Deterministic image-source early reflections plus stochastic ray-traced
late energy, assembled into third-order Ambisonics room impulse responses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import butter, fftconvolve, sosfiltfilt

from . import filters, sh
from .errors import SimulationError, ValidationError
from .geometry import OCTAVE_CENTERS, RoomModel, polygon_normal_area

# ISO 9613-style air attenuation per octave band, dB/m (20 C, 50% RH)
AIR_ATTENUATION_DB_PER_M = np.array(
    [0.0002, 0.0006, 0.0010, 0.0019, 0.0037, 0.0107, 0.0400, 0.1350]
)


def air_attenuation_for(centers) -> np.ndarray:
    """Attenuation (dB/m) at arbitrary band centers, log-f interpolation."""
    return np.interp(
        np.log(np.asarray(centers, dtype=float)),
        np.log(OCTAVE_CENTERS),
        AIR_ATTENUATION_DB_PER_M,
    )


@dataclass(frozen=True)
class SimConfig:
    num_rays: int = 100_000
    max_time: float = 1.0
    sample_rate: float = 44100.0
    ambisonics_order: int = 3
    image_source_order: int = 2
    rng_seed: int = 0
    air_absorption: bool = False
    receiver_radius: float = 0.5
    time_bin_width: float = 1e-3
    batch_size: int = 32768
    # Minimum per-hit diffuse probability. Perfectly specular polygonal
    # rooms are non-mixing (axial ray energy decays far slower than the
    # statistical prediction); production GA engines inject automatic
    # surface diffusion for the same reason. Set to 0 for strictly
    # literal scattering coefficients.
    diffusion_floor: float = 0.15

    def __post_init__(self):
        if self.num_rays < 1000:
            raise ValidationError("num_rays must be at least 1000")
        if self.max_time <= 0:
            raise ValidationError("max_time must be positive")
        if self.ambisonics_order < 0:
            raise ValidationError("ambisonics_order must be >= 0")
        if self.sample_rate not in (44100.0, 48000.0, 44100, 48000):
            raise ValidationError("sample_rate must be 44100 or 48000")


@dataclass(frozen=True)
class Arrival:
    time: float
    direction: np.ndarray          # unit vector at the receiver, toward the arrival
    energy_per_band: np.ndarray
    kind: str                      # "direct" | "specular:<order>" | "stochastic"

    @property
    def total_energy(self) -> float:
        return float(np.sum(self.energy_per_band))

    @property
    def is_direct(self) -> bool:
        return self.kind == "direct"


@dataclass
class Reflectogram:
    time_bin_width: float
    directions: np.ndarray         # (ncells, 3) direction grid
    histogram: np.ndarray          # (nbins, ncells, nbands) energies
    arrivals: tuple = ()
    band_centers: tuple = ()
    escaped_rays: int = 0
    num_rays: int = 0
    volume: float = 0.0

    def stochastic_energy(self) -> float:
        return float(self.histogram.sum())

    def deterministic_energy(self) -> float:
        return float(sum(a.total_energy for a in self.arrivals))

    def total_energy(self) -> float:
        return self.stochastic_energy() + self.deterministic_energy()

    def band_decay(self) -> np.ndarray:
        """(nbins, nbands) energy-vs-time marginal of the histogram."""
        return self.histogram.sum(axis=1)

    def time_marginal(self) -> np.ndarray:
        return self.histogram.sum(axis=(1, 2))


@dataclass
class AmbisonicsIR:
    sample_rate: float
    order: int
    channels: np.ndarray           # ((order+1)^2, nsamples), ACN / SN3D
    onset_index: int
    arrivals: tuple = ()
    tail_energy_by_bin: np.ndarray = field(default_factory=lambda: np.zeros(0))
    time_bin_width: float = 1e-3

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=float)
        n = (self.order + 1) ** 2
        if self.channels.shape[0] != n:
            raise ValidationError(
                f"expected {n} channels for order {self.order}, got {self.channels.shape[0]}"
            )
        if not np.all(np.isfinite(self.channels)):
            raise ValidationError("non-finite samples in AmbisonicsIR")
        if not (0 <= self.onset_index < self.channels.shape[1]):
            raise ValidationError("onset_index outside the impulse response")

    @property
    def num_samples(self) -> int:
        return self.channels.shape[1]


# ---------------------------------------------------------------------------
# Polygon cache

class _PolyData:
    """Precomputed per-polygon plane, 2D projection and material tables."""

    def __init__(self, model: RoomModel):
        mats = model.materials
        nbands = len(next(iter(mats.values())).absorption.values)
        self.nbands = nbands
        self.normals = []
        self.offsets = []
        self.verts2d = []
        self.bases = []
        self.alpha = []
        self.scatter_mean = []
        for poly in model.polygons:
            pts = model.polygon_vertices(poly)
            n, _ = polygon_normal_area(pts)
            t1 = np.cross(n, [1.0, 0.0, 0.0])
            if np.linalg.norm(t1) < 1e-6:
                t1 = np.cross(n, [0.0, 1.0, 0.0])
            t1 /= np.linalg.norm(t1)
            t2 = np.cross(n, t1)
            self.normals.append(n)
            self.offsets.append(float(n @ pts[0]))
            self.bases.append((t1, t2))
            self.verts2d.append(np.stack([pts @ t1, pts @ t2], axis=1))
            mat = mats[poly.material_id]
            self.alpha.append(mat.absorption.as_array())
            self.scatter_mean.append(float(np.mean(mat.scattering.values)))
        self.normals = np.array(self.normals)
        self.offsets = np.array(self.offsets)
        self.alpha = np.array(self.alpha)
        self.scatter_mean = np.array(self.scatter_mean)
        self.count = len(model.polygons)

    def points_inside(self, p: int, pts: np.ndarray) -> np.ndarray:
        """Even-odd test for 3D points already known to lie on plane p."""
        t1, t2 = self.bases[p]
        px = pts @ t1
        py = pts @ t2
        v = self.verts2d[p]
        inside = np.zeros(len(pts), dtype=bool)
        x1, y1 = v[-1]
        for x2, y2 in v:
            cond = (y1 > py) != (y2 > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xcross = (x2 - x1) * (py - y1) / (y2 - y1) + x1
            inside ^= cond & (px < xcross)
            x1, y1 = x2, y2
        return inside


def _segment_blocked(pd: _PolyData, a: np.ndarray, b: np.ndarray, skip=()):
    """True if segment a->b crosses any polygon not in skip."""
    d = b - a
    for p in range(pd.count):
        if p in skip:
            continue
        denom = float(pd.normals[p] @ d)
        if abs(denom) < 1e-12:
            continue
        t = (pd.offsets[p] - pd.normals[p] @ a) / denom
        if 1e-7 < t < 1.0 - 1e-7:
            hit = a + t * d
            if pd.points_inside(p, hit[None, :])[0]:
                return True
    return False


# ---------------------------------------------------------------------------
# Image sources

def image_sources(model: RoomModel, source, receiver, order: int):
    """All visible specular paths up to the given reflection order.

    Energy is normalized so the direct path at 1 m carries unit energy per
    band; each reflection applies (1 - absorption) of its surface.
    """
    if order < 0:
        raise ValidationError("order must be >= 0")
    source = np.asarray(source, dtype=float)
    receiver = np.asarray(receiver, dtype=float)
    pd = _PolyData(model)
    c = model.speed_of_sound
    nbands = pd.nbands
    arrivals = []

    def mirror(p, poly):
        n = pd.normals[poly]
        return p - 2.0 * (p @ n - pd.offsets[poly]) * n

    def validate_sequence(seq):
        # walk back from the receiver through the mirror stack
        imgs = []
        pos = source
        for poly in seq:
            pos = mirror(pos, poly)
            imgs.append(pos)
        pts = []
        p = receiver
        for k in range(len(seq) - 1, -1, -1):
            poly = seq[k]
            d = imgs[k] - p
            denom = float(pd.normals[poly] @ d)
            if abs(denom) < 1e-12:
                return None
            t = (pd.offsets[poly] - pd.normals[poly] @ p) / denom
            if not (1e-9 < t < 1.0 - 1e-9):
                return None
            hit = p + t * d
            if not pd.points_inside(poly, hit[None, :])[0]:
                return None
            pts.append(hit)
            p = hit
        # occlusion along every leg
        chain = [receiver] + pts + [source]
        for i in range(len(chain) - 1):
            skip = set()
            if 0 < i:
                skip.add(seq[len(seq) - i])
            if i < len(seq):
                skip.add(seq[len(seq) - 1 - i])
            if _segment_blocked(pd, chain[i], chain[i + 1], skip):
                return None
        return imgs[-1]

    # direct path
    if not _segment_blocked(pd, receiver, source):
        dist = float(np.linalg.norm(source - receiver))
        if dist < 1e-9:
            raise ValidationError("source and receiver coincide")
        energy = np.full(nbands, 1.0 / dist**2)
        arrivals.append(
            Arrival(dist / c, (source - receiver) / dist, energy, "direct")
        )

    def recurse(seq, depth):
        if depth == 0:
            return
        last = seq[-1] if seq else -1
        for poly in range(pd.count):
            if poly == last:
                continue
            s = seq + [poly]
            img = validate_sequence(s)
            if img is not None:
                dist = float(np.linalg.norm(img - receiver))
                gain = np.ones(nbands)
                for q in s:
                    gain *= 1.0 - pd.alpha[q]
                energy = gain / dist**2
                direction = (img - receiver) / dist
                arrivals.append(
                    Arrival(dist / c, direction, energy, f"specular:{len(s)}")
                )
            recurse(s, depth - 1)

    recurse([], order)
    arrivals.sort(key=lambda a: a.time)
    return arrivals


# ---------------------------------------------------------------------------
# Stochastic ray tracing

def trace(
    model: RoomModel,
    source,
    receiver,
    config: SimConfig,
    min_specular_order: int = 0,
) -> Reflectogram:
    """Monte-Carlo ray tracing into a (time, direction, band) histogram.

    ``min_specular_order`` excludes purely specular paths below that
    reflection count (used by the hybrid split so image-source arrivals
    are not double counted); diffusely scattered rays always contribute.
    Bit-deterministic for a fixed (seed, num_rays, batch_size): every
    batch draws from its own spawned RNG stream, so batch completion
    order cannot change the result.
    """
    source = np.asarray(source, dtype=float)
    receiver = np.asarray(receiver, dtype=float)
    if np.linalg.norm(source - receiver) < 1e-9:
        raise ValidationError("receiver coincides with source")
    pd = _PolyData(model)
    c = model.speed_of_sound
    nbins = int(math.ceil(config.max_time / config.time_bin_width))
    grid = sh.dodecahedron_directions()
    hist = np.zeros((nbins, len(grid), pd.nbands))
    r = config.receiver_radius
    norm = 3.0 / (config.num_rays * r**3)
    centers = next(iter(model.materials.values())).absorption.centers
    air_factor = None
    if config.air_absorption:
        att = air_attenuation_for(centers)
        air_factor = 10.0 ** (-att / 10.0)  # per metre, energy

    escaped_total = 0
    starts = list(range(0, config.num_rays, config.batch_size))
    for batch_idx, start in enumerate(starts):
        nb = min(config.batch_size, config.num_rays - start)
        rng = np.random.default_rng(
            np.random.SeedSequence(config.rng_seed, spawn_key=(batch_idx,))
        )
        h, esc = _trace_batch(
            pd, source, receiver, config, rng, nb, grid, hist.shape, norm,
            min_specular_order, air_factor, c,
        )
        hist += h
        escaped_total += esc

    if escaped_total > 0.01 * config.num_rays:
        raise SimulationError(
            f"{escaped_total} of {config.num_rays} rays escaped the model; "
            "room is not closed"
        )
    try:
        from .geometry import compute_volume

        vol = compute_volume(model)
    except Exception:
        vol = 0.0
    return Reflectogram(
        time_bin_width=config.time_bin_width,
        directions=grid,
        histogram=hist,
        arrivals=(),
        band_centers=tuple(centers),
        escaped_rays=escaped_total,
        num_rays=config.num_rays,
        volume=vol,
    )


def _trace_batch(
    pd, source, receiver, config, rng, nb, grid, hist_shape, norm,
    min_specular_order, air_factor, c,
):
    hist = np.zeros(hist_shape)
    nbins = hist_shape[0]
    # uniform directions on the sphere
    dirs = rng.normal(size=(nb, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origin = np.broadcast_to(source, (nb, 3)).copy()
    energy = np.ones((nb, pd.nbands))
    t_path = np.zeros(nb)
    nrefl = np.zeros(nb, dtype=int)
    diffused = np.zeros(nb, dtype=bool)
    alive = np.ones(nb, dtype=bool)
    escaped = 0
    r2 = config.receiver_radius**2

    for _ in range(100_000):
        if not alive.any():
            break
        best_t = np.full(nb, np.inf)
        best_poly = np.full(nb, -1)
        for p in range(pd.count):
            n = pd.normals[p]
            denom = dirs @ n
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (pd.offsets[p] - origin @ n) / denom
            t = np.where(np.abs(denom) > 1e-12, t, np.inf)
            t = np.where(t > 1e-7, t, np.inf)
            cand = alive & np.isfinite(t) & (t < best_t)
            if cand.any():
                pts = origin[cand] + t[cand, None] * dirs[cand]
                ok = pd.points_inside(p, pts)
                idx = np.flatnonzero(cand)[ok]
                best_t[idx] = t[idx]
                best_poly[idx] = p

        # receiver sphere crossing on the current segment
        remaining = (config.max_time - t_path) * c
        seg = np.minimum(best_t, remaining)
        rel = receiver - origin
        s_proj = np.einsum("ij,ij->i", rel, dirs)
        b2 = np.einsum("ij,ij->i", rel, rel) - s_proj**2
        crossing = (
            alive
            & (b2 < r2)
            & (s_proj > 1e-9)
            & (s_proj < seg)
            & (diffused | (nrefl >= min_specular_order))
        )
        if crossing.any():
            chord = 2.0 * np.sqrt(r2 - b2[crossing])
            t_cross = t_path[crossing] + s_proj[crossing] / c
            bins = np.minimum(
                (t_cross / config.time_bin_width).astype(int), nbins - 1
            )
            arrive_dir = -dirs[crossing]
            cells = np.argmax(arrive_dir @ grid.T, axis=1)
            w = energy[crossing] * (chord * norm)[:, None]
            if air_factor is not None:
                dist_total = t_cross * c
                w = w * air_factor[None, :] ** dist_total[:, None]
            np.add.at(hist, (bins, cells), w)

        # rays that leave the model or run out of time
        esc = alive & ~np.isfinite(best_t) & (remaining > 0)
        escaped += int(esc.sum())
        timeout = alive & (best_t >= remaining)
        alive &= ~(esc | timeout)

        hit = alive
        if not hit.any():
            # keep RNG stream aligned across iterations
            rng.random(nb)
            rng.random(size=(nb, 2))
            continue
        adv = np.where(hit, best_t, 0.0)
        t_path = t_path + adv / c
        origin = origin + adv[:, None] * dirs
        polys = best_poly.copy()
        polys[~hit] = 0

        energy = energy * np.where(hit[:, None], 1.0 - pd.alpha[polys], 1.0)
        nrefl = nrefl + hit.astype(int)

        u_scatter = rng.random(nb)
        u_diff = rng.random(size=(nb, 2))
        p_diffuse = np.maximum(pd.scatter_mean[polys], config.diffusion_floor)
        go_diffuse = hit & (u_scatter < p_diffuse)

        normals = pd.normals[polys]
        ndot = np.einsum("ij,ij->i", dirs, normals)
        spec = dirs - 2.0 * ndot[:, None] * normals

        # cosine-weighted hemisphere on the incident side
        n_eff = -np.sign(ndot)[:, None] * normals
        a = np.where(np.abs(n_eff[:, 0:1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
        t1 = np.cross(n_eff, a)
        t1 /= np.maximum(np.linalg.norm(t1, axis=1, keepdims=True), 1e-30)
        t2 = np.cross(n_eff, t1)
        z = np.sqrt(u_diff[:, 0])
        rad = np.sqrt(1.0 - u_diff[:, 0])
        phi = 2.0 * math.pi * u_diff[:, 1]
        diff = (
            rad[:, None] * np.cos(phi)[:, None] * t1
            + rad[:, None] * np.sin(phi)[:, None] * t2
            + z[:, None] * n_eff
        )
        dirs = np.where(hit[:, None], np.where(go_diffuse[:, None], diff, spec), dirs)
        diffused |= go_diffuse
        # nudge off the surface
        origin = origin + np.where(hit[:, None], 1e-9, 0.0) * dirs

        dead = energy.max(axis=1) < 1e-8
        alive &= ~dead
    return hist, escaped


def simulate(model: RoomModel, source, receiver, config: SimConfig) -> Reflectogram:
    """Hybrid run: image sources up to the configured order, rays beyond."""
    arrivals = image_sources(model, source, receiver, config.image_source_order)
    if config.air_absorption:
        centers = next(iter(model.materials.values())).absorption.centers
        att = air_attenuation_for(centers)
        adjusted = []
        for a in arrivals:
            d = a.time * model.speed_of_sound
            factor = 10.0 ** (-att * d / 10.0)
            adjusted.append(replace(a, energy_per_band=a.energy_per_band * factor))
        arrivals = adjusted
    reflecto = trace(
        model, source, receiver, config,
        min_specular_order=config.image_source_order + 1,
    )
    reflecto.arrivals = tuple(arrivals)
    return reflecto


# ---------------------------------------------------------------------------
# Ambisonics synthesis

def synthesize_air(reflecto: Reflectogram, config: SimConfig) -> AmbisonicsIR:
    """Turn a reflectogram into an ACN/SN3D Ambisonics impulse response.

    Deterministic arrivals become band-filtered pulses with spherical
    harmonic weights; the stochastic histogram is realized as a Poisson
    pulse process per direction cell. Each part is calibrated so its
    omni-channel energy equals its reflectogram energy.
    """
    if reflecto.total_energy() <= 0:
        raise SimulationError("empty reflectogram")
    fs = float(config.sample_rate)
    order = config.ambisonics_order
    nch = (order + 1) ** 2
    nbands = reflecto.histogram.shape[2]
    nbins = reflecto.histogram.shape[0]
    n = int(round(reflecto.time_bin_width * nbins * fs)) + 1
    if n > 20_000_000:
        raise SimulationError("impulse response would be unreasonably long")
    centers = tuple(reflecto.band_centers) or tuple(OCTAVE_CENTERS[:nbands])
    if len(centers) != nbands:
        raise SimulationError("band centers do not match the histogram band count")
    kernels = filters.band_kernels(fs, centers)
    half = kernels.shape[1] // 2
    rng = np.random.default_rng(np.random.SeedSequence(config.rng_seed, spawn_key=(0xA1B,)))

    channels = np.zeros((nch, n))

    # deterministic part
    det_energy = reflecto.deterministic_energy()
    if det_energy > 0:
        det = np.zeros((nch, n))
        for b in range(nbands):
            train = np.zeros((nch, n))
            for a in reflecto.arrivals:
                idx = int(round(a.time * fs))
                if idx >= n:
                    continue
                amp = math.sqrt(float(a.energy_per_band[b]))
                train[:, idx] += amp * sh.sh_encode(a.direction, order)
            if train.any():
                conv = fftconvolve(train, kernels[b][None, :], mode="full", axes=1)
                det += conv[:, half:half + n]
        actual = float(np.dot(det[0], det[0]))
        if actual > 0:
            det *= math.sqrt(det_energy / actual)
        channels += det

    # stochastic tail: Poisson pulse process, density growing with t^2
    sto_energy = reflecto.stochastic_energy()
    if sto_energy > 0:
        sto = np.zeros((nch, n))
        vol = reflecto.volume if reflecto.volume > 0 else 50.0
        c = 343.0
        ncells = reflecto.directions.shape[0]
        bin_samples = max(1, int(round(reflecto.time_bin_width * fs)))
        t_centers = (np.arange(nbins) + 0.5) * reflecto.time_bin_width
        dens = 4.0 * math.pi * c**3 * t_centers**2 / vol
        mean_pulses = np.clip(dens * reflecto.time_bin_width / ncells, 0.5, bin_samples)
        for cell in range(ncells):
            cell_hist = reflecto.histogram[:, cell, :]  # (nbins, nbands)
            if not cell_hist.any():
                continue
            y = sh.sh_encode(reflecto.directions[cell], order)
            cell_sig = np.zeros(n)
            for b in range(nbands):
                ebins = cell_hist[:, b]
                active = np.flatnonzero(ebins > 0)
                if active.size == 0:
                    continue
                train = np.zeros(n)
                counts = rng.poisson(mean_pulses[active])
                counts = np.maximum(counts, 1)
                for bi, k in zip(active, counts):
                    offs = rng.integers(0, bin_samples, size=k)
                    signs = rng.choice([-1.0, 1.0], size=k)
                    amp = math.sqrt(ebins[bi] / k)
                    base = int(round(bi * reflecto.time_bin_width * fs))
                    np.add.at(train, np.minimum(base + offs, n - 1), signs * amp)
                conv = fftconvolve(train, kernels[b], mode="full")
                cell_sig += conv[half:half + n]
            sto += y[:, None] * cell_sig[None, :]
        actual = float(np.dot(sto[0], sto[0]))
        if actual > 0:
            sto *= math.sqrt(sto_energy / actual)
        channels += sto

    # cross terms between the two parts leave a small residual; final
    # calibration pins the omni-channel energy to the reflectogram total
    actual_total = float(np.dot(channels[0], channels[0]))
    if actual_total > 0:
        channels *= math.sqrt(reflecto.total_energy() / actual_total)

    direct_times = [a.time for a in reflecto.arrivals if a.is_direct]
    if direct_times:
        onset = int(round(min(direct_times) * fs))
    elif reflecto.arrivals:
        onset = int(round(min(a.time for a in reflecto.arrivals) * fs))
    else:
        onset = int(np.flatnonzero(reflecto.time_marginal() > 0)[0]
                    * reflecto.time_bin_width * fs)
    onset = min(onset, n - 1)

    return AmbisonicsIR(
        sample_rate=fs,
        order=order,
        channels=channels,
        onset_index=onset,
        arrivals=reflecto.arrivals,
        tail_energy_by_bin=reflecto.time_marginal(),
        time_bin_width=reflecto.time_bin_width,
    )


def remove_direct(air: AmbisonicsIR, window: float = 4.5e-3):
    """Zero the first ``window`` seconds after onset in every channel.

    Returns the reverberation-only IR and the fraction of reverberant
    (non-direct) energy that fell inside the zeroed span, judged from the
    image-source arrival list and the stochastic tail profile.
    """
    span = int(round(window * air.sample_rate))
    if air.onset_index + span > air.num_samples:
        raise ValidationError("removal window extends past the impulse response")
    channels = air.channels.copy()
    channels[:, air.onset_index:air.onset_index + span] = 0.0

    t0 = air.onset_index / air.sample_rate
    t1 = t0 + window
    removed = 0.0
    total = 0.0
    for a in air.arrivals:
        if a.is_direct:
            continue
        e = a.total_energy
        total += e
        if t0 <= a.time < t1:
            removed += e
    if air.tail_energy_by_bin.size:
        centers = (np.arange(air.tail_energy_by_bin.size) + 0.5) * air.time_bin_width
        total += float(air.tail_energy_by_bin.sum())
        inside = (centers >= t0) & (centers < t1)
        removed += float(air.tail_energy_by_bin[inside].sum())
    fraction = removed / total if total > 0 else 0.0

    out = AmbisonicsIR(
        sample_rate=air.sample_rate,
        order=air.order,
        channels=channels,
        onset_index=air.onset_index,
        arrivals=air.arrivals,
        tail_energy_by_bin=air.tail_energy_by_bin,
        time_bin_width=air.time_bin_width,
    )
    return out, fraction


def make_anchor(air: AmbisonicsIR, cutoff: float = 2500.0) -> AmbisonicsIR:
    """Low-pass every channel; the MUSHRA anchor degradation."""
    nyq = air.sample_rate / 2.0
    if cutoff >= nyq:
        raise ValidationError("cutoff must be below Nyquist")
    sos = butter(8, cutoff / nyq, btype="lowpass", output="sos")
    channels = sosfiltfilt(sos, air.channels, axis=1)
    return AmbisonicsIR(
        sample_rate=air.sample_rate,
        order=air.order,
        channels=channels,
        onset_index=air.onset_index,
        arrivals=air.arrivals,
        tail_energy_by_bin=air.tail_energy_by_bin,
        time_bin_width=air.time_bin_width,
    )
