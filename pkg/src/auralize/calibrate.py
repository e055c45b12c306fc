"""Absorption calibration: scale material absorption per band until the
simulated T30 matches a target decay within tolerance."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import ga, metrics
from .errors import CalibrationError, ValidationError
from .geometry import (
    BandSpectrum,
    Material,
    RoomModel,
    compute_volume,
    equivalent_absorption_area,
    total_surface,
)

G_MIN, G_MAX = 0.005, 0.995  # clamp for scaled absorption values


@dataclass(frozen=True)
class DecayTarget:
    t30: BandSpectrum               # seconds per band
    edt: BandSpectrum = None        # optional; reported only
    tolerance: float = 0.01

    def __post_init__(self):
        if any(v <= 0 for v in self.t30.values):
            raise ValidationError("T30 targets must be positive")
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be positive")


@dataclass
class FitReport:
    band_centers: tuple
    gains: np.ndarray               # final per-band scale g(b)
    iterations: int
    t30_residuals: np.ndarray       # relative, per band
    t30_simulated: np.ndarray
    edt_simulated: np.ndarray
    edt_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = False

    def to_text(self) -> str:
        lines = [f"[calibration] iterations = {self.iterations}, converged = {self.converged}"]
        for i, c in enumerate(self.band_centers):
            line = (
                f"band {c:g} Hz: g = {self.gains[i]:.4f}, "
                f"T30 = {self.t30_simulated[i]:.4f} s, residual = {self.t30_residuals[i]:.4%}"
            )
            if self.edt_residuals.size:
                line += f", EDT residual = {self.edt_residuals[i]:.4%}"
            lines.append(line)
        return "\n".join(lines) + "\n"


def eyring_rt(model: RoomModel) -> BandSpectrum:
    """Eyring reverberation time per band: 0.161 V / (-S ln(1 - abar))."""
    v = compute_volume(model)
    s = total_surface(model)
    a = equivalent_absorption_area(model)
    abar = a.as_array() / s
    if (abar >= 1.0).any():
        raise CalibrationError("mean absorption >= 1; Eyring time undefined")
    with np.errstate(divide="ignore"):
        rt = np.where(abar > 0, 0.161 * v / (-s * np.log(1.0 - abar)), np.inf)
    return BandSpectrum(a.centers, tuple(rt))


def scale_absorption(model: RoomModel, gains: np.ndarray) -> RoomModel:
    """Multiply every material's per-band absorption by gains (clamped)."""
    materials = {}
    for mid, m in model.materials.items():
        alpha = np.clip(m.absorption.as_array() * gains, G_MIN, G_MAX)
        materials[mid] = Material(
            mid, BandSpectrum(m.absorption.centers, tuple(alpha)), m.scattering
        )
    return replace(model, materials=materials)


def _simulated_decay_times(model: RoomModel, source, receiver, sim: ga.SimConfig):
    """(T30, EDT) per band from the ray-traced energy decay, fixed seed."""
    reflecto = ga.trace(model, source, receiver, sim)
    decay = reflecto.band_decay()
    t30s, edts = [], []
    for b in range(decay.shape[1]):
        curve = metrics.schroeder_from_energy(decay[:, b], reflecto.time_bin_width)
        t30s.append(metrics.t30(curve))
        try:
            edts.append(metrics.edt(curve))
        except Exception:
            edts.append(float("nan"))
    return np.array(t30s), np.array(edts)


def calibrate(
    model: RoomModel,
    target: DecayTarget,
    sim: ga.SimConfig,
    source=None,
    receiver=None,
    max_iters: int = 20,
):
    """Fit a per-band absorption scale so simulated T30 hits the target.

    Secant iteration per band on the deterministic (fixed-seed) simulated
    T30; the initial guess comes from inverting Eyring's formula. Returns
    the scaled model and a FitReport. Geometry, scattering and band
    structure are never touched.
    """
    if source is None:
        source = next(iter(model.sources.values()))
    if receiver is None:
        receiver = next(iter(model.receivers.values()))
    tol = target.tolerance
    t_target = target.t30.as_array()
    nbands = len(t_target)

    v = compute_volume(model)
    s = total_surface(model)
    a_cur = equivalent_absorption_area(model).as_array() / s

    # achievability via Eyring bounds: required mean absorption must fit in (0, 1)
    abar_req = 1.0 - np.exp(-0.161 * v / (s * t_target))
    if (abar_req >= 0.999).any() or (abar_req <= 0.0).any():
        raise CalibrationError(
            f"target T30 unreachable with absorption in (0, 1): "
            f"required mean absorption {np.round(abar_req, 3)}"
        )

    gains = np.ones(nbands)
    t_sim, edt_sim = _simulated_decay_times(model, source, receiver, sim)
    residuals = np.abs(t_sim - t_target) / t_target
    iterations = 0
    if (residuals <= tol).all():
        return model, _report(target, gains, iterations, t_sim, edt_sim, True)

    g_prev = gains.copy()
    t_prev = t_sim.copy()
    # Eyring-inverted first step
    gains = np.clip(
        np.log(1.0 - abar_req) / np.log(1.0 - np.clip(a_cur, 1e-9, 0.999999)),
        0.05,
        20.0,
    )

    for iterations in range(1, max_iters + 1):
        scaled = scale_absorption(model, gains)
        t_sim, edt_sim = _simulated_decay_times(scaled, source, receiver, sim)
        residuals = np.abs(t_sim - t_target) / t_target
        if (residuals <= tol).all():
            return scaled, _report(target, gains, iterations, t_sim, edt_sim, True)
        # per-band secant update; frozen where already within tolerance
        new_g = gains.copy()
        for b in range(nbands):
            if residuals[b] <= tol:
                continue
            dt = t_sim[b] - t_prev[b]
            dg = gains[b] - g_prev[b]
            if abs(dt) < 1e-12 or abs(dg) < 1e-12:
                # fall back to an Eyring-style proportional step
                new_g[b] = gains[b] * (t_sim[b] / t_target[b])
            else:
                new_g[b] = gains[b] + (t_target[b] - t_sim[b]) * dg / dt
        g_prev, t_prev = gains, t_sim
        gains = np.clip(new_g, 0.01, 50.0)

    raise CalibrationError(
        "calibration did not converge within "
        f"{max_iters} iterations; residuals {np.round(residuals, 4)}",
        residuals=residuals,
    )


def _report(target, gains, iterations, t_sim, edt_sim, converged):
    t_target = target.t30.as_array()
    rep = FitReport(
        band_centers=target.t30.centers,
        gains=np.asarray(gains, dtype=float),
        iterations=iterations,
        t30_residuals=np.abs(t_sim - t_target) / t_target,
        t30_simulated=t_sim,
        edt_simulated=edt_sim,
        converged=converged,
    )
    if target.edt is not None:
        e_target = target.edt.as_array()
        with np.errstate(invalid="ignore"):
            rep.edt_residuals = np.abs(edt_sim - e_target) / e_target
    return rep
