"""Acceptance suite: one test and one PASS/FAIL summary line per criterion.

The heavyweight fixtures (a calibrated living-room experiment plan and a
small determinism plan) are session-scoped so multiple criteria can read
from the same artifact tree.
"""

import functools
import math
import os
import time

import numpy as np
import pytest
import yaml

import conftest
from conftest import living_room_model, make_shoebox

from auralize import binaural, ga, geometry, io, metrics, pipeline, sh
from auralize.calibrate import DecayTarget, calibrate

FS = 44100.0


def criterion(name):
    """Record one PASS/FAIL summary line for this criterion."""
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except AssertionError as exc:
                msg = str(exc).splitlines()[0] if str(exc) else "assertion failed"
                conftest.ACCEPTANCE_LINES.append(f"FAIL: {name} — {msg}")
                raise
            except Exception as exc:
                conftest.ACCEPTANCE_LINES.append(
                    f"FAIL: {name} — {type(exc).__name__}: {exc}"
                )
                raise
            line = f"PASS: {name}"
            if detail:
                line += f" — {detail}"
            conftest.ACCEPTANCE_LINES.append(line)
        return wrapper
    return deco


def histogram_t30(model, config, source, receiver):
    reflecto = ga.trace(model, source, receiver, config)
    decay = reflecto.band_decay()
    return np.array([
        metrics.t30(
            metrics.schroeder_from_energy(decay[:, b], reflecto.time_bin_width)
        )
        for b in range(decay.shape[1])
    ])


# ---------------------------------------------------------------------------
# Session fixtures

@pytest.fixture(scope="session")
def living_room_run(tmp_path_factory):
    """Calibrated 66.8 m^3 living room through the full experiment plan."""
    base = tmp_path_factory.mktemp("acceptance")
    model = living_room_model()
    sim = ga.SimConfig(num_rays=30_000, max_time=0.9, rng_seed=13)
    current = histogram_t30(model, sim, model.sources["s1"], model.receivers["far"])
    target = DecayTarget(
        t30=geometry.BandSpectrum(geometry.OCTAVE_CENTERS, tuple(0.95 * current))
    )
    fitted, fit_report = calibrate(model, target, sim)

    geometry.save_room(fitted, base / "room.yaml")
    rng = np.random.default_rng(99)
    io.write_wav(base / "take.wav", rng.normal(size=int(FS * 1.0)) * 0.1, FS)
    doc = {
        "schema": "plan/1",
        "room": "room.yaml",
        "output": "artifacts",
        "sources": {"s1": "take.wav"},
        "receivers": ["near", "far"],
        "seed": 13,
        "num_rays": 30_000,
        "max_time": 0.9,
        "conditions": [
            {"id": "ref", "kind": "reference"},
            {"id": "gr", "kind": "GR", "threshold": "inf"},
            {"id": "br4", "kind": "BR", "bands": 4},
            {"id": "br1", "kind": "BR", "bands": 1},
            {"id": "anchor", "kind": "anchor"},
        ],
    }
    with open(base / "plan.yaml", "w") as fh:
        yaml.safe_dump(doc, fh)
    plan = pipeline.load_plan(base / "plan.yaml")
    manifest = pipeline.run_plan(plan)
    return fitted, fit_report, plan, manifest


def small_plan(base, seed):
    model = make_shoebox(
        dims=(4.0, 3.0, 2.5), absorption=0.3, scattering=0.1,
        sources={"s": (0.9, 0.8, 1.2)}, receivers={"r": (3.0, 2.2, 1.3)},
    )
    geometry.save_room(model, base / "room.yaml")
    io.write_wav(
        base / "take.wav",
        np.random.default_rng(7).normal(size=int(FS * 0.3)) * 0.1, FS,
    )
    doc = {
        "schema": "plan/1",
        "room": "room.yaml",
        "output": "artifacts",
        "sources": {"s": "take.wav"},
        "receivers": ["r"],
        "seed": seed,
        "num_rays": 5000,
        "max_time": 0.4,
        "conditions": [
            {"id": "ref", "kind": "reference"},
            {"id": "br1", "kind": "BR", "bands": 1},
        ],
    }
    with open(base / "plan.yaml", "w") as fh:
        yaml.safe_dump(doc, fh)
    return pipeline.load_plan(base / "plan.yaml")


# ---------------------------------------------------------------------------
# Criteria

@criterion("Eyring agreement (5x4x3 m, alpha 0.2, 1e5 rays)")
def test_eyring_agreement():
    model = make_shoebox(absorption=0.2, scattering=0.0)
    config = ga.SimConfig(num_rays=100_000, max_time=0.8, rng_seed=42)
    start = time.perf_counter()
    t30 = histogram_t30(model, config, model.sources["s"], model.receivers["r"])
    elapsed = time.perf_counter() - start
    err = np.abs(t30 - 0.461) / 0.461
    assert err.max() < 0.10, f"worst band off by {err.max():.1%}"
    assert elapsed < 60.0, f"took {elapsed:.1f} s"
    return f"max band error {err.max():.1%}, {elapsed:.1f} s"


@criterion("image-source exactness (20 random shoeboxes, order <= 2)")
def test_image_source_exactness():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        dims = rng.uniform(2.5, 8.0, 3)
        src = rng.uniform(0.3, 0.7, 3) * dims
        rcv = rng.uniform(0.3, 0.7, 3) * dims
        while np.linalg.norm(src - rcv) < 0.5:
            rcv = rng.uniform(0.3, 0.7, 3) * dims
        model = make_shoebox(
            dims=tuple(dims), sources={"s": tuple(src)}, receivers={"r": tuple(rcv)}
        )
        arrivals = ga.image_sources(model, model.sources["s"], model.receivers["r"], 2)
        got = np.array(sorted(a.time for a in arrivals if not a.is_direct))

        want = []
        for nx in range(-2, 3):
            for ny in range(-2, 3):
                for nz in range(-2, 3):
                    refl = abs(nx) + abs(ny) + abs(nz)
                    if refl == 0 or refl > 2:
                        continue
                    img = [
                        n * L + p if n % 2 == 0 else (n + 1) * L - p
                        for n, L, p in zip((nx, ny, nz), dims, src)
                    ]
                    want.append(np.linalg.norm(np.array(img) - rcv) / 343.0)
        want = np.array(sorted(want))
        assert len(got) == len(want), "arrival count mismatch"
        worst = max(worst, float(np.abs(got - want).max() * FS))
    assert worst < 1.0, f"worst delay error {worst:.2f} samples"
    return f"worst delay error {worst:.3f} samples at 44.1 kHz"


@criterion("calibration to 0.9x T30 (residuals <= 1%, <= 10 iterations)")
def test_calibration_convergence():
    model = make_shoebox(absorption=0.25, scattering=0.2)
    config = ga.SimConfig(num_rays=10_000, max_time=0.7, rng_seed=3)
    current = histogram_t30(model, config, model.sources["s"], model.receivers["r"])
    target = DecayTarget(
        t30=geometry.BandSpectrum(geometry.OCTAVE_CENTERS, tuple(0.9 * current))
    )
    _, report = calibrate(model, target, config)
    assert report.converged
    assert report.iterations <= 10, f"{report.iterations} iterations"
    assert report.t30_residuals.max() <= 0.01, \
        f"residual {report.t30_residuals.max():.3%}"
    return (f"{report.iterations} iterations, "
            f"max residual {report.t30_residuals.max():.2%}")


@criterion("band-reduction centers match the published 4/2/1-band table")
def test_band_reduction_centers():
    octave = geometry.BandSpectrum.octave([0.1] * 8)
    computed = {
        4: (176.8, 707.1, 2828.4, 11313.7),
        2: (353.6, 5656.9),
        1: (1414.2,),
    }
    printed = {4: (177.0, 710.0, 2840.0, 11360.0), 2: (355.0, 5680.0), 1: (1420.0,)}
    for n in (4, 2, 1):
        centers = geometry.band_reduce(octave, n).centers
        assert np.allclose(centers, computed[n], rtol=5e-4), f"{n}-band: {centers}"
        rel = np.abs(np.array(centers) - printed[n]) / np.array(printed[n])
        assert rel.max() < 0.01, f"{n}-band off published values by {rel.max():.2%}"
    return "4/2/1-band geometric-mean centers within 1% of published"


@criterion("direct-path truncation: 198 samples, 6 ms reflection untouched")
def test_truncation_arithmetic():
    n = int(FS * 0.3)
    onset = 400
    refl = onset + int(round(6e-3 * FS))
    channels = np.zeros((16, n))
    channels[0, onset] = 1.0
    channels[0, refl] = 0.5
    arrivals = (
        ga.Arrival(onset / FS, np.array([1.0, 0, 0]), np.full(8, 1.0), "direct"),
        ga.Arrival(refl / FS, np.array([0, 1.0, 0]), np.full(8, 0.25), "specular:1"),
    )
    air = ga.AmbisonicsIR(FS, 3, channels, onset, arrivals=arrivals)
    out, lost = ga.remove_direct(air)
    assert np.all(out.channels[:, onset:onset + 198] == 0.0)
    assert out.channels[0, onset + 198] == air.channels[0, onset + 198]
    assert out.channels[0, refl] == 0.5
    assert lost == 0.0, f"reported {lost:.1%} reverberant loss"
    return "198-sample window, 0% reverberant-energy loss"


@criterion("SH algebra: rotation, decode-encode identity, norm preservation")
def test_sh_algebra():
    rng = np.random.default_rng(31)
    worst_rot = 0.0
    for _ in range(100):
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        angles = rng.uniform(-math.pi, math.pi, 3)
        r = sh.rotation_matrix(*angles)
        a = sh.rotate_coefficients(sh.sh_encode(v, 3), r)
        b = sh.sh_encode(r @ v, 3)
        worst_rot = max(worst_rot, float(np.abs(a - b).max()))
    assert worst_rot < 1e-9, f"rotation mismatch {worst_rot:.1e}"

    layout = binaural.SpeakerLayout.dodecahedron()
    d = binaural.decoding_matrix(layout, 3)
    ident = np.abs(sh.sh_matrix(layout.directions, 3).T @ d - np.eye(16)).max()
    assert ident < 1e-9, f"decode-encode identity error {ident:.1e}"

    coeffs = rng.normal(size=16)
    rot = sh.rotate_coefficients(coeffs, sh.rotation_matrix(0.5, -0.3, 0.8))
    worst_norm = 0.0
    for order in range(4):
        lo, hi = order**2, (order + 1) ** 2
        worst_norm = max(worst_norm, abs(
            np.linalg.norm(rot[lo:hi]) - np.linalg.norm(coeffs[lo:hi])
        ))
    assert worst_norm < 1e-9, f"norm drift {worst_norm:.1e}"
    return f"worst error {max(worst_rot, ident, worst_norm):.1e}"


@criterion("ASW/LEV and JND behavior")
def test_asw_lev_jnd():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(44100)
    diotic = metrics.iacc(np.stack([x, x]), FS)
    asw_d, _ = metrics.asw_lev(diotic, metrics.direct_weight(diotic))
    assert asw_d == 0.0, f"diotic ASW {asw_d}"

    deco = metrics.iacc(rng.standard_normal((2, 44100)), FS)
    asw_u, _ = metrics.asw_lev(deco, metrics.direct_weight(deco))
    assert asw_u > 0.8, f"decorrelated ASW {asw_u:.3f}"
    assert deco.values.mean() < 0.3, f"mean IACC {deco.values.mean():.3f}"

    a = metrics.MetricsReport(asw=0.5, lev=0.5)
    below = metrics.MetricsReport(asw=0.5 + 0.074, lev=0.5)
    above = metrics.MetricsReport(asw=0.5 + 0.076, lev=0.5)
    assert not metrics.jnd_flags(a, below)["asw"]
    assert metrics.jnd_flags(a, above)["asw"]
    return (f"diotic ASW 0, decorrelated ASW {asw_u:.2f}, "
            f"mean IACC {deco.values.mean():.2f}")


@criterion("DRR mix round trip within 0.1 dB")
def test_drr_round_trip():
    rng = np.random.default_rng(0)
    worst = 0.0
    for target in (3.57, -7.57, -8.44):
        direct = np.zeros((2, 300))
        direct[:, 10:100] = rng.normal(size=(2, 90))
        reverb = np.zeros((2, int(FS * 0.4)))
        t = np.arange(reverb.shape[1]) / FS
        reverb[:, 400:] = rng.normal(size=(2, reverb.shape[1] - 400))
        reverb *= np.exp(-3.0 * t)
        stim = binaural.mix(direct, reverb, target, FS)
        measured = metrics.drr(stim.stereo(), sample_rate=FS)
        worst = max(worst, abs(measured - target))
    assert worst < 0.1, f"worst error {worst:.3f} dB"
    return f"worst error {worst:.3f} dB over Table-style targets"


@criterion("anchor separation")
def test_anchor_separation(living_room_run):
    _, _, plan, manifest = living_room_run
    def mean_erb(cid):
        return np.mean([
            manifest["comparisons"][f"{cid}__{r}"]["deltas"]["erb_difference_db"]
            for r in plan.receivers
        ])
    anchor_sd, br4_sd = mean_erb("anchor"), mean_erb("br4")
    assert anchor_sd > br4_sd, f"anchor {anchor_sd:.2f} <= br4 {br4_sd:.2f}"

    # low-pass attenuation at 5 kHz
    rng = np.random.default_rng(2)
    channels = rng.standard_normal((16, int(FS * 0.2))) * 0.01
    channels[0, 100] = 1.0
    air = ga.AmbisonicsIR(FS, 3, channels, 100)
    anchored = ga.make_anchor(air)
    spec_in = np.abs(np.fft.rfft(air.channels[0]))
    spec_out = np.abs(np.fft.rfft(anchored.channels[0]))
    freqs = np.fft.rfftfreq(air.num_samples, 1 / FS)
    band = np.abs(freqs - 5000.0) < 100.0
    atten = 20 * np.log10(spec_out[band].mean() / spec_in[band].mean())
    assert atten < -40.0, f"5 kHz attenuation only {-atten:.1f} dB"

    # identical inputs differ by exactly zero
    x = rng.standard_normal(44100)
    s = metrics.lta_spectrum(x, FS)
    assert metrics.spectral_difference(s, s) == 0.0
    ref_self = manifest["comparisons"][f"ref__{plan.receivers[0]}"]
    assert ref_self["deltas"]["erb_difference_db"] == 0.0
    return (f"anchor {anchor_sd:.2f} dB > br4 {br4_sd:.2f} dB, "
            f"{-atten:.0f} dB at 5 kHz, self-difference 0")


@criterion("run-plan determinism: identical seeds give bit-identical AIRs")
def test_run_plan_determinism(tmp_path_factory):
    outputs = []
    for tag in ("a", "b"):
        base = tmp_path_factory.mktemp(f"det_{tag}")
        plan = small_plan(base, seed=17)
        manifest = pipeline.run_plan(plan)
        assert all(e["status"] == "success" for e in manifest["conditions"])
        outputs.append(plan.output)
    names = sorted(os.listdir(os.path.join(outputs[0], "airs")))
    assert names == sorted(os.listdir(os.path.join(outputs[1], "airs")))
    wavs = [n for n in names if n.endswith(".wav")]
    assert wavs
    for name in wavs:
        with open(os.path.join(outputs[0], "airs", name), "rb") as fh:
            a = fh.read()
        with open(os.path.join(outputs[1], "airs", name), "rb") as fh:
            b = fh.read()
        assert a == b, f"{name} differs between runs"
    return f"{len(wavs)} AIR files bit-identical across two runs"


@criterion("plausibility: calibrated living room, ref-vs-BR1 in 0.5-6 dB at far")
def test_plausibility_band(living_room_run):
    fitted, fit_report, plan, manifest = living_room_run
    volume = geometry.compute_volume(fitted)
    assert 60.0 <= volume <= 80.0, f"volume {volume:.1f} m^3"
    assert fit_report.converged
    assert all(e["status"] == "success" for e in manifest["conditions"])
    sd = manifest["comparisons"]["br1__far"]["deltas"]["erb_difference_db"]
    assert 0.5 <= sd <= 6.0, f"ref-vs-BR1 far difference {sd:.2f} dB"
    return f"{volume:.1f} m^3 room, ref-vs-BR1 far difference {sd:.2f} dB"


@criterion("primary suite independent of the web UI")
def test_primary_runs_without_ui():
    import auralize

    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    assert not hasattr(auralize, "frontend")
    # nothing in the package imports from the frontend tree
    for dirpath, _, files in os.walk(os.path.join(root, "src")):
        for name in files:
            if name.endswith(".py"):
                with open(os.path.join(dirpath, name)) as fh:
                    assert "frontend" not in fh.read()
    return "no Python module references the frontend tree"
