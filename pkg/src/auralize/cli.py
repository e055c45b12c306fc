"""Command-line entry points.

Each subcommand is a thin wrapper over the library operations; room files,
plan files and HRIR sets use the formats documented in the corresponding
modules.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import binaural, ga, geometry, hrir, io, metrics, pipeline
from .calibrate import DecayTarget, calibrate
from .errors import AuralizeError


@click.group()
def main():
    """Room-acoustic simulation, auralization and evaluation toolkit."""


def _fail(exc):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _sim_config(rays, max_time, fs, seed) -> ga.SimConfig:
    return ga.SimConfig(
        num_rays=rays, max_time=max_time, sample_rate=fs, rng_seed=seed
    )


@main.command()
@click.argument("room", type=click.Path(exists=True))
@click.option("-o", "--output", required=True, help="output AIR WAV path")
@click.option("--source", default=None, help="source label (default: first)")
@click.option("--receiver", default=None, help="receiver label (default: first)")
@click.option("--rays", default=100_000, show_default=True)
@click.option("--max-time", default=1.0, show_default=True, help="seconds")
@click.option("--fs", default=44100.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
def simulate(room, output, source, receiver, rays, max_time, fs, seed):
    """Simulate a room and write a third-order Ambisonics IR."""
    try:
        model = geometry.validate(geometry.load_room(room))
        src = model.sources[source] if source else next(iter(model.sources.values()))
        rcv = model.receivers[receiver] if receiver else next(iter(model.receivers.values()))
        config = _sim_config(rays, max_time, fs, seed)
        reflecto = ga.simulate(model, src, rcv, config)
        air = ga.synthesize_air(reflecto, config)
        io.write_air(output, air)
    except (AuralizeError, KeyError) as exc:
        _fail(exc)
    click.echo(f"wrote {output} ({air.num_samples} samples, onset {air.onset_index})")


@main.command()
@click.argument("room", type=click.Path(exists=True))
@click.option("-o", "--output", required=True)
@click.option("--threshold", default=0.0, show_default=True,
              help="drop polygons below this area (m^2); 'inf' collapses to a shoebox")
@click.option("--remove-tag", multiple=True, help="drop polygons carrying this tag")
@click.option("--shoebox", "as_shoebox", is_flag=True,
              help="volume-matched shoebox instead of decimation")
def decimate(room, output, threshold, remove_tag, as_shoebox):
    """Geometrically reduce a room model, conserving absorption area."""
    try:
        model = geometry.load_room(room)
        if as_shoebox:
            reduced = geometry.to_shoebox(model)
        else:
            reduced = geometry.decimate(model, threshold, frozenset(remove_tag))
        geometry.save_room(reduced, output)
    except AuralizeError as exc:
        _fail(exc)
    for w in reduced.warnings_:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"wrote {output} ({len(reduced.polygons)} polygons)")


@main.command("band-reduce")
@click.argument("room", type=click.Path(exists=True))
@click.option("-o", "--output", required=True)
@click.option("--bands", type=click.Choice(["4", "2", "1"]), required=True)
def band_reduce(room, output, bands):
    """Reduce every material to 4, 2 or 1 averaged octave bands."""
    try:
        reduced = geometry.band_reduce_model(geometry.load_room(room), int(bands))
        geometry.save_room(reduced, output)
    except AuralizeError as exc:
        _fail(exc)
    centers = next(iter(reduced.materials.values())).absorption.centers
    click.echo(f"wrote {output} (band centers: {', '.join(f'{c:.1f}' for c in centers)} Hz)")


@main.command("calibrate")
@click.argument("room", type=click.Path(exists=True))
@click.option("-o", "--output", required=True)
@click.option("--t30", required=True,
              help="target seconds: one value, or comma-separated per band")
@click.option("--tolerance", default=0.01, show_default=True)
@click.option("--rays", default=100_000, show_default=True)
@click.option("--max-time", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
def calibrate_cmd(room, output, t30, tolerance, rays, max_time, seed):
    """Scale absorption so simulated T30 matches a target per band."""
    try:
        model = geometry.load_room(room)
        centers = next(iter(model.materials.values())).absorption.centers
        parts = [float(p) for p in t30.split(",")]
        if len(parts) == 1:
            parts = parts * len(centers)
        target = DecayTarget(
            t30=geometry.BandSpectrum(centers, parts), tolerance=tolerance
        )
        fitted, report = calibrate(
            model, target, _sim_config(rays, max_time, 44100.0, seed)
        )
        geometry.save_room(fitted, output)
    except AuralizeError as exc:
        _fail(exc)
    click.echo(report.to_text(), nl=False)
    click.echo(f"wrote {output}")


@main.command()
@click.argument("room", type=click.Path(exists=True))
@click.argument("air", type=click.Path(exists=True))
@click.argument("signal", type=click.Path(exists=True))
@click.option("-o", "--output", required=True, help="output stereo WAV")
@click.option("--source", default=None, help="source label (default: first)")
@click.option("--receiver", default=None, help="receiver label (default: first)")
@click.option("--hrir", "hrir_path", default="synthetic", show_default=True,
              help="HRIR-set directory, or 'synthetic'")
@click.option("--yaw", default=0.0, show_default=True, help="head yaw, radians")
@click.option("--drr", default=None, type=float,
              help="target direct-to-reverberant ratio in dB (default: physical)")
def render(room, air, signal, output, source, receiver, hrir_path, yaw, drr):
    """Render a binaural stimulus from an anechoic signal and an AIR."""
    try:
        model = geometry.load_room(room)
        air_data = io.read_air(air)
        fs, sig = io.read_wav(signal)
        if fs != air_data.sample_rate:
            raise AuralizeError(
                f"signal rate {fs:g} differs from AIR rate {air_data.sample_rate:g}"
            )
        src = source or next(iter(model.sources))
        rcv = receiver or next(iter(model.receivers))
        hrirs = (hrir.synthetic_hrir_set(sample_rate=air_data.sample_rate)
                 if hrir_path == "synthetic" else hrir.load_hrir_set(hrir_path))
        targets = {src: drr} if drr is not None else None
        stim = binaural.render_scene(
            [(sig.mean(axis=0), src)], {src: air_data}, hrirs, model, rcv,
            head_yaw=yaw, target_drrs=targets,
        )
        data = stim.stereo()
        peak = np.abs(data).max()
        if peak > 0:
            data = data * (0.5 / peak)
        io.write_wav(output, data, air_data.sample_rate)
    except (AuralizeError, KeyError) as exc:
        _fail(exc)
    click.echo(f"wrote {output}")


@main.command()
@click.argument("air", type=click.Path(exists=True))
@click.option("-o", "--output", required=True)
@click.option("--cutoff", default=2500.0, show_default=True, help="Hz")
def anchor(air, output, cutoff):
    """Low-pass an AIR into the MUSHRA anchor."""
    try:
        io.write_air(output, ga.make_anchor(io.read_air(air), cutoff))
    except AuralizeError as exc:
        _fail(exc)
    click.echo(f"wrote {output}")


@main.command("metrics")
@click.argument("brir", type=click.Path(exists=True))
def metrics_cmd(brir):
    """Decay, DRR, IACC-based ASW/LEV for a binaural impulse response."""
    try:
        fs, data = io.read_wav(brir)
        if data.shape[0] != 2:
            raise AuralizeError("expected a two-channel BRIR")
        report = metrics.MetricsReport()
        for c in geometry.OCTAVE_CENTERS:
            report.t30[c] = report.edt[c] = float("nan")
            try:
                curve = metrics.schroeder_decay(data.mean(axis=0), c, fs)
                report.t30[c] = metrics.t30(curve)
                report.edt[c] = metrics.edt(curve)
            except AuralizeError:
                pass
        try:
            report.drr_db = metrics.drr(data, sample_rate=fs)
        except AuralizeError:
            pass
        mat = metrics.iacc(data, fs)
        report.asw, report.lev = metrics.asw_lev(mat, metrics.direct_weight(mat))
    except AuralizeError as exc:
        _fail(exc)
    click.echo(report.to_text(), nl=False)


@main.command()
@click.argument("reference", type=click.Path(exists=True))
@click.argument("condition", type=click.Path(exists=True))
def compare(reference, condition):
    """JND-flagged deltas between two stimuli (LTA spectra and ASW/LEV)."""
    try:
        fs_a, a = io.read_wav(reference)
        fs_b, b = io.read_wav(condition)
        if fs_a != fs_b:
            raise AuralizeError("sample rates differ")
        sd = metrics.spectral_difference(
            metrics.lta_spectrum(a, fs_a), metrics.lta_spectrum(b, fs_b)
        )
        rep = {}
        for name, data in (("reference", a), ("condition", b)):
            if data.shape[0] == 2:
                mat = metrics.iacc(data, fs_a)
                asw, lev = metrics.asw_lev(mat, metrics.direct_weight(mat))
                rep[name] = (asw, lev)
        out = {"erb_difference_db": sd}
        if len(rep) == 2:
            out["delta_asw"] = rep["condition"][0] - rep["reference"][0]
            out["delta_lev"] = rep["condition"][1] - rep["reference"][1]
            out["asw_jnd_exceeded"] = abs(out["delta_asw"]) > metrics.ASW_LEV_JND
            out["lev_jnd_exceeded"] = abs(out["delta_lev"]) > metrics.ASW_LEV_JND
    except AuralizeError as exc:
        _fail(exc)
    click.echo(json.dumps(out, indent=2))


@main.command("run-plan")
@click.argument("plan", type=click.Path(exists=True))
def run_plan(plan):
    """Execute an experiment plan and write the artifact tree."""
    try:
        manifest = pipeline.run_plan(pipeline.load_plan(plan), progress=click.echo)
    except AuralizeError as exc:
        _fail(exc)
    failed = [e for e in manifest["conditions"] if e["status"] != "success"]
    for e in failed:
        click.echo(f"condition {e['id']} failed: {e['error']}", err=True)
    click.echo(f"{len(manifest['conditions']) - len(failed)}/"
               f"{len(manifest['conditions'])} conditions succeeded")
    sys.exit(1 if failed else 0)


@main.command()
@click.argument("artifacts", type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(artifacts, host, port):
    """Host stimuli and collect MUSHRA ratings for the web UI."""
    import uvicorn

    from .server import create_app

    try:
        app = create_app(artifacts)
    except AuralizeError as exc:
        _fail(exc)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
