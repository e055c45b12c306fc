"""End-to-end experiment orchestration.

An experiment plan (YAML, schema ``plan/1``) lists a room file, anechoic
source signals, receivers, and a condition matrix: one ``reference``,
geometrically reduced variants (``GR``: decimation threshold and/or tags;
an infinite threshold collapses to the volume-matched shoebox), band
reduced variants (``BR``: 4/2/1 octave bands) and the low-passed
``anchor``. ``run_plan`` materializes an artifact tree (rooms, AIRs,
reverberation-only AIRs, binaural stimuli, metrics) indexed by a manifest
that the rating service and the web UI consume.
"""

from __future__ import annotations

import json
import math
import os
import traceback
from dataclasses import dataclass

import numpy as np
import yaml

from . import binaural, ga, geometry, hrir, io, metrics, sh
from .calibrate import DecayTarget, calibrate
from .errors import ValidationError

PLAN_SCHEMA = "plan/1"
MANIFEST_SCHEMA = "manifest/1"

CONDITION_KINDS = ("reference", "GR", "BR", "anchor")


@dataclass(frozen=True)
class Condition:
    id: str
    kind: str                       # reference | GR | BR | anchor
    threshold: float = 0.0          # GR: minimum polygon area kept (inf -> shoebox)
    tags: frozenset = frozenset()   # GR: polygon tags removed outright
    bands: int = 8                  # BR: target octave-band count

    def __post_init__(self):
        if self.kind not in CONDITION_KINDS:
            raise ValidationError(f"unknown condition kind {self.kind!r}")
        if self.kind == "BR" and self.bands not in (4, 2, 1):
            raise ValidationError("BR bands must be 4, 2 or 1")
        object.__setattr__(self, "tags", frozenset(self.tags))


@dataclass
class ExperimentPlan:
    room: str                       # room file path
    output: str                     # artifact directory
    sources: dict                   # source label -> anechoic WAV path
    receivers: list                 # receiver labels
    conditions: list                # of Condition
    hrir_path: str = "synthetic"    # HRIR-set directory, or "synthetic"
    head_yaw: float = 0.0
    mix_sources: bool = True        # music: one stimulus mixing all sources
    seed: int = 0
    num_rays: int = 100_000
    max_time: float = 1.0
    sample_rate: float = 44100.0

    def __post_init__(self):
        refs = [c for c in self.conditions if c.kind == "reference"]
        if len(refs) != 1:
            raise ValidationError(
                f"plan needs exactly one reference condition, found {len(refs)}"
            )
        ids = [c.id for c in self.conditions]
        if len(set(ids)) != len(ids):
            raise ValidationError("condition ids must be unique")
        if not self.sources:
            raise ValidationError("plan needs at least one source")
        if not self.receivers:
            raise ValidationError("plan needs at least one receiver")

    @property
    def reference(self) -> Condition:
        return next(c for c in self.conditions if c.kind == "reference")


def _condition_from_dict(doc: dict) -> Condition:
    kind = doc.get("kind", "reference")
    threshold = doc.get("threshold", 0.0)
    if isinstance(threshold, str) and threshold.lower() in ("inf", "all"):
        threshold = math.inf
    return Condition(
        id=str(doc["id"]),
        kind=str(kind),
        threshold=float(threshold),
        tags=frozenset(doc.get("tags", ())),
        bands=int(doc.get("bands", 8)),
    )


def load_plan(path) -> ExperimentPlan:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or doc.get("schema") != PLAN_SCHEMA:
        raise ValidationError(f"not a {PLAN_SCHEMA} document: {path}")
    base = os.path.dirname(os.path.abspath(str(path)))

    def resolve(p):
        p = str(p)
        return p if os.path.isabs(p) else os.path.join(base, p)

    sources = {str(k): resolve(v) for k, v in dict(doc["sources"]).items()}
    hrir_path = str(doc.get("hrir", "synthetic"))
    if hrir_path != "synthetic":
        hrir_path = resolve(hrir_path)
    return ExperimentPlan(
        room=resolve(doc["room"]),
        output=resolve(doc["output"]),
        sources=sources,
        receivers=[str(r) for r in doc["receivers"]],
        conditions=[_condition_from_dict(c) for c in doc["conditions"]],
        hrir_path=hrir_path,
        head_yaw=float(doc.get("head_yaw", 0.0)),
        mix_sources=bool(doc.get("mix_sources", True)),
        seed=int(doc.get("seed", 0)),
        num_rays=int(doc.get("num_rays", 100_000)),
        max_time=float(doc.get("max_time", 1.0)),
        sample_rate=float(doc.get("sample_rate", 44100.0)),
    )


# ---------------------------------------------------------------------------
# Condition models

def condition_model(model: geometry.RoomModel, cond: Condition) -> geometry.RoomModel:
    """Apply one condition's simplification to the source room model."""
    if cond.kind in ("reference", "anchor"):
        return model
    if cond.kind == "GR":
        if math.isinf(cond.threshold):
            return geometry.to_shoebox(model)
        return geometry.decimate(model, cond.threshold, cond.tags)
    # BR: reduced coefficient resolution, simulated on the octave grid
    return geometry.band_reduce_model(model, cond.bands, octave_grid=True)


def _reflectogram_t30(reflecto: ga.Reflectogram) -> np.ndarray:
    decay = reflecto.band_decay()
    out = []
    for b in range(decay.shape[1]):
        curve = metrics.schroeder_from_energy(decay[:, b], reflecto.time_bin_width)
        out.append(metrics.t30(curve))
    return np.array(out)


def _brir(reverb_air, direction, distance, hrirs, head_yaw, speed_of_sound):
    """Binaural room impulse response: truncated direct path plus decoded reverb."""
    pulse = np.zeros(8)
    pulse[0] = 1.0
    rot = binaural.sh_rotate(reverb_air, -head_yaw) if head_yaw else reverb_air
    head_dir = np.asarray(direction, dtype=float)
    if head_yaw:
        head_dir = sh.rotation_matrix(-head_yaw) @ head_dir
    direct = binaural.render_direct(
        pulse, head_dir, distance, hrirs, speed_of_sound=speed_of_sound
    )
    reverb = binaural.binauralize(rot, hrirs)
    n = max(direct.shape[1], reverb.shape[1])
    out = np.zeros((2, n))
    out[:, :direct.shape[1]] += direct
    out[:, :reverb.shape[1]] += reverb
    return out


def _metrics_report(brir, air, sample_rate) -> metrics.MetricsReport:
    report = metrics.MetricsReport()
    omni = air.channels[0]
    for c in geometry.OCTAVE_CENTERS:
        report.t30[c] = report.edt[c] = float("nan")
        try:
            curve = metrics.schroeder_decay(omni, c, sample_rate)
        except Exception:
            continue
        for name, fn in (("t30", metrics.t30), ("edt", metrics.edt)):
            try:
                getattr(report, name)[c] = fn(curve)
            except Exception:
                pass
    try:
        report.drr_db = metrics.drr(brir, sample_rate=sample_rate)
    except Exception:
        report.drr_db = float("nan")
    mat = metrics.iacc(brir, sample_rate)
    weights = metrics.direct_weight(mat)
    report.asw, report.lev = metrics.asw_lev(mat, weights)
    return report


def compare(reference: metrics.MetricsReport, condition: metrics.MetricsReport,
            spectral_difference_db: float = float("nan")) -> dict:
    """Per-receiver deltas against the reference plus JND flags."""
    deltas = {
        "asw": condition.asw - reference.asw,
        "lev": condition.lev - reference.lev,
        "drr_db": condition.drr_db - reference.drr_db,
        "t30": {
            f"{c:g}": condition.t30.get(c, float("nan")) - reference.t30[c]
            for c in reference.t30
        },
        "erb_difference_db": spectral_difference_db,
    }
    return {"deltas": deltas, "jnd": metrics.jnd_flags(reference, condition)}


# ---------------------------------------------------------------------------
# run_plan

def _load_signals(plan: ExperimentPlan):
    signals = {}
    for label, path in plan.sources.items():
        fs, data = io.read_wav(path)
        if fs != plan.sample_rate:
            raise ValidationError(
                f"source {label!r}: {fs:g} Hz signal in a {plan.sample_rate:g} Hz plan"
            )
        signals[label] = data.mean(axis=0)
    return signals


def _load_hrirs(plan: ExperimentPlan):
    if plan.hrir_path == "synthetic":
        return hrir.synthetic_hrir_set(sample_rate=plan.sample_rate)
    return hrir.load_hrir_set(plan.hrir_path)


def run_plan(plan: ExperimentPlan, progress=None) -> dict:
    """Execute every condition and return the manifest (also written to disk).

    Failures abort only the condition that raised; the manifest records a
    status and error message per condition.
    """
    say = progress or (lambda msg: None)
    out = plan.output
    for sub in ("rooms", "airs", "reverb", "stimuli", "metrics"):
        os.makedirs(os.path.join(out, sub), exist_ok=True)

    model = geometry.validate(geometry.load_room(plan.room))
    for label in plan.sources:
        if label not in model.sources:
            raise ValidationError(f"source {label!r} not in the room file")
    for label in plan.receivers:
        if label not in model.receivers:
            raise ValidationError(f"receiver {label!r} not in the room file")

    signals = _load_signals(plan)
    hrirs = _load_hrirs(plan)
    sim = ga.SimConfig(
        num_rays=plan.num_rays,
        max_time=plan.max_time,
        sample_rate=plan.sample_rate,
        rng_seed=plan.seed,
    )

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "seed": plan.seed,
        "sample_rate": plan.sample_rate,
        "reference": plan.reference.id,
        "conditions": [],
        "stimuli": {},
        "trials": [],
        "comparisons": {},
    }

    # Reference first: its AIRs seed the anchor and its T30 the GR targets.
    ordered = sorted(
        plan.conditions,
        key=lambda c: {"reference": 0, "GR": 1, "BR": 1, "anchor": 2}[c.kind],
    )
    ref_id = plan.reference.id
    ref_t30 = None          # per-band, from the reference's own simulation
    ref_airs = {}           # (src, recv) -> full AIR
    ref_reports = {}        # recv -> MetricsReport
    ref_spectra = {}        # recv or (src, recv) -> LTA spectrum

    for cond in ordered:
        entry = {"id": cond.id, "kind": cond.kind, "status": "success", "error": None}
        say(f"condition {cond.id} ({cond.kind})")
        try:
            _run_condition(
                plan, cond, model, signals, hrirs, sim, out, manifest,
                ref_id, ref_t30, ref_airs, ref_reports, ref_spectra,
            )
        except Exception as exc:  # per-condition isolation
            entry["status"] = "failure"
            entry["error"] = f"{type(exc).__name__}: {exc}"
            say(f"  failed: {entry['error']}")
            say(traceback.format_exc())
        manifest["conditions"].append(entry)
        if cond.id == ref_id and entry["status"] == "failure":
            # downstream conditions depend on the reference; record and stop
            for later in ordered[ordered.index(cond) + 1:]:
                manifest["conditions"].append({
                    "id": later.id, "kind": later.kind,
                    "status": "failure", "error": "reference condition failed",
                })
            break
        if cond.id == ref_id:
            ref_t30 = manifest.pop("_ref_t30")
            ref_airs.update(manifest.pop("_ref_airs"))
            ref_reports.update(manifest.pop("_ref_reports"))
            ref_spectra.update(manifest.pop("_ref_spectra"))

    # one trial per receiver; every successful condition appears once
    ok = {e["id"] for e in manifest["conditions"] if e["status"] == "success"}
    for recv in plan.receivers:
        stim_ids = [
            f"{cid}__{recv}" for cid in (c.id for c in plan.conditions) if cid in ok
        ]
        stim_ids = [s for s in stim_ids if s in manifest["stimuli"]]
        if stim_ids:
            manifest["trials"].append({
                "id": recv,
                "reference": f"{ref_id}__{recv}",
                "conditions": stim_ids,
            })

    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def _run_condition(plan, cond, model, signals, hrirs, sim, out, manifest,
                   ref_id, ref_t30, ref_airs, ref_reports, ref_spectra):
    is_ref = cond.id == ref_id
    cmodel = condition_model(model, cond)

    # GR conditions are re-calibrated to the reference's simulated decay
    if cond.kind == "GR":
        if ref_t30 is None:
            raise ValidationError("reference condition must succeed before GR")
        centers = next(iter(cmodel.materials.values())).absorption.centers
        target = DecayTarget(t30=geometry.BandSpectrum(centers, tuple(ref_t30)))
        cmodel, fit = calibrate(cmodel, target, sim)
        with open(os.path.join(out, "metrics", f"{cond.id}__calibration.txt"), "w") as fh:
            fh.write(fit.to_text())

    geometry.save_room(cmodel, os.path.join(out, "rooms", f"{cond.id}.yaml"))

    airs = {}
    t30_first = None
    for src in plan.sources:
        for recv in plan.receivers:
            key = f"{cond.id}__{src}__{recv}"
            if cond.kind == "anchor":
                air = ga.make_anchor(ref_airs[(src, recv)])
            else:
                reflecto = ga.simulate(
                    cmodel, cmodel.sources[src], cmodel.receivers[recv], sim
                )
                if t30_first is None:
                    t30_first = _reflectogram_t30(reflecto)
                air = ga.synthesize_air(reflecto, sim)
            io.write_air(os.path.join(out, "airs", key + ".wav"), air)
            reverb_air, _ = ga.remove_direct(air)
            io.write_air(os.path.join(out, "reverb", key + ".wav"), reverb_air)
            airs[(src, recv)] = air

    reports = {}
    spectra = {}
    for recv in plan.receivers:
        receiver = cmodel.receivers[recv]
        stimuli = {}
        for src, signal_data in signals.items():
            air = airs[(src, recv)]
            reverb_air, _ = ga.remove_direct(air)
            vec = cmodel.sources[src] - receiver
            distance = float(np.linalg.norm(vec))
            brir = _brir(
                reverb_air, vec / distance, distance, hrirs,
                plan.head_yaw, cmodel.speed_of_sound,
            )
            n = len(signal_data) + brir.shape[1] - 1
            stim = np.zeros((2, n))
            for ch in range(2):
                stim[ch] = np.convolve(signal_data, brir[ch])
            stimuli[src] = (stim, brir, air)

        first_src = next(iter(stimuli))
        _, brir0, air0 = stimuli[first_src]
        report = _metrics_report(brir0, air0, plan.sample_rate)

        if plan.mix_sources:
            n = max(s.shape[1] for s, _, _ in stimuli.values())
            mix = np.zeros((2, n))
            for s, _, _ in stimuli.values():
                mix[:, :s.shape[1]] += s
            rendered = {f"{cond.id}__{recv}": mix}
        else:
            rendered = {
                f"{cond.id}__{src}__{recv}": s for src, (s, _, _) in stimuli.items()
            }

        for stim_id, data in rendered.items():
            peak = np.abs(data).max()
            if peak > 0:
                data = data * (0.5 / peak)
            path = os.path.join("stimuli", stim_id + ".wav")
            io.write_wav(os.path.join(out, path), data, plan.sample_rate)
            manifest["stimuli"][stim_id] = path

        spectrum = metrics.lta_spectrum(
            next(iter(rendered.values())), plan.sample_rate
        )
        spectra[recv] = spectrum
        reports[recv] = report

        with open(os.path.join(out, "metrics", f"{cond.id}__{recv}.txt"), "w") as fh:
            fh.write(report.to_text())

        ref_report = report if is_ref else ref_reports.get(recv)
        ref_spec = spectrum if is_ref else ref_spectra.get(recv)
        if ref_report is not None:
            sd = metrics.spectral_difference(ref_spec, spectrum)
            manifest["comparisons"][f"{cond.id}__{recv}"] = compare(
                ref_report, report, sd
            )

    if is_ref:
        manifest["_ref_t30"] = list(map(float, t30_first))
        manifest["_ref_airs"] = airs
        manifest["_ref_reports"] = reports
        manifest["_ref_spectra"] = spectra
