"""MUSHRA rating service over a run-plan artifact tree.

Endpoints:
  GET  /api/session/{participant}  trial list, condition order shuffled
                                   deterministically per (participant, trial)
  GET  /stimuli/{stimulus_id}      stimulus WAV bytes
  POST /api/ratings                append rating records (0-100)
  GET  /api/export.csv             all collected ratings

Ratings go to an append-only CSV (participant,trial,condition,rating,
timestamp) serialized with a file lock; there is no database.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import random
from datetime import datetime, timezone

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import FileResponse, PlainTextResponse
from filelock import FileLock

from .errors import ValidationError

CSV_COLUMNS = ("participant", "trial", "condition", "rating", "timestamp")


def _parse_records(body) -> list:
    """Validate a ratings payload; raises HTTP 400 on any malformed record."""
    if isinstance(body, dict) and "records" in body:
        body = body["records"]
    if not isinstance(body, list) or not body:
        raise HTTPException(status_code=400, detail="expected a list of records")
    records = []
    for rec in body:
        if not isinstance(rec, dict):
            raise HTTPException(status_code=400, detail="malformed record")
        try:
            participant = str(rec["participant"])
            trial = str(rec["trial"])
            condition = str(rec["condition"])
            rating = rec["rating"]
        except KeyError as exc:
            raise HTTPException(status_code=400, detail=f"missing field {exc}")
        if not isinstance(rating, int) or isinstance(rating, bool):
            raise HTTPException(status_code=400, detail="rating must be an integer")
        if not 0 <= rating <= 100:
            raise HTTPException(status_code=400, detail="rating outside [0, 100]")
        records.append((participant, trial, condition, rating))
    return records


def shuffled_conditions(participant: str, trial: str, conditions) -> list:
    """Deterministic per-(participant, trial) condition order."""
    digest = hashlib.sha256(f"{participant}:{trial}".encode()).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    order = list(conditions)
    rng.shuffle(order)
    return order


def create_app(artifact_dir) -> FastAPI:
    artifact_dir = os.path.abspath(str(artifact_dir))
    manifest_path = os.path.join(artifact_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise ValidationError(f"no manifest.json in {artifact_dir}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)

    csv_path = os.path.join(artifact_dir, "ratings.csv")
    lock = FileLock(csv_path + ".lock")

    app = FastAPI(title="auralize rating service")

    @app.get("/api/session/{participant}")
    def session(participant: str):
        trials = []
        for trial in manifest["trials"]:
            trials.append({
                "trial": trial["id"],
                "reference": trial["reference"],
                "conditions": shuffled_conditions(
                    participant, trial["id"], trial["conditions"]
                ),
            })
        return {"participant": participant, "trials": trials}

    @app.get("/stimuli/{stimulus_id}")
    def stimulus(stimulus_id: str):
        rel = manifest["stimuli"].get(stimulus_id)
        if rel is None:
            raise HTTPException(status_code=404, detail="unknown stimulus")
        return FileResponse(os.path.join(artifact_dir, rel), media_type="audio/wav")

    @app.post("/api/ratings")
    def ratings(body=Body(...)):
        records = _parse_records(body)
        stamp = datetime.now(timezone.utc).isoformat()
        with lock:
            new_file = not os.path.exists(csv_path)
            with open(csv_path, "a", newline="") as fh:
                writer = csv.writer(fh)
                if new_file:
                    writer.writerow(CSV_COLUMNS)
                for participant, trial, condition, rating in records:
                    writer.writerow([participant, trial, condition, rating, stamp])
        return {"accepted": len(records)}

    @app.get("/api/export.csv")
    def export():
        with lock:
            if not os.path.exists(csv_path):
                return PlainTextResponse(
                    ",".join(CSV_COLUMNS) + "\r\n", media_type="text/csv"
                )
            with open(csv_path) as fh:
                return PlainTextResponse(fh.read(), media_type="text/csv")

    return app
