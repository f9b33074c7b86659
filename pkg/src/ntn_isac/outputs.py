"""Run directory layout: CSV series and JSON summaries.

Every file is a deterministic function of (config, seed) except the
``wall_clock_s`` field of ``summary.json``.  Floats are written with
``repr`` so values round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .engine import RunSummary, sinr_to_db
from .metrics import empirical_cdf, rmse

SCHEMA_VERSION = 1
CLASSES = ("hotspot", "victim", "mobile")

RUN_FILES = ("links.csv", "sensing.csv", "tracking.csv", "confusion.json", "cdf_sinr.csv",
             "summary.json")

# column name -> unit, in file order
SCHEMAS = {
    "links.csv": {
        "slot": "index", "mini_slot": "index (-1 = HIBS, whole slot)", "user_id": "id",
        "user_class": "label", "node_kind": "uav|hibs|tn|none", "node_id": "id",
        "sinr_db": "dB", "sinr": "linear", "rate_bps": "bit/s",
    },
    "sensing.csv": {
        "slot": "index", "user_id": "id", "user_class": "label", "serving_uav": "id",
        "mu_hat_hz": "Hz", "sigma_v2": "(m/s)^2", "confidence": "dimensionless",
        "delta_proc": "linear", "predicted": "0/1", "truth": "0/1",
    },
    "tracking.csv": {
        "slot": "index", "user_id": "id", "uav_1": "id", "uav_2": "id", "ref_uav": "id",
        "true_speed": "m/s", "est_speed": "m/s (nan = no solvable geometry)",
        "true_dist": "m", "est_dist": "m",
    },
    "cdf_sinr.csv": {
        "series": "all|hotspot|victim|mobile", "value_db": "dB", "cum_prob": "probability",
    },
    "sweep_medians.csv": {
        "scenario": "ntn|tn", "gamma": "ratio (empty for ntn)",
        "median_all_db": "dB", "median_hotspot_db": "dB", "median_victim_db": "dB",
        "median_mobile_db": "dB",
    },
}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _json_safe(obj):
    """Replace non-finite floats with None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n")


def medians(summary: RunSummary) -> dict:
    out = {"all": summary.median_sinr_db()}
    for k in CLASSES:
        out[k] = summary.median_sinr_db(k)
    return out


def tracking_rmse(rows) -> dict:
    if not rows:
        return {"speed_rmse": None, "distance_rmse": None}
    est = np.array([r["est_speed"] for r in rows])
    true = np.array([r["true_speed"] for r in rows])
    de = np.array([r["est_dist"] for r in rows])
    dt = np.array([r["true_dist"] for r in rows])
    return {"speed_rmse": rmse(est - true), "distance_rmse": rmse(de - dt)}


def write_run(summary: RunSummary, out_dir: str | Path) -> Path:
    """Write the six run files into ``out_dir`` (created if needed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    classes = summary.user_classes

    _write_csv(out / "links.csv", SCHEMAS["links.csv"], (
        (r.slot, r.mini_slot, r.user_id, classes[r.user_id], r.serving_kind, r.serving_id,
         float(sinr_to_db(r.sinr)), r.sinr, r.rate)
        for r in summary.links))

    _write_csv(out / "sensing.csv", SCHEMAS["sensing.csv"], (
        (s.slot, s.user_id, s.user_class, s.serving_uav, s.mu_hat, s.sigma_v2, s.confidence,
         s.delta_proc, s.predicted, s.truth)
        for s in summary.sensing))

    cols = list(SCHEMAS["tracking.csv"])
    _write_csv(out / "tracking.csv", cols, ([row[c] for c in cols] for row in summary.tracking))

    cdf_rows = []
    for series in ("all", *CLASSES):
        v = summary.sinr_db(None if series == "all" else series)
        if v.size:
            c = empirical_cdf(v)
            cdf_rows += [(series, float(x), float(p)) for x, p in zip(c.values, c.probs)]
    _write_csv(out / "cdf_sinr.csv", SCHEMAS["cdf_sinr.csv"], cdf_rows)

    cm = summary.confusion
    _write_json(out / "confusion.json", {
        **cm.to_dict(), "scores": summary.scores.to_dict(),
        "positive": "moving", "classes": summary.config["sensing"]["classify_classes"],
    })

    obj = np.array(summary.objective, float)
    _write_json(out / "summary.json", {
        "schema_version": SCHEMA_VERSION,
        "scenario": summary.scenario,
        "label": summary.label,
        "seed": summary.seed,
        "preset": summary.config.get("preset"),
        "gamma": summary.gamma,
        "config": summary.config,
        "n_users": len(classes),
        "n_links": len(summary.links),
        "n_sensing": len(summary.sensing),
        "median_sinr_db": medians(summary),
        "confusion": cm.to_dict(),
        "scores": summary.scores.to_dict(),
        "tracking": tracking_rmse(summary.tracking),
        "objective": {"per_slot": obj.tolist(),
                      "mean": float(obj.mean()) if obj.size else None},
        "audit": summary.audit,
        "metadata": {
            "files": {name: {"columns": list(cols), "units": cols}
                      for name, cols in SCHEMAS.items() if name != "sweep_medians.csv"},
            "cdf_pooling": "pooled over (user, slot, mini-slot) link samples",
            "sinr_db_floor": -300.0,
        },
        "wall_clock_s": summary.wall_clock,
    })
    return out


def write_sweep(summaries, out_dir: str | Path) -> Path:
    """One run directory per summary plus ``sweep_medians.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for s in summaries:
        write_run(s, out / s.label)
        m = medians(s)
        rows.append((s.scenario, s.gamma, m["all"], m["hotspot"], m["victim"], m["mobile"]))
    _write_csv(out / "sweep_medians.csv", SCHEMAS["sweep_medians.csv"], rows)
    return out


def read_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
