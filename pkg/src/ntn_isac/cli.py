"""ntn-isac command line: ``run``, ``sweep`` and ``report``.

Exit codes: 0 success, 1 runtime or validation failure, 2 bad config or
missing input files.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import engine, outputs
from .config import PRESETS, ConfigError, SimConfig, load_config, preset
from .metrics import ConfusionMatrix, scores

log = logging.getLogger("ntn_isac")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# acceptance gates checked by ``report``
GATES = {"precision": 0.85, "accuracy": 0.82, "f1": 0.85}


def _parse_gammas(text: str) -> list[float]:
    try:
        return [float(g) for g in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad gamma list {text!r}") from exc


def build_config(args) -> SimConfig:
    """Preset (or defaults), then the config file, then command-line flags."""
    cfg = preset(args.preset) if getattr(args, "preset", None) else SimConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, base=cfg)
    if getattr(args, "scenario", None):
        cfg.engine.scenario = args.scenario
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "audit", False):
        cfg.engine.audit = True
    return cfg.validate()


def _gammas(args) -> list[float] | None:
    out = list(args.gamma or [])
    for chunk in getattr(args, "gammas", None) or []:
        out += chunk
    return out or None


def cmd_run(args) -> int:
    cfg = build_config(args)
    gammas = _gammas(args)
    if gammas:
        cfg.scenario.gamma = gammas[-1]
        cfg.validate()
    summary = engine.run(cfg)
    out = outputs.write_run(summary, args.out_dir)
    m = outputs.medians(summary)
    log.info("%s seed %d: median SINR %.2f dB, %d links, %.2f s -> %s", summary.label,
             summary.seed, m["all"] if m["all"] is not None else float("nan"),
             len(summary.links), summary.wall_clock, out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    summaries = engine.sweep_gamma(cfg, _gammas(args))
    out = outputs.write_sweep(summaries, args.out_dir)
    for s in summaries:
        m = outputs.medians(s)
        log.info("%-14s median SINR %8.2f dB", s.label, m["all"] if m["all"] is not None
                 else float("nan"))
    log.info("wrote %d runs -> %s", len(summaries), out)
    return EXIT_OK


class ReportError(ValueError):
    pass


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path.name} is not valid JSON: {exc}") from exc


def check_confusion(data: dict) -> ConfusionMatrix:
    counts = {}
    for key in ("tp", "fn", "fp", "tn"):
        v = data.get(key)
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ReportError(f"confusion count {key}={v!r} must be a non-negative integer")
        counts[key] = v
    cm = ConfusionMatrix(**counts)
    stored = data.get("scores") or {}
    for name, value in scores(cm).to_dict().items():
        s = stored.get(name)
        if (s is None) != (value is None) or (value is not None and abs(s - value) > 1e-12):
            raise ReportError(f"stored {name}={s!r} disagrees with counts ({value!r})")
    return cm


def _fmt(x, spec=".4f") -> str:
    return "undefined" if x is None else format(x, spec)


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    missing = [f for f in ("summary.json", "confusion.json") if not (run_dir / f).is_file()]
    if missing:
        print(f"error: missing {', '.join(missing)} in {run_dir}", file=sys.stderr)
        return EXIT_CONFIG
    summary = _load_json(run_dir / "summary.json")
    cm = check_confusion(_load_json(run_dir / "confusion.json"))
    sc = scores(cm)

    print(f"run        {summary.get('label')}  seed {summary.get('seed')}  "
          f"preset {summary.get('preset')}")
    print(f"confusion  tp={cm.tp} fn={cm.fn} fp={cm.fp} tn={cm.tn}")
    print(f"scores     A={_fmt(sc.accuracy)} P={_fmt(sc.precision)} "
          f"R={_fmt(sc.recall)} F1={_fmt(sc.f1)}")
    med = summary.get("median_sinr_db", {})
    print("median dB  " + "  ".join(f"{k}={_fmt(med.get(k), '.2f')}"
                                    for k in ("all", *outputs.CLASSES)))
    tr = summary.get("tracking", {})
    print(f"tracking   speed RMSE={_fmt(tr.get('speed_rmse'))} m/s  "
          f"distance RMSE={_fmt(tr.get('distance_rmse'))} m")

    status = EXIT_OK
    audit = summary.get("audit", {})
    n_viol = audit.get("violations", 0)
    if not isinstance(n_viol, int) or n_viol < 0:
        raise ReportError(f"audit violation count {n_viol!r} is malformed")
    print(f"audit      enabled={audit.get('enabled')} C1={audit.get('c1')} "
          f"C2={audit.get('c2')} C3={audit.get('c3')}")
    if n_viol:
        print(f"FAIL: {n_viol} constraint violations recorded")
        status = EXIT_FAIL

    if summary.get("scenario") == "ntn":
        for name, floor in GATES.items():
            v = getattr(sc, name)
            ok = v is not None and v >= floor
            print(f"gate       {name} >= {floor}: {'PASS' if ok else 'FAIL'} ({_fmt(v)})")
    return status


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON config file")
    p.add_argument("--preset", choices=PRESETS, help="named evaluation setup")
    p.add_argument("--scenario", choices=("ntn", "tn"))
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma", type=float, action="append",
                   help="terrestrial failure ratio (repeatable)")
    p.add_argument("--out-dir", default="out", help="output directory (default: out)")
    p.add_argument("--audit", action="store_true", help="abort on any constraint violation")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ntn-isac", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="NTN run plus one terrestrial run per gamma")
    _common(p)
    p.add_argument("--gammas", type=_parse_gammas, action="append",
                   help="comma or space separated gamma list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="summarize and validate a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReportError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (engine.SimulationError, engine.ConstraintViolation) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
