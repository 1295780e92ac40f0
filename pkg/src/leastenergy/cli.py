"""Command-line front end: solve, verify, rearrange, oracle, report.

Exit codes: 0 success, 1 solver error, 2 a verdict failed, 64 bad config or
usage, 65 field/config shape mismatch, 74 I/O error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, LeastEnergyError, NotConverged, ShapeMismatch
from .field import load_field, save_field
from .transforms import radial_profile, recenter, schwarz_rearrange

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_VERDICT = 2
EXIT_CONFIG = 64
EXIT_SHAPE = 65
EXIT_IO = 74

log = logging.getLogger("leastenergy")


def _metadata(command: str) -> dict:
    return {
        "command": command,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _dump(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return path


def _save_fields(f, out: Path, stem: str, fmt: str) -> list[Path]:
    paths = []
    if fmt in ("csv", "both"):
        paths.append(save_field(f, out / f"{stem}.csv", "csv"))
    if fmt in ("json", "both"):
        paths.append(save_field(f, out / f"{stem}.bin", "bin"))
    return paths


def run_solve(cfg: RunConfig) -> int:
    from .solver import solve_least_energy
    from .verify import all_passed, summary_table, verdicts_to_json

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        res = solve_least_energy(cfg.problem, cfg.solver, cfg.grid, cfg.thresholds)
    except NotConverged as exc:
        log.error("solver did not converge: %s", exc)
        if exc.partial is not None:
            _dump(out / "result.json", {"metadata": _metadata("solve"), "config": cfg.to_dict(),
                                        "result": exc.partial.summary(), "status": "not_converged"})
        return EXIT_SOLVER
    except LeastEnergyError as exc:
        log.error("solver error: %s: %s", type(exc).__name__, exc)
        return EXIT_SOLVER
    summary = res.summary()
    _dump(out / "result.json", {"metadata": _metadata("solve"), "config": cfg.to_dict(),
                                "result": summary, "status": "ok"})
    (out / "verdicts.json").write_text(verdicts_to_json(res.verdicts) + "\n")
    centred, c = recenter(res.solution, cfg.problem.p)
    radial_profile(centred, c).to_csv(out / "profile.csv")
    _save_fields(res.solution, out, "solution", cfg.format)
    print(f"T = {res.T:.8g}  alpha = {res.alpha:.6g}  iterations = {res.iterations}"
          f"  ({res.stop_reason})")
    print(summary_table(res.verdicts))
    return EXIT_OK if res.converged and all_passed(res.verdicts) else EXIT_VERDICT


def run_verify(cfg: RunConfig, field_file) -> int:
    from .verify import all_passed, run_field_suite, summary_table, verdicts_to_json

    f = load_field(field_file)
    if f.grid.dim != cfg.grid.dim or f.grid.cells != cfg.grid.cells or f.m != cfg.problem.m:
        raise ShapeMismatch(
            f"field has N={f.grid.dim}, n={f.grid.cells}, m={f.m}; config expects "
            f"N={cfg.grid.dim}, n={cfg.grid.cells}, m={cfg.problem.m}")
    verdicts = run_field_suite(f, cfg.problem, cfg.thresholds, cfg.solver.seed, cfg.directions)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "verdicts.json").write_text(verdicts_to_json(verdicts) + "\n")
    print(summary_table(verdicts))
    return EXIT_OK if all_passed(verdicts) else EXIT_VERDICT


def run_rearrange(field_file, out_path=None) -> int:
    f = load_field(field_file)
    g, table = schwarz_rearrange(f)
    src = Path(field_file)
    dest = Path(out_path) if out_path else src.with_name(src.stem + "_rearranged" + src.suffix)
    save_field(g, dest, "csv" if dest.suffix == ".csv" else "bin")
    table.to_csv(dest.with_name(dest.stem + "_levels.csv"))
    print(f"wrote {dest}")
    return EXIT_OK


def run_oracle(cfg: RunConfig) -> int:
    from .oracle import ground_state

    o = cfg.oracle
    try:
        res = ground_state(cfg.problem, (o["u0_lo"], o["u0_hi"]), tol=o["tol"],
                           r_max=o["r_max"], dr=o["dr"])
    except LeastEnergyError as exc:
        log.error("oracle error: %s: %s", type(exc).__name__, exc)
        return EXIT_SOLVER
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "oracle.json", {
        "metadata": _metadata("oracle"), "config": cfg.to_dict(),
        "result": {"u0": res.u0, "J_ref": res.J_ref, "V_ref": res.V_ref, "T_ref": res.T_ref,
                   "classification": res.classification, "r_end": res.r_end,
                   "pohozaev_relative": res.pohozaev_relative(cfg.problem.N, cfg.problem.p)},
    })
    res.profile.to_csv(out / "oracle_profile.csv")
    print(f"u0 = {res.u0:.12g}  J_ref = {res.J_ref:.8g}  V_ref = {res.V_ref:.8g}"
          f"  T_ref = {res.T_ref:.8g}")
    return EXIT_OK


def run_report(path) -> int:
    from .verify import Verdict, summary_table

    data = json.loads(Path(path).read_text())
    if isinstance(data, list):
        verdict_dicts = data
    else:
        res = data.get("result", {})
        for key in ("T", "alpha", "sigma0", "lambda", "iterations", "converged", "stop_reason",
                    "u0", "J_ref", "V_ref", "T_ref", "classification"):
            if key in res:
                print(f"{key:>14}: {res[key]}")
        for key, val in sorted(res.get("energy", {}).items()):
            print(f"{'energy.' + key:>14}: {val}")
        verdict_dicts = res.get("verdicts", [])
    if verdict_dicts:
        vs = [Verdict(d["name"], d["metric"], d["threshold"], d.get("details", ""), d.get("grid"))
              for d in verdict_dicts]
        print(summary_table(vs))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="leastenergy", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="run configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None)

    common(sub.add_parser("solve", help="compute a least-energy solution and verify it"))
    p = sub.add_parser("verify", help="run the verdict suite on a field file")
    common(p)
    p.add_argument("field_file")
    p = sub.add_parser("rearrange", help="Schwarz rearrangement of a scalar field file")
    p.add_argument("field_file")
    p.add_argument("--out", default=None, help="output field path")
    common(sub.add_parser("oracle", help="radial shooting reference ground state"))
    p = sub.add_parser("report", help="print tables from a result or verdict JSON")
    p.add_argument("json_file")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rearrange":
            return run_rearrange(args.field_file, args.out)
        if args.command == "report":
            return run_report(args.json_file)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
        cfg = load_config(args.config).with_overrides(args.seed, args.out, args.threads)
        if args.command == "solve":
            return run_solve(cfg)
        if args.command == "verify":
            return run_verify(cfg, args.field_file)
        return run_oracle(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ShapeMismatch as exc:
        print(f"shape mismatch: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LeastEnergyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
