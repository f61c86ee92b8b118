"""Command-line interface: ``hypcap <command> [options]``.

Commands::

    capacity  --config FILE                      capacity of one constellation
    maximize  --config FILE [--seed N] [--starts K]
    sweep     --config FILE                      two-disk angular or linear sweep
    condense  --config FILE                      ring of m disks vs one disk
    table     --id N [--config FILE]             reproduce a published table
    rerun     RECORD                             re-execute a saved record

``--n`` overrides the discretization size and ``--out`` sets the output path.
Single runs are written as JSON records, grids and table comparisons as CSV
with a JSON record beside them. Exit status is 0 on success, 1 when a table
misses its tolerances or a run fails, and 2 for invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import config as cfgmod
from . import experiments as ex
from ._version import __version__
from .config import ConfigError, ExperimentConfig

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_CONFIG_COMMAND = {"capacity": "capacity", "maximize": "maximize", "sweep": "sweep-two-disks",
                   "condense": "condense", "table": "table"}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypcap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="TOML or JSON experiment config")
        sp.add_argument("--n", type=int, help="override the discretization size")
        sp.add_argument("--out", help="output path (.json record or .csv series)")

    common(sub.add_parser("capacity", help="capacity of one constellation"))
    sp = sub.add_parser("maximize", help="multistart capacity maximization")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--starts", type=int)
    common(sub.add_parser("sweep", help="two-disk capacity sweep"))
    common(sub.add_parser("condense", help="condense a ring of disks into one disk"))
    sp = sub.add_parser("table", help="reproduce a published table")
    common(sp, config_required=False)
    sp.add_argument("--id", type=int, required=True, choices=cfgmod.TABLE_IDS)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--starts", type=int, help="maximization starts per case")
    sp.add_argument("--jobs", type=int, default=1, help="cases run in parallel")
    sp = sub.add_parser("rerun", help="re-execute the config echoed in a record")
    sp.add_argument("record")
    sp.add_argument("--out")
    return p


def _load_config(args) -> ExperimentConfig:
    want = _CONFIG_COMMAND[args.cmd]
    if args.config is None:
        cfg = cfgmod.from_dict({"command": "table", "table": {"id": args.id}})
    else:
        cfg = cfgmod.load(args.config)
        if args.cmd == "table" and cfg.command != "table":
            cfg = replace(cfg, command="table", table=args.id)
        elif cfg.command != want:
            raise ConfigError("command", f"config is for {cfg.command!r}, not {want!r}")
    if args.cmd == "table":
        cfg = replace(cfg, table=args.id)
    o = cfg.optimizer
    if getattr(args, "seed", None) is not None:
        o = replace(o, seed=args.seed)
    if getattr(args, "starts", None) is not None:
        o = replace(o, **{"table_starts" if args.cmd == "table" else "starts": args.starts})
    cfg = replace(cfg, optimizer=o)
    if args.n is not None and args.cmd != "table":
        if args.cmd == "maximize":
            cfg = replace(cfg, optimizer=replace(cfg.optimizer, n_polish=args.n))
        else:
            cfg = replace(cfg, solver=replace(cfg.solver, n=args.n))
    # re-validate the overridden values
    return cfgmod.from_dict(cfg.to_dict())


def _out_path(args, cfg: ExperimentConfig | None) -> Path | None:
    if getattr(args, "out", None):
        return Path(args.out)
    if cfg is not None and cfg.output.path:
        return Path(cfg.output.path)
    return None


def _emit_record(rec: ex.ResultRecord, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(rec.to_json())
        return
    ex.write_record(rec, path)
    print(f"wrote {path}", file=sys.stderr)


def _emit_rows(csv_text: str, rec: ex.ResultRecord, path: Path | None, fmt: str | None) -> None:
    if path is None:
        sys.stdout.write(csv_text)
        return
    if fmt == "json" or (fmt is None and path.suffix.lower() == ".json"):
        _emit_record(rec, path)
        return
    ex.atomic_write(path, csv_text)
    side = path.with_suffix(".json")
    ex.write_record(rec, side)
    print(f"wrote {path} and {side}", file=sys.stderr)


def _print_table(rep: ex.TableReport) -> None:
    for r in rep.rows:
        if r["asserted"]:
            flag = "PASS" if r["passed"] else "FAIL"
        else:
            flag = "  ok" if r["passed"] else "DIFF"
        print(f"{flag} table {r['table']} case {r['case']:>4} {r['quantity']:<6} "
              f"ref {r['reference']:.10g} got {r['computed']:.10g} dev {r['deviation']:.3g} "
              f"tol {r['tolerance']:.0e}", file=sys.stderr)
    print(f"table {rep.table_id}: {'PASS' if rep.passed else 'FAIL'}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "rerun":
            rec = ex.rerun(ex.read_record(args.record))
            _emit_record(rec, Path(args.out) if args.out else None)
            return EXIT_OK
        cfg = _load_config(args)
        path = _out_path(args, cfg)
        if args.cmd == "table":
            rep = ex.run_table(args.id, cfg, jobs=args.jobs, n=args.n)
            _print_table(rep)
            _emit_rows(rep.to_csv(), rep.record, path, cfg.output.format)
            return EXIT_OK if rep.passed else EXIT_FAIL
        out = ex.run(cfg)
        if isinstance(out, ex.Series):
            _emit_rows(out.to_csv(), out.record, path, cfg.output.format)
            return EXIT_OK
        if args.cmd == "maximize" and not out.outputs["best"]["converged"]:
            print("warning: the best run did not meet the stationarity tolerance", file=sys.stderr)
        _emit_record(out, path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"hypcap: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"hypcap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # solver and geometry errors are reported verbatim
        print(f"hypcap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
