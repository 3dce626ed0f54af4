"""Command-line entry point.

Subcommands: ``datagen`` writes a deterministic mini dataset, ``bench``
compares the strategies, ``run`` answers one provenance request, ``plan``
prints the selected materialization, ``serve`` starts the HTTP service.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from . import hybrid
from .data import load_dataset, write_dataset
from .engine import eval_program
from .fixtures import corpus, q18_canonical
from .ir import ProvexError
from .parser import parse_program
from .provgen import Selection, provenance
from .service import create_app, rows_to_json, parse_row


def _parse_scale(text: str) -> tuple[int, int, int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("scale must be customers,orders,lineitems")
    return tuple(parts)  # type: ignore[return-value]


def _load_or_generate(args) -> tuple:
    data_dir = Path(args.data)
    if (data_dir / "catalog.txt").exists():
        return load_dataset(data_dir)
    catalog, db = bench_mod.gen_minitpch(*args.scale, seed=args.seed)
    write_dataset(data_dir, catalog, db)
    return catalog, db


def cmd_datagen(args) -> int:
    catalog, db = bench_mod.gen_minitpch(*args.scale, seed=args.seed)
    write_dataset(args.out, catalog, db)
    sizes = {name: len(inst) for name, inst in db.items()}
    print(f"wrote {args.out}: {sizes}")
    return 0


def cmd_bench(args) -> int:
    catalog, db = _load_or_generate(args)
    programs = {"q18-mini": parse_program(q18_canonical().program_text, catalog)}
    databases = {"q18-mini": db}
    if args.fixtures:
        for f in corpus():
            programs[f.name] = f.program()
            databases[f.name] = f.database()
    strategies = args.strategies.split(",")
    report = bench_mod.BenchReport()
    for name, program in programs.items():
        partial = bench_mod.run_suite(
            databases[name], {name: program}, strategies, args.reps, args.plan
        )
        report.cells.extend(partial.cells)
    fmt = "json" if args.out.endswith(".json") else "csv"
    bench_mod.emit_report(report, fmt, args.out)
    print(f"wrote {args.out} ({len(report.cells)} cells)")
    return 0


def _program_from_args(args, catalog):
    text = Path(args.program).read_text()
    return parse_program(text, catalog)


def cmd_run(args) -> int:
    catalog, db = load_dataset(args.data)
    program = _program_from_args(args, catalog)
    evaluated = eval_program(program, db)
    result = evaluated[program.result_name]
    entry = result.schema
    rows = []
    for text in args.select:
        rows.append(parse_row(text.split(","), entry))
    selection = Selection.of(program.result_name, rows)
    plan = None
    if args.strategy == "O2":
        if args.plan == "auto":
            plan = hybrid.select_plan(program, db)
        elif args.plan == "none":
            plan = hybrid.build_plan(program, ())
        else:
            plan = hybrid.build_plan(program, args.plan.split("+"))
    res = provenance(program, args.table, selection, args.strategy, evaluated, plan)
    payload = {
        "occurrence": args.table,
        "strategy": args.strategy,
        "columns": list(res.rows.schema.attributes),
        "rows": rows_to_json(res.rows),
        "stats": {
            "join_count": res.stats.join_count,
            "chain_join_count": res.stats.chain_join_count,
            "case": res.stats.case,
            "elapsed_us": res.stats.elapsed_us,
        },
    }
    print(json.dumps(payload, indent=2))
    return 0


def cmd_plan(args) -> int:
    catalog, db = load_dataset(args.data)
    program = _program_from_args(args, catalog)
    ranked = hybrid.enumerate_plans(program, db, allow_large=args.allow_large)
    best = ranked[0]
    payload = best.plan.describe()
    payload["cases"] = {
        occ.path: hybrid.hybrid_retrieval(best.plan, program, occ.path).case
        for occ in program.base_occurrences()
    }
    payload["stats"] = {
        "rows_r": best.stats.rows_r,
        "rows_rk": best.stats.rows_rk,
        "joins_without": best.stats.joins_without,
        "joins_with": best.stats.joins_with,
        "benefit": float(best.benefit),
        "cost": float(best.cost),
        "score": str(best.score),
    }
    payload["candidates"] = len(ranked)
    print(json.dumps(payload, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    datasets = {}
    if args.data:
        catalog, db = load_dataset(args.data)
        datasets[Path(args.data).name] = (catalog, db)
    listen = args.listen or os.environ.get("PROVEX_LISTEN", "127.0.0.1:8000")
    host, _, port = listen.rpartition(":")
    ui_dir = args.ui if args.ui else _default_ui_dir()
    app = create_app(datasets, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def _default_ui_dir() -> str | None:
    here = Path(__file__).resolve()
    for base in [Path.cwd()] + list(here.parents):
        candidate = base / "frontend" / "dist"
        if candidate.is_dir():
            return str(candidate)
    return None


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="provex")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="write a deterministic mini dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=_parse_scale, default=(10, 40, 160))
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(fn=cmd_datagen)

    p = sub.add_parser("bench", help="compare strategies on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--scale", type=_parse_scale, default=(10, 40, 160))
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--strategies", default="W,O1,G,O2")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--plan", default="auto", help="auto, none, or path+path")
    p.add_argument("--fixtures", action="store_true", help="also run the fixture corpus")
    p.add_argument("--out", default="report.csv")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("run", help="compute provenance for selected rows")
    p.add_argument("--program", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--select", action="append", required=True,
                   help="comma-separated result row values; repeatable")
    p.add_argument("--table", required=True, help="occurrence (rule.alias or unique name)")
    p.add_argument("--strategy", default="O1", choices=["W", "O1", "G", "O2"])
    p.add_argument("--plan", default="auto")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("plan", help="print the selected materialization plan")
    p.add_argument("--program", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--allow-large", action="store_true", dest="allow_large")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("serve", help="start the exploration service")
    p.add_argument("--listen", default=None, help="host:port (env PROVEX_LISTEN)")
    p.add_argument("--data", default=None)
    p.add_argument("--ui", default=None, help="directory of built UI assets")
    p.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ProvexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
