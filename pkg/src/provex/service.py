"""HTTP facade for interactive exploration.

A session pins a dataset, a program and a strategy; materialization (for G and
O2) happens at session creation, mirroring how the hybrid approach pays its
cost during original query execution.  Selections are full result-row value
tuples and are validated against the result before they are accepted, so no
session can ever ask for the provenance of a row that is not in the result.
"""
from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import hybrid
from .data import CATALOG_FILENAME, parse_catalog, parse_relation_csv
from .engine import Database, RelationInstance, eval_program
from .fixtures import corpus
from .ir import Catalog, CatalogEntry, Program, ProvexError, Value
from .parser import ParseError, parse_program
from .provgen import (
    DependencyViolation,
    ProvResult,
    Selection,
    provenance,
    recursive_naive,
)

DEFAULT_IDLE_SECONDS = 1800


class ServiceError(ProvexError):
    def __init__(self, status: int, code: str, message: str, detail: object = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.detail = detail


def value_to_json(v: Value) -> object:
    if isinstance(v, Decimal):
        return str(v)
    return v


def rows_to_json(inst: RelationInstance) -> list[list[object]]:
    return [[value_to_json(v) for v in row] for row in inst.sorted_rows()]


def parse_row(values: list[object], entry: CatalogEntry) -> tuple[Value, ...]:
    if len(values) != len(entry.attributes):
        raise ServiceError(
            422, "bad_row", f"row must have {len(entry.attributes)} values", values
        )
    kinds = entry.attr_kinds or ("text",) * len(entry.attributes)
    out = []
    for v, kind in zip(values, kinds):
        try:
            if kind == "int":
                out.append(int(v))
            elif kind == "decimal":
                out.append(Decimal(str(v)))
            else:
                out.append(str(v))
        except (ValueError, InvalidOperation):
            raise ServiceError(422, "bad_value", f"cannot read {v!r} as {kind}") from None
    return tuple(out)


@dataclass
class SessionState:
    id: str
    dataset_id: str
    program: Program
    strategy: str
    database: Database  # evaluated; includes RK for O2
    plan: hybrid.MaterializationPlan | None
    plan_stats: hybrid.PlanStats | None
    store: hybrid.EagerStore | None
    selection: Selection
    created: float = field(default_factory=time.monotonic)
    last_used: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def result(self) -> RelationInstance:
        return self.database[self.program.result_name]


def _rule_depths(program: Program) -> dict[str, int]:
    depths = {program.result_name: 0}
    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            if rule.head_name not in depths:
                continue
            for atom in rule.body_atoms:
                if program.is_view(atom.relation):
                    d = depths[rule.head_name] + 1
                    if depths.get(atom.relation, d + 1) > d:
                        depths[atom.relation] = d
                        changed = True
    return depths


def create_app(
    datasets: dict[str, tuple[Catalog, Database]] | None = None,
    idle_seconds: int = DEFAULT_IDLE_SECONDS,
    ui_dir: str | Path | None = None,
    include_fixtures: bool = True,
) -> FastAPI:
    app = FastAPI(title="provex", version="0.1.0")
    data: dict[str, tuple[Catalog, Database]] = dict(datasets or {})
    suggested: dict[str, str] = {}
    if include_fixtures:
        for f in corpus():
            data.setdefault(f.name, (f.catalog, f.database()))
            suggested[f.name] = f.program_text
        # the worked example doubles as the demo dataset
        if "q18_table1" in data:
            data.setdefault("q18-mini", data["q18_table1"])
            suggested.setdefault("q18-mini", suggested["q18_table1"])
    sessions: dict[str, SessionState] = {}
    sessions_lock = threading.Lock()

    def evict_idle() -> None:
        now = time.monotonic()
        with sessions_lock:
            stale = [sid for sid, s in sessions.items() if now - s.last_used > idle_seconds]
            for sid in stale:
                del sessions[sid]

    def get_session(sid: str) -> SessionState:
        evict_idle()
        with sessions_lock:
            session = sessions.get(sid)
        if session is None:
            raise ServiceError(404, "unknown_session", f"no session {sid}")
        session.last_used = time.monotonic()
        return session

    @app.exception_handler(ServiceError)
    async def service_error_handler(_req: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": str(exc), "detail": exc.detail},
        )

    @app.exception_handler(ProvexError)
    async def provex_error_handler(_req: Request, exc: ProvexError):
        return JSONResponse(
            status_code=400,
            content={"code": "invalid_request", "message": str(exc), "detail": None},
        )

    @app.get("/datasets")
    def list_datasets():
        t0 = time.perf_counter_ns()
        items = [
            {
                "id": name,
                "relations": sorted(
                    n for n, e in cat.entries.items() if e.kind == "base"
                ),
                "suggested_program": suggested.get(name),
            }
            for name, (cat, _) in sorted(data.items())
        ]
        return {
            "datasets": items,
            "strategy": None,
            "elapsed_us": (time.perf_counter_ns() - t0) // 1000,
        }

    @app.post("/datasets")
    async def upload_dataset(files: list[UploadFile], name: str | None = None):
        t0 = time.perf_counter_ns()
        catalog_text = None
        csvs: dict[str, str] = {}
        for f in files:
            body = (await f.read()).decode("utf-8")
            fname = f.filename or ""
            if fname == CATALOG_FILENAME or fname.endswith(".catalog") or f.filename == "catalog":
                catalog_text = body
            elif fname.endswith(".csv"):
                csvs[Path(fname).stem] = body
            else:
                raise ServiceError(400, "bad_upload", f"unrecognized file {fname!r}")
        if catalog_text is None:
            raise ServiceError(400, "bad_upload", f"missing {CATALOG_FILENAME}")
        try:
            catalog = parse_catalog(catalog_text)
            db: Database = {}
            for entry_name, entry in catalog.entries.items():
                if entry_name not in csvs:
                    raise ServiceError(400, "bad_upload", f"missing {entry_name}.csv")
                db[entry_name] = parse_relation_csv(entry, csvs[entry_name])
        except ProvexError as exc:
            raise ServiceError(400, "bad_dataset", str(exc)) from None
        dataset_id = name or f"ds-{uuid.uuid4().hex[:8]}"
        data[dataset_id] = (catalog, db)
        return {
            "dataset": dataset_id,
            "relations": sorted(db),
            "strategy": None,
            "elapsed_us": (time.perf_counter_ns() - t0) // 1000,
        }

    @app.post("/sessions")
    def create_session(payload: dict):
        t0 = time.perf_counter_ns()
        dataset_id = payload.get("dataset")
        program_text = payload.get("program")
        strategy = payload.get("strategy", "O1")
        plan_mode = payload.get("plan_mode", "auto")
        if dataset_id not in data:
            raise ServiceError(404, "unknown_dataset", f"no dataset {dataset_id}")
        if strategy not in ("W", "O1", "G", "O2"):
            raise ServiceError(400, "bad_strategy", f"unknown strategy {strategy!r}")
        catalog, db = data[dataset_id]
        try:
            program = parse_program(program_text or "", catalog)
        except ParseError as exc:
            raise ServiceError(
                400, "parse_error", str(exc), {"line": exc.line, "column": exc.col}
            ) from None
        plan = None
        plan_stats = None
        store = None
        if strategy == "O2":
            if plan_mode == "auto":
                ranked = hybrid.enumerate_plans(program, db)
                plan, plan_stats = ranked[0].plan, ranked[0].stats
            elif plan_mode == "none":
                plan = hybrid.build_plan(program, ())
            elif isinstance(plan_mode, list):
                plan = hybrid.build_plan(program, plan_mode)
            else:
                raise ServiceError(400, "bad_plan_mode", f"bad plan_mode {plan_mode!r}")
            prepared = hybrid.materialize(plan, program, db)
            database = prepared.database
            if plan_stats is None:
                plan_stats = hybrid.compute_plan_stats(plan, program, db)
        elif strategy == "G":
            store = hybrid.eager_materialize(program, db)
            database = eval_program(program, db)
        else:
            database = eval_program(program, db)
        session = SessionState(
            id=f"s-{uuid.uuid4().hex[:12]}",
            dataset_id=dataset_id,
            program=program,
            strategy=strategy,
            database=database,
            plan=plan,
            plan_stats=plan_stats,
            store=store,
            selection=Selection.of(program.result_name, []),
        )
        with sessions_lock:
            sessions[session.id] = session
        result = session.result
        return {
            "session": session.id,
            "strategy": strategy,
            "result": {
                "relation": program.result_name,
                "columns": list(result.schema.attributes),
                "rows": rows_to_json(result),
            },
            "occurrences": occurrence_listing(session),
            "plan": plan_payload(session),
            "elapsed_us": (time.perf_counter_ns() - t0) // 1000,
        }

    def occurrence_listing(session: SessionState) -> list[dict]:
        program = session.program
        depths = _rule_depths(program)
        out = []
        for occ in program.occurrences():
            covered = None
            if session.plan is not None:
                covered = hybrid.rk_key_mapping(program, session.plan, occ) is not None
            out.append(
                {
                    "path": occ.path,
                    "alias": occ.alias,
                    "relation": occ.relation,
                    "rule": occ.rule_head,
                    "depth": depths.get(occ.rule_head, 0),
                    "is_view": occ.is_view,
                    "key_covered": covered,
                }
            )
        return out

    def plan_payload(session: SessionState) -> dict | None:
        if session.plan is None:
            return None
        plan = session.plan
        payload = plan.describe()
        payload["cases"] = {
            occ.path: hybrid.hybrid_retrieval(plan, session.program, occ.path).case
            for occ in session.program.base_occurrences()
        }
        if session.plan_stats is not None:
            stats = session.plan_stats
            benefit, cost = hybrid.benefit_cost(stats)
            payload["stats"] = {
                "rows_r": stats.rows_r,
                "rows_rk": stats.rows_rk,
                "joins_without": stats.joins_without,
                "joins_with": stats.joins_with,
                "benefit": float(benefit),
                "cost": float(cost),
                "score": str(hybrid.score_plan(plan, stats)),
            }
        return payload

    @app.get("/sessions/{sid}")
    def describe_session(sid: str):
        t0 = time.perf_counter_ns()
        session = get_session(sid)
        result = session.result
        return {
            "session": session.id,
            "dataset": session.dataset_id,
            "strategy": session.strategy,
            "result": {
                "relation": session.program.result_name,
                "columns": list(result.schema.attributes),
                "rows": rows_to_json(result),
            },
            "selection": [
                [value_to_json(v) for v in row]
                for row in sorted(session.selection.rows)
            ],
            "occurrences": occurrence_listing(session),
            "plan": plan_payload(session),
            "elapsed_us": (time.perf_counter_ns() - t0) // 1000,
        }

    @app.get("/sessions/{sid}/occurrences")
    def list_occurrences(sid: str):
        t0 = time.perf_counter_ns()
        session = get_session(sid)
        return {
            "occurrences": occurrence_listing(session),
            "strategy": session.strategy,
            "elapsed_us": (time.perf_counter_ns() - t0) // 1000,
        }

    @app.get("/sessions/{sid}/plan")
    def get_plan(sid: str):
        t0 = time.perf_counter_ns()
        session = get_session(sid)
        return {
            "plan": plan_payload(session),
            "strategy": session.strategy,
            "elapsed_us": (time.perf_counter_ns() - t0) // 1000,
        }

    @app.post("/sessions/{sid}/selection")
    def set_selection(sid: str, payload: dict):
        t0 = time.perf_counter_ns()
        session = get_session(sid)
        rows = payload.get("rows", [])
        with session.lock:
            entry = session.result.schema
            parsed = [parse_row(r, entry) for r in rows]
            missing = [r for r in parsed if r not in session.result.rows]
            if missing:
                raise ServiceError(
                    422,
                    "row_not_in_result",
                    "selection must be a subset of the result",
                    {"row": [value_to_json(v) for v in missing[0]]},
                )
            session.selection = Selection.of(session.program.result_name, parsed)
            size = len(session.selection.rows)
        return {
            "selected": size,
            "strategy": session.strategy,
            "elapsed_us": (time.perf_counter_ns() - t0) // 1000,
        }

    @app.get("/sessions/{sid}/provenance/{occurrence}")
    def get_provenance(sid: str, occurrence: str):
        t0 = time.perf_counter_ns()
        session = get_session(sid)
        with session.lock:
            if session.selection.is_empty():
                raise ServiceError(
                    409, "empty_selection", "select result rows before asking for provenance"
                )
            try:
                occ = session.program.occurrence(occurrence)
            except ProvexError as exc:
                raise ServiceError(404, "unknown_occurrence", str(exc)) from None
            result = compute_provenance(session, occ.path)
        stats = result.stats
        return {
            "occurrence": occ.path,
            "relation": occ.relation,
            "is_view": occ.is_view,
            "columns": list(result.rows.schema.attributes),
            "rows": rows_to_json(result.rows),
            "strategy": session.strategy,
            "stats": {
                "strategy": stats.strategy,
                "join_count": stats.join_count,
                "chain_join_count": stats.chain_join_count,
                "query_count": stats.query_count,
                "rows": stats.rows,
                "case": stats.case,
                "elapsed_us": stats.elapsed_us,
            },
            "elapsed_us": (time.perf_counter_ns() - t0) // 1000,
        }

    def compute_provenance(session: SessionState, path: str) -> ProvResult:
        program = session.program
        occ = program.occurrence(path)
        try:
            if session.strategy == "G":
                return hybrid.eager_retrieval(session.store, occ, session.selection)
            if session.strategy == "O2":
                return hybrid.hybrid_provenance(
                    session.plan, program, occ, session.selection, session.database
                )
            return provenance(
                program, path, session.selection, session.strategy, session.database
            )
        except DependencyViolation as exc:
            raise ServiceError(422, "dependency_violation", str(exc)) from None

    @app.get("/sessions/{sid}/oracle/{occurrence}")
    def get_oracle(sid: str, occurrence: str):
        """Debug endpoint: the naive definition's answer for cross-checking."""
        t0 = time.perf_counter_ns()
        session = get_session(sid)
        occ = session.program.occurrence(occurrence)
        rows = recursive_naive(session.program, occ, session.selection, session.database)
        return {
            "occurrence": occ.path,
            "columns": list(rows.schema.attributes),
            "rows": rows_to_json(rows),
            "strategy": "naive",
            "elapsed_us": (time.perf_counter_ns() - t0) // 1000,
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
