"""Campaign persistence and summary service.

State is a pure fold over an append-only newline-delimited JSON event log:
replaying the log from empty reconstructs identical state, and therefore
byte-identical summaries. Mutations append exactly one event each and are
fsynced before the response; summaries are recomputed on request from the
current record snapshot (evalstats is fast at campaign scale).
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from foundry.config import ConfigSchema, ResolvedConfig, SchemaEntry
from foundry.evalstats import RolloutRecord, campaign_summary, dedup_latest

EVENT_KINDS = ("campaign_created", "rollout_ingested", "target_updated", "campaign_stopped")

_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def new_ulid(now_ms: int | None = None) -> str:
    """Sortable 26-character id: 48-bit millisecond timestamp + 80 random bits."""
    ts = int(time.time() * 1000) if now_ms is None else now_ms
    value = (ts & (1 << 48) - 1) << 80 | int.from_bytes(os.urandom(10), "big")
    chars = []
    for _ in range(26):
        chars.append(_CROCKFORD[value & 31])
        value >>= 5
    return "".join(reversed(chars))


@dataclass
class Campaign:
    id: str
    name: str
    policies: list[str]
    tasks: list[str]
    target_rollouts: dict[str, int]
    status: str = "active"
    rollouts: list[RolloutRecord] = field(default_factory=list)
    seen: set[tuple] = field(default_factory=set)

    def public(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "policies": self.policies,
            "tasks": self.tasks,
            "target_rollouts": self.target_rollouts,
            "status": self.status,
            "rollout_count": len(self.rollouts),
        }


def _record_to_payload(record: RolloutRecord) -> dict:
    return json.loads(record.to_json_line())


def _record_from_payload(payload: dict) -> RolloutRecord:
    return RolloutRecord.from_json_line(json.dumps(payload))


class EventStore:
    """Append-only event log with optional snapshots and in-memory state."""

    def __init__(self, data_dir: str | Path, snapshot_interval: int = 0):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / "events.jsonl"
        self.snapshot_path = self.data_dir / "snapshot.json"
        self.snapshot_interval = snapshot_interval
        self.campaigns: dict[str, Campaign] = {}
        self.seq = 0
        self._lock = threading.Lock()
        self._replay()
        self._handle = self.log_path.open("a", encoding="utf-8")

    # -- persistence ------------------------------------------------------

    def _replay(self) -> None:
        start_seq = 0
        if self.snapshot_path.is_file():
            snap = json.loads(self.snapshot_path.read_text())
            start_seq = snap["seq"]
            self.seq = start_seq
            for doc in snap["campaigns"]:
                campaign = Campaign(
                    id=doc["id"],
                    name=doc["name"],
                    policies=doc["policies"],
                    tasks=doc["tasks"],
                    target_rollouts=doc["target_rollouts"],
                    status=doc["status"],
                    rollouts=[_record_from_payload(r) for r in doc["rollouts"]],
                )
                campaign.seen = {
                    (r.policy, r.task, r.seed, r.timestamp) for r in campaign.rollouts
                }
                self.campaigns[campaign.id] = campaign
        if self.log_path.is_file():
            with self.log_path.open(encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["seq"] <= start_seq:
                        continue
                    self._apply(event)
                    self.seq = event["seq"]

    def _append(self, kind: str, payload: dict) -> dict:
        event = {
            "seq": self.seq + 1,
            "kind": kind,
            "payload": payload,
            "written_at": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
        }
        self._handle.write(json.dumps(event) + "\n")
        self._handle.flush()
        os.fsync(self._handle.fileno())
        self.seq = event["seq"]
        self._apply(event)
        if self.snapshot_interval and self.seq % self.snapshot_interval == 0:
            self._write_snapshot()
        return event

    def _write_snapshot(self) -> None:
        doc = {
            "seq": self.seq,
            "campaigns": [
                {
                    **c.public(),
                    "rollouts": [_record_to_payload(r) for r in c.rollouts],
                }
                for c in self.campaigns.values()
            ],
        }
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc))
        tmp.replace(self.snapshot_path)

    # -- the fold ----------------------------------------------------------

    def _apply(self, event: dict) -> None:
        kind, payload = event["kind"], event["payload"]
        if kind == "campaign_created":
            campaign = Campaign(
                id=payload["id"],
                name=payload["name"],
                policies=list(payload["policies"]),
                tasks=list(payload["tasks"]),
                target_rollouts=dict(payload["target_rollouts"]),
            )
            self.campaigns[campaign.id] = campaign
        elif kind == "rollout_ingested":
            campaign = self.campaigns[payload["campaign_id"]]
            record = _record_from_payload(payload["record"])
            campaign.rollouts.append(record)
            campaign.seen.add((record.policy, record.task, record.seed, record.timestamp))
        elif kind == "target_updated":
            campaign = self.campaigns[payload["campaign_id"]]
            campaign.target_rollouts.update(
                {k: int(v) for k, v in payload["target_rollouts"].items()}
            )
        elif kind == "campaign_stopped":
            self.campaigns[payload["campaign_id"]].status = "stopped"
        else:
            raise ValueError(f"unknown event kind {kind!r}")

    # -- operations ---------------------------------------------------------

    def _require(self, campaign_id: str, active: bool = False) -> Campaign:
        campaign = self.campaigns.get(campaign_id)
        if campaign is None:
            raise HTTPException(status_code=404, detail=f"unknown campaign {campaign_id!r}")
        if active and campaign.status != "active":
            raise HTTPException(status_code=409, detail="campaign is stopped")
        return campaign

    def create_campaign(self, name: str, policies: list[str], tasks: list[str],
                        target_rollouts: dict[str, int]) -> Campaign:
        unknown = set(target_rollouts) - set(tasks)
        if unknown:
            raise HTTPException(
                status_code=422,
                detail=[{"loc": ["body", "target_rollouts"],
                         "msg": f"targets for unknown tasks: {sorted(unknown)}"}],
            )
        with self._lock:
            campaign_id = new_ulid()
            self._append(
                "campaign_created",
                {
                    "id": campaign_id,
                    "name": name,
                    "policies": policies,
                    "tasks": tasks,
                    "target_rollouts": target_rollouts,
                },
            )
            return self.campaigns[campaign_id]

    def ingest(self, campaign_id: str, record: RolloutRecord) -> bool:
        """Returns True when the record was new, False for an idempotent duplicate."""
        with self._lock:
            campaign = self._require(campaign_id, active=True)
            errors = []
            if record.policy not in campaign.policies:
                errors.append({"loc": ["body", "policy"],
                               "msg": f"unknown policy {record.policy!r}"})
            if record.task not in campaign.tasks:
                errors.append({"loc": ["body", "task"],
                               "msg": f"unknown task {record.task!r}"})
            if errors:
                raise HTTPException(status_code=422, detail=errors)
            key = (record.policy, record.task, record.seed, record.timestamp)
            if key in campaign.seen:
                return False
            self._append(
                "rollout_ingested",
                {"campaign_id": campaign_id, "record": _record_to_payload(record)},
            )
            return True

    def update_targets(self, campaign_id: str, targets: dict[str, int]) -> Campaign:
        with self._lock:
            campaign = self._require(campaign_id, active=True)
            unknown = set(targets) - set(campaign.tasks)
            if unknown:
                raise HTTPException(
                    status_code=422,
                    detail=[{"loc": ["body", "target_rollouts"],
                             "msg": f"targets for unknown tasks: {sorted(unknown)}"}],
                )
            self._append("target_updated",
                         {"campaign_id": campaign_id, "target_rollouts": targets})
            return campaign

    def stop(self, campaign_id: str) -> Campaign:
        with self._lock:
            campaign = self._require(campaign_id, active=True)
            self._append("campaign_stopped", {"campaign_id": campaign_id})
            return campaign

    def summary(self, campaign_id: str, view: str = "per_task") -> dict:
        campaign = self._require(campaign_id)
        records = dedup_latest(campaign.rollouts)
        summary = campaign_summary(records, tasks=campaign.tasks, policies=campaign.policies)
        progress = {
            policy: {
                task: {
                    "collected": sum(
                        1 for r in records if r.policy == policy and r.task == task
                    ),
                    "target": campaign.target_rollouts.get(task, 0),
                }
                for task in campaign.tasks
            }
            for policy in campaign.policies
        }
        doc = {
            "campaign": campaign.public(),
            "view": view,
            "progress": progress,
            "policies": summary["policies"],
            "tasks": summary["tasks"],
            "record_count": summary["record_count"],
        }
        if view == "aggregate":
            doc["aggregate"] = summary["aggregate"]
            doc["aggregate_balanced"] = summary["aggregate_balanced"]
            doc["comparison"] = summary["aggregate_comparison"]
        else:
            doc["per_task"] = summary["per_task"]
            doc["comparison"] = summary["per_task_comparison"]
            doc["aggregate"] = summary["aggregate"]
            doc["aggregate_comparison"] = summary["aggregate_comparison"]
        return doc

    def list_rollouts(self, campaign_id: str, policy: str | None = None,
                      task: str | None = None) -> list[dict]:
        campaign = self._require(campaign_id)
        out = []
        for record in campaign.rollouts:
            if policy is not None and record.policy != policy:
                continue
            if task is not None and record.task != task:
                continue
            out.append(_record_to_payload(record))
        return out

    def close(self) -> None:
        self._handle.close()


class CampaignCreate(BaseModel):
    name: str
    policies: list[str] = Field(min_length=1)
    tasks: list[str] = Field(min_length=1)
    target_rollouts: dict[str, int] = {}


class RolloutIn(BaseModel):
    policy: str
    task: str
    seed: int
    success: bool
    timestamp: datetime
    video_uri: str | None = None

    def to_record(self) -> RolloutRecord:
        ts = self.timestamp
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        return RolloutRecord(
            policy=self.policy,
            task=self.task,
            seed=self.seed,
            success=self.success,
            timestamp=ts.astimezone(timezone.utc),
            video_uri=self.video_uri,
        )


class TargetsPatch(BaseModel):
    target_rollouts: dict[str, int]


def config_schema() -> ConfigSchema:
    return ConfigSchema(
        {
            "server.host": SchemaEntry("string", "127.0.0.1"),
            "server.port": SchemaEntry("int", 8080),
            "server.data_dir": SchemaEntry("string", "./campaigns"),
            "server.snapshot_interval": SchemaEntry("int", 0),
            "server.static_dir": SchemaEntry("string", ""),
        }
    )


def create_app(data_dir: str | Path, snapshot_interval: int = 0,
               static_dir: str | Path | None = None) -> FastAPI:
    store = EventStore(data_dir, snapshot_interval)
    app = FastAPI(title="foundry evaluation service")
    app.state.store = store

    @app.post("/campaigns", status_code=201)
    def create_campaign(body: CampaignCreate) -> dict:
        campaign = store.create_campaign(
            body.name, body.policies, body.tasks, body.target_rollouts
        )
        return campaign.public()

    @app.get("/campaigns")
    def list_campaigns() -> list[dict]:
        return [c.public() for c in sorted(store.campaigns.values(), key=lambda c: c.id)]

    @app.get("/campaigns/{campaign_id}")
    def get_campaign(campaign_id: str) -> dict:
        return store._require(campaign_id).public()

    @app.post("/campaigns/{campaign_id}/rollouts")
    async def ingest_rollouts(campaign_id: str, request: Request) -> dict:
        body = await request.json()
        items = body if isinstance(body, list) else [body]
        parsed = []
        for i, item in enumerate(items):
            try:
                parsed.append(RolloutIn.model_validate(item))
            except Exception as exc:
                raise HTTPException(
                    status_code=422,
                    detail=[{"loc": ["body", i], "msg": str(exc)}],
                ) from exc
        ingested = 0
        duplicates = 0
        for rollout in parsed:
            if store.ingest(campaign_id, rollout.to_record()):
                ingested += 1
            else:
                duplicates += 1
        return {"ingested": ingested, "duplicates": duplicates, "duplicate": duplicates > 0}

    @app.patch("/campaigns/{campaign_id}/targets")
    def patch_targets(campaign_id: str, body: TargetsPatch) -> dict:
        return store.update_targets(campaign_id, body.target_rollouts).public()

    @app.post("/campaigns/{campaign_id}/stop")
    def stop_campaign(campaign_id: str) -> dict:
        return store.stop(campaign_id).public()

    @app.get("/campaigns/{campaign_id}/summary")
    def get_summary(campaign_id: str, view: str = Query("per_task")) -> JSONResponse:
        if view not in ("per_task", "aggregate"):
            raise HTTPException(status_code=422, detail=[
                {"loc": ["query", "view"], "msg": "view must be per_task or aggregate"}
            ])
        return JSONResponse(store.summary(campaign_id, view))

    @app.get("/campaigns/{campaign_id}/rollouts")
    def get_rollouts(campaign_id: str, policy: str | None = None,
                     task: str | None = None) -> list[dict]:
        return store.list_rollouts(campaign_id, policy, task)

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app


def serve(config: ResolvedConfig) -> None:
    import uvicorn

    app = create_app(
        data_dir=config["server.data_dir"],
        snapshot_interval=config["server.snapshot_interval"],
        static_dir=config["server.static_dir"] or None,
    )
    uvicorn.run(app, host=config["server.host"], port=config["server.port"])
