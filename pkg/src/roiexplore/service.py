"""Session-oriented HTTP API for live, steerable exploration.

Each session owns one exploration driver thread.  Control commands and ROI
edits land in a queue that the driver drains between steps, so edits are
atomic with respect to candidate selection.  Every appended sample emits a
`discovery` and a `metrics` event into an ordered per-session log; streams
replay the log from any discovery index, which makes reconnection gap-free.

Live diversity metrics need an evaluation embedding.  The embedding is
fitted once, on the Haralick features of the first min(n_init, budget)
samples (or the first 5 if that is smaller); metrics events before the fit
report zero diversity, and the first post-fit event folds in the backlog.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import asdict, replace
from typing import Iterator

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse, Response, StreamingResponse

from .explorer import Explorer, ExplorerConfig, Roi, UnknownFeature
from .features import haralick13, pca_fit, pca_project
from .metrics import (
    CONSTRAINED_BINS_TARGET,
    GLOBAL_BINS_TARGET,
    BinningSpec,
    DiversityTracker,
)
from .systems import SYSTEMS, grid_to_png, make_system

MIN_FIT_SAMPLES = 5


class IllegalTransition(RuntimeError):
    pass


class SessionRuntime:
    """One exploration session: driver thread, event log, command queue."""

    def __init__(self, session_id: str, system_name: str,
                 config: ExplorerConfig, roi: Roi,
                 rollout_steps: int | None = None) -> None:
        self.id = session_id
        self.system_name = system_name
        system = make_system(system_name)
        if rollout_steps is not None:
            system = replace(system, default_config=replace(
                system.default_config, steps=rollout_steps))
        self.explorer = Explorer(system, config, roi)
        self.config = config

        self.lock = threading.RLock()
        self.cond = threading.Condition(self.lock)
        self.state = "idle"
        self.step_quota: int | None = None  # None = run until done/paused
        self.events: list[dict] = []
        self.pngs: list[bytes] = []
        self.metrics_rows: list[tuple[int, int, int, float]] = []
        self._pending_roi: list[tuple[Roi, dict]] = []
        self._closing = False

        self._eval_features: list[np.ndarray] = []
        self._fit_at = max(min(config.n_init, config.budget),
                           MIN_FIT_SAMPLES)
        self._basis = None
        self._tracker: DiversityTracker | None = None

        self._thread = threading.Thread(target=self._drive, daemon=True,
                                        name=f"session-{session_id}")
        self._thread.start()

    # -- event log ---------------------------------------------------------

    def _emit_locked(self, kind: str, payload: dict) -> None:
        self.events.append({"event": kind, "data": payload})
        self.cond.notify_all()

    def _emit_state_locked(self) -> None:
        self._emit_locked("state", {"state": self.state})

    # -- driver ------------------------------------------------------------

    def _drive(self) -> None:
        while True:
            with self.cond:
                # Also woken by queued ROI edits so they apply while paused.
                self.cond.wait_for(
                    lambda: self._closing or self._pending_roi
                    or self.state == "running")
                if self._closing:
                    return
                self._apply_pending_locked()
                if self.state != "running":
                    continue
                if self.explorer.done:
                    self.state = "done"
                    self._emit_state_locked()
                    return
                if self.step_quota is not None and self.step_quota == 0:
                    self.step_quota = None
                    self.state = "paused"
                    self._emit_state_locked()
                    continue

            entry = self.explorer.step()  # slow part, runs unlocked
            png = grid_to_png(entry.observation)
            eval_vec = haralick13(entry.observation)
            entry.observation = None

            with self.cond:
                self.pngs.append(png)
                self._eval_features.append(eval_vec)
                g, c = self._update_metrics_locked(eval_vec,
                                                   entry.classification == 1)
                acc = self._acceptance_locked()
                self.metrics_rows.append((entry.index, g, c, acc))
                self._emit_locked("discovery", {
                    "index": entry.index,
                    "classification": int(entry.classification),
                    "behavior": [float(v) for v in entry.behavior],
                    "constraint_features": {
                        k: float(v)
                        for k, v in entry.constraint_features.items()},
                    "thumbnail_url":
                        f"/sessions/{self.id}/patterns/{entry.index}.png",
                })
                self._emit_locked("metrics", {
                    "index": entry.index,
                    "global_div": g,
                    "constrained_div": c,
                    "acceptance": acc,
                })
                if self.step_quota is not None:
                    self.step_quota -= 1
                if self.explorer.done:
                    self._apply_pending_locked()
                    self.state = "done"
                    self._emit_state_locked()
                    return

    def _update_metrics_locked(self, eval_vec: np.ndarray,
                               inlier: bool) -> tuple[int, int]:
        if self._tracker is None:
            if len(self._eval_features) < self._fit_at:
                return 0, 0
            pooled = np.stack(self._eval_features)
            self._basis = pca_fit(pooled, out_dims=4)
            embedded = pca_project(self._basis, pooled)
            self._tracker = DiversityTracker(
                BinningSpec.from_points(embedded, GLOBAL_BINS_TARGET),
                BinningSpec.from_points(embedded, CONSTRAINED_BINS_TARGET))
            flags = self.explorer.history.classifications() == 1
            for vec, flag in zip(embedded, flags):
                self._tracker.add(vec, bool(flag))
            return (self._tracker.global_diversity,
                    self._tracker.constrained_diversity)
        emb = pca_project(self._basis, eval_vec)
        return self._tracker.add(emb, inlier)

    def _acceptance_locked(self) -> float:
        n = len(self.explorer.history)
        n_init = self.config.n_init
        if n <= n_init:
            return 0.0
        cls = self.explorer.history.classifications()[n_init:]
        return float((cls == 1).mean())

    def _apply_pending_locked(self) -> None:
        while self._pending_roi:
            roi, result = self._pending_roi.pop(0)
            result["inlier_count"] = self.explorer.update_roi(roi)
            result["done"] = True
            self._emit_locked("roi_applied",
                              {"inlier_count": result["inlier_count"],
                               "total": len(self.explorer.history)})

    # -- API surface (called from handler threads) --------------------------

    def control(self, action: str, n: int | None = None) -> str:
        with self.cond:
            if action == "run":
                if self.state not in ("idle", "paused"):
                    raise IllegalTransition(f"run in state {self.state}")
                self.step_quota = None
                self.state = "running"
                self._emit_state_locked()
            elif action == "pause":
                if self.state != "running":
                    raise IllegalTransition(f"pause in state {self.state}")
                self.state = "paused"
                self._emit_state_locked()
            elif action == "step":
                if self.state not in ("idle", "paused"):
                    raise IllegalTransition(f"step in state {self.state}")
                if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                    raise ValueError("step requires an integer n >= 1")
                self.step_quota = n
                self.state = "running"
                self._emit_state_locked()
            else:
                raise ValueError(f"unknown action {action!r}")
            return self.state

    def put_roi(self, roi: Roi) -> dict:
        with self.cond:
            if self.state == "running":
                result: dict = {"done": False}
                self._pending_roi.append((roi, result))
                ok = self.cond.wait_for(lambda: result["done"], timeout=60)
                if not ok:
                    raise RuntimeError("ROI application timed out")
                count = result["inlier_count"]
            else:
                count = self.explorer.update_roi(roi)
                self._emit_locked("roi_applied", {
                    "inlier_count": count,
                    "total": len(self.explorer.history)})
            return {"inlier_count": count,
                    "total": len(self.explorer.history)}

    def snapshot(self) -> dict:
        with self.lock:
            history = self.explorer.history
            inliers = (int((history.classifications() == 1).sum())
                       if len(history) else 0)
            if self.metrics_rows:
                _, g, c, acc = self.metrics_rows[-1]
            else:
                g, c, acc = 0, 0, 0.0
            return {
                "id": self.id,
                "system": self.system_name,
                "state": self.state,
                "config": asdict(self.config),
                "roi": self.explorer.roi.to_dict(),
                "history_length": len(history),
                "inlier_count": inliers,
                "metrics": {
                    "global_diversity": g,
                    "constrained_diversity": c,
                    "acceptance_rate": acc,
                },
            }

    def event_stream(self, since: int) -> Iterator[str]:
        """Yields SSE frames; replay starts at the first discovery event
        with index >= since (earlier state/roi noise is skipped along with
        the discoveries).  The stream closes once the session is done and
        the log is drained."""
        pos = self._replay_position(since)
        while True:
            with self.cond:
                self.cond.wait_for(
                    lambda: len(self.events) > pos
                    or self.state == "done" or self._closing,
                    timeout=0.25)
                batch = self.events[pos:]
                pos = len(self.events)
                finished = (self.state == "done" or self._closing)
            for ev in batch:
                yield (f"event: {ev['event']}\n"
                       f"data: {json.dumps(ev['data'])}\n\n")
            if finished and not batch:
                return
            if not batch:
                # Keep-alive comment; also gives a disconnected client's
                # generator a chance to be closed.
                yield ": keep-alive\n\n"

    def _replay_position(self, since: int) -> int:
        if since <= 0:
            return 0
        with self.lock:
            for i, ev in enumerate(self.events):
                if (ev["event"] == "discovery"
                        and ev["data"]["index"] >= since):
                    return i
            return len(self.events)

    def history_jsonl(self) -> str:
        with self.lock:
            entries = list(self.explorer.history)
        lines = []
        for e in entries:
            lines.append(json.dumps({
                "index": e.index,
                "params": [float(v) for v in e.params],
                "behavior": [float(v) for v in e.behavior],
                "constraint_features": {k: float(v) for k, v in
                                        e.constraint_features.items()},
                "classification": int(e.classification),
                "observation_id": f"patterns/{e.index}.png",
            }))
        return "".join(line + "\n" for line in lines)

    def metrics_csv(self) -> str:
        with self.lock:
            rows = list(self.metrics_rows)
            flags = self.explorer.history.classifications()
        out = ["sample_index,global_diversity,constrained_diversity,"
               "inlier_flag"]
        for (i, g, c, _), flag in zip(rows, flags):
            out.append(f"{i},{g},{c},{int(flag == 1)}")
        return "\n".join(out) + "\n"

    def close(self) -> None:
        with self.cond:
            self._closing = True
            self.cond.notify_all()
        self._thread.join(timeout=5)


class SessionManager:
    def __init__(self) -> None:
        self._sessions: dict[str, SessionRuntime] = {}
        self._lock = threading.Lock()

    def create(self, system_name: str, config: ExplorerConfig, roi: Roi,
               rollout_steps: int | None = None) -> SessionRuntime:
        session_id = uuid.uuid4().hex[:16]
        runtime = SessionRuntime(session_id, system_name, config, roi,
                                 rollout_steps)
        with self._lock:
            self._sessions[session_id] = runtime
        return runtime

    def get(self, session_id: str) -> SessionRuntime:
        with self._lock:
            runtime = self._sessions.get(session_id)
        if runtime is None:
            raise KeyError(session_id)
        return runtime

    def close_all(self) -> None:
        with self._lock:
            sessions = list(self._sessions.values())
        for s in sessions:
            s.close()


def create_app() -> FastAPI:
    manager = SessionManager()
    app = FastAPI(title="exploration service", on_shutdown=[manager.close_all])
    app.state.manager = manager

    def _session(session_id: str) -> SessionRuntime:
        try:
            return manager.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")

    def _parse_roi(raw) -> Roi:
        if raw is None:
            return Roi()
        try:
            return Roi.from_dict(raw)
        except UnknownFeature as exc:
            raise HTTPException(status_code=422,
                                detail=f"unknown constraint feature: {exc}")
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.json()
        system_name = body.get("system")
        if system_name not in SYSTEMS:
            raise HTTPException(
                status_code=422,
                detail=f"system must be one of {sorted(SYSTEMS)}")
        try:
            config = ExplorerConfig(**body.get("config", {}))
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        roi = _parse_roi(body.get("roi"))
        rollout_steps = body.get("rollout_steps")
        if rollout_steps is not None and (not isinstance(rollout_steps, int)
                                          or rollout_steps < 1):
            raise HTTPException(status_code=422,
                                detail="rollout_steps must be a positive int")
        runtime = manager.create(system_name, config, roi, rollout_steps)
        return {"id": runtime.id, "state": runtime.state}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session(session_id).snapshot()

    @app.post("/sessions/{session_id}/control")
    async def control(session_id: str, request: Request):
        runtime = _session(session_id)
        body = await request.json()
        try:
            state = runtime.control(body.get("action"), body.get("n"))
        except IllegalTransition as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"state": state}

    @app.put("/sessions/{session_id}/roi")
    async def put_roi(session_id: str, request: Request):
        runtime = _session(session_id)
        roi = _parse_roi(await request.json())
        return runtime.put_roi(roi)

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str, since: int = 0):
        runtime = _session(session_id)
        return StreamingResponse(runtime.event_stream(since),
                                 media_type="text/event-stream")

    @app.get("/sessions/{session_id}/patterns/{index}.png")
    def pattern(session_id: str, index: int):
        runtime = _session(session_id)
        with runtime.lock:
            if not 0 <= index < len(runtime.pngs):
                raise HTTPException(status_code=404,
                                    detail=f"no pattern at index {index}")
            data = runtime.pngs[index]
        return Response(content=data, media_type="image/png")

    @app.get("/sessions/{session_id}/metrics.csv")
    def metrics_csv(session_id: str):
        return PlainTextResponse(_session(session_id).metrics_csv(),
                                 media_type="text/csv")

    @app.get("/sessions/{session_id}/history.jsonl")
    def history_jsonl(session_id: str):
        return PlainTextResponse(_session(session_id).history_jsonl(),
                                 media_type="application/jsonl")

    return app
