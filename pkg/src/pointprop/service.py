"""HTTP service exposing live labeling sessions.

A session wraps the same :class:`~pointprop.proposal.HilSession` the
library loop uses, so the sequence of proposals for a given label history
is identical to an offline run — the service adds transport, validation
and persistence, never behavior.

Sessions live in memory behind per-session locks.  With an event-log
directory configured, every mutation appends a JSON line so a crashed
store can be rebuilt by replay.
"""

from __future__ import annotations

import io
import json
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import expert as expert_mod
from . import metrics, tensor_io
from .embedding import FeatureField, build_field, l2_normalize
from .errors import DuplicatePointError, OutOfBoundsError, PointPropError
from .proposal import HilConfig, HilSession

DEFAULT_PAYLOAD_LIMIT = 1_200_000_000  # bytes; a 512x512x768 f32 field is ~0.8 GB


class SessionRecord:
    def __init__(
        self,
        session_id: str,
        image_id: str | None,
        field: FeatureField,
        cfg: HilConfig,
        gt: np.ndarray | None,
        strict: bool,
        log_path: Path | None,
        image_png: bytes | None = None,
    ):
        self.id = session_id
        self.image_id = image_id
        self.session = HilSession(field, cfg)
        self.gt = gt
        self.strict = strict
        self.lock = threading.Lock()
        self.log_path = log_path
        self.image_png = image_png  # uploaded display image, if any
        self.deviations: list[dict] = []
        self.pending_proposal: tuple[int, int, float] | None = None

    def log_event(self, event: dict) -> None:
        if self.log_path is None:
            return
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")

    def view(self) -> dict:
        s = self.session
        return {
            "session_id": self.id,
            "image_id": self.image_id,
            "phase": s.phase,
            "labels_count": len(s.labels),
            "budget": s.cfg.budget,
            "initial_points": s.cfg.initial_points,
            "seed_count": s.cfg.seed_count,
            "width": s.field.width,
            "height": s.field.height,
            "k": s.cfg.k,
            "strict": self.strict,
            "evaluation": self.gt is not None,
            "labels": [
                {"x": x, "y": y, "class_id": c} for x, y, c in s.labels.as_rows()
            ],
        }


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def _parse_config(raw: dict | None) -> HilConfig:
    raw = raw or {}
    cfg = HilConfig(
        budget=int(raw.get("budget", 10)),
        similarity_weight=float(raw.get("lambda", raw.get("similarity_weight", 2.2))),
        sigma=float(raw.get("sigma", 50.0)),
        initial_points=int(raw.get("initial_points", 10)),
        k=int(raw.get("k", 1)),
    )
    if cfg.budget < cfg.initial_points:
        raise ValueError(
            f"budget {cfg.budget} below initial_points {cfg.initial_points}"
        )
    return cfg


def create_app(
    data_root: str | Path | None = None,
    max_sessions: int = 64,
    strict: bool = True,
    event_log_dir: str | Path | None = None,
    payload_limit: int = DEFAULT_PAYLOAD_LIMIT,
) -> FastAPI:
    app = FastAPI(title="pointprop session service")
    store: dict[str, SessionRecord] = {}
    store_lock = threading.Lock()
    root = Path(data_root) if data_root else None
    log_dir = Path(event_log_dir) if event_log_dir else None
    if log_dir:
        log_dir.mkdir(parents=True, exist_ok=True)

    def get_record(session_id: str) -> SessionRecord | None:
        with store_lock:
            return store.get(session_id)

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(store)}

    @app.get("/legend")
    def legend():
        if root is None or not (root / "legend.json").exists():
            return _error(404, "no legend configured")
        return json.loads((root / "legend.json").read_text())

    @app.post("/sessions")
    async def create_session(request: Request):
        content_length = request.headers.get("content-length")
        if content_length and int(content_length) > payload_limit:
            return _error(413, f"payload exceeds {payload_limit} bytes")

        content_type = request.headers.get("content-type", "")
        gt = None
        image_id = None
        image_png = None
        try:
            if content_type.startswith("multipart/"):
                form = await request.form()
                raw_cfg = json.loads(form.get("config") or "{}")
                feature_file = form.get("features")
                if feature_file is None:
                    return _error(400, "multipart create requires a 'features' file")
                buf = await feature_file.read()
                if len(buf) > payload_limit:
                    return _error(413, f"payload exceeds {payload_limit} bytes")
                patch = tensor_io.read_tensor_bytes(buf)
                gt_file = form.get("gt_mask")
                if gt_file is not None:
                    gt = tensor_io.mask_from_png_bytes(await gt_file.read())
                image_file = form.get("image")
                if image_file is not None:
                    image_png = await image_file.read()
            else:
                body = json.loads(await request.body() or b"{}")
                raw_cfg = body.get("config") or {}
                image_id = body.get("image_id")
                if not image_id:
                    return _error(400, "JSON create requires image_id")
                if root is None:
                    return _error(400, "service has no data root; upload instead")
                feature_path = root / "features" / f"{image_id}.ftns"
                if not feature_path.exists():
                    return _error(404, f"unknown image_id {image_id!r}")
                patch = tensor_io.read_tensor(feature_path)
                if body.get("evaluation"):
                    gt_path = root / "masks" / f"{image_id}.png"
                    if not gt_path.exists():
                        return _error(404, f"no ground-truth mask for {image_id!r}")
                    gt = tensor_io.read_mask(gt_path)
            cfg = _parse_config(raw_cfg)
        except (PointPropError, ValueError, json.JSONDecodeError) as exc:
            return _error(400, str(exc))

        if patch.ndim != 3:
            return _error(400, f"feature tensor must be rank 3, got {patch.ndim}")
        if gt is not None:
            if patch.shape[0] > gt.shape[0] or patch.shape[1] > gt.shape[1]:
                return _error(400, "mask smaller than feature patch grid")
            field = build_field(patch, gt.shape[0], gt.shape[1])
        else:
            data, degenerate = l2_normalize(patch)
            field = FeatureField(data=data, degenerate=degenerate)

        with store_lock:
            if len(store) >= max_sessions:
                return _error(429, f"session limit {max_sessions} reached")
            session_id = uuid.uuid4().hex
            log_path = log_dir / f"{session_id}.jsonl" if log_dir else None
            record = SessionRecord(
                session_id, image_id, field, cfg, gt, strict, log_path,
                image_png=image_png,
            )
            store[session_id] = record

        record.log_event({
            "event": "created",
            "session_id": session_id,
            "image_id": image_id,
            "config": {
                "budget": cfg.budget,
                "lambda": cfg.similarity_weight,
                "sigma": cfg.sigma,
                "initial_points": cfg.initial_points,
                "k": cfg.k,
            },
            "evaluation": gt is not None,
        })

        payload = {"session_id": session_id, "phase": record.session.phase}
        if gt is not None:
            seeds = expert_mod.seed_points(gt, cfg.seed_count)
            payload["suggested_seed_points"] = [
                {"x": x, "y": y, "class_id": c} for x, y, c in seeds
            ]
        return JSONResponse(status_code=201, content=payload)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        record = get_record(session_id)
        if record is None:
            return _error(404, "unknown session")
        with record.lock:
            return record.view()

    @app.get("/sessions/{session_id}/proposal")
    def get_proposal(session_id: str):
        record = get_record(session_id)
        if record is None:
            return _error(404, "unknown session")
        with record.lock:
            if record.session.phase != "proposing":
                return _error(409, f"no proposal in phase {record.session.phase!r}")
            if record.pending_proposal is None:
                record.pending_proposal = record.session.next_proposal()
            x, y, m_value = record.pending_proposal
            return {"x": x, "y": y, "m_value": m_value, "phase": "proposing"}

    @app.post("/sessions/{session_id}/labels")
    async def post_label(session_id: str, request: Request):
        record = get_record(session_id)
        if record is None:
            return _error(404, "unknown session")
        try:
            body = json.loads(await request.body())
            x, y, class_id = int(body["x"]), int(body["y"]), int(body["class_id"])
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            return _error(400, f"malformed label: {exc}")
        with record.lock:
            session = record.session
            phase = session.phase
            if phase == "complete":
                return _error(409, "session already complete")
            deviation = None
            if phase == "proposing":
                if record.pending_proposal is None:
                    record.pending_proposal = session.next_proposal()
                px, py, _ = record.pending_proposal
                if (x, y) != (px, py):
                    if record.strict:
                        return _error(
                            409, f"expected label at proposed pixel ({px}, {py})"
                        )
                    deviation = {"proposed": [px, py], "labeled": [x, y]}
            try:
                session.add_label(x, y, class_id)
            except DuplicatePointError as exc:
                return _error(409, str(exc))
            except (OutOfBoundsError, ValueError) as exc:
                return _error(400, str(exc))
            record.pending_proposal = None
            if deviation:
                record.deviations.append(deviation)
            record.log_event({
                "event": "label",
                "x": x, "y": y, "class_id": class_id,
                "deviation": deviation,
            })
            return {
                "accepted": True,
                "labels_count": len(session.labels),
                "phase": session.phase,
            }

    @app.get("/sessions/{session_id}/mask")
    def get_mask(session_id: str):
        record = get_record(session_id)
        if record is None:
            return _error(404, "unknown session")
        with record.lock:
            if len(record.session.labels) == 0:
                return _error(409, "no labels yet")
            mask = record.session.augmented_mask()
        return Response(
            content=tensor_io.mask_to_png_bytes(mask), media_type="image/png"
        )

    @app.get("/sessions/{session_id}/labels")
    def get_labels(session_id: str):
        record = get_record(session_id)
        if record is None:
            return _error(404, "unknown session")
        with record.lock:
            return {
                "labels": [
                    {"x": x, "y": y, "class_id": c}
                    for x, y, c in record.session.labels.as_rows()
                ],
                "deviations": record.deviations,
            }

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        record = get_record(session_id)
        if record is None:
            return _error(404, "unknown session")
        with record.lock:
            if record.gt is None:
                return _error(409, "session has no ground truth (not evaluation mode)")
            if len(record.session.labels) == 0:
                return _error(409, "no labels yet")
            pred = record.session.augmented_mask()
            values = np.unique(record.gt)
            values = values[values != tensor_io.RESERVED_ID]
            num_classes = int(values.max()) + 1 if values.size else 1
            cm = metrics.accumulate(record.gt, pred, num_classes)
            return metrics.summary(cm)

    @app.get("/sessions/{session_id}/image")
    def get_image(session_id: str):
        record = get_record(session_id)
        if record is None:
            return _error(404, "unknown session")
        if record.image_png is not None:
            return Response(content=record.image_png, media_type="image/png")
        if root is None or record.image_id is None:
            return _error(404, "session has no server-side image")
        path = root / "images" / f"{record.image_id}.png"
        if not path.exists():
            return _error(404, f"no image file for {record.image_id!r}")
        return Response(content=path.read_bytes(), media_type="image/png")

    return app


def replay_log(log_path: str | Path, data_root: str | Path) -> HilSession:
    """Rebuild a session's state from its event log (crash recovery)."""
    root = Path(data_root)
    session = None
    for line in Path(log_path).read_text().splitlines():
        event = json.loads(line)
        if event["event"] == "created":
            patch = tensor_io.read_tensor(
                root / "features" / f"{event['image_id']}.ftns"
            )
            raw = event["config"]
            cfg = HilConfig(
                budget=raw["budget"],
                similarity_weight=raw["lambda"],
                sigma=raw["sigma"],
                initial_points=raw["initial_points"],
                k=raw["k"],
            )
            gt_path = root / "masks" / f"{event['image_id']}.png"
            if event.get("evaluation") and gt_path.exists():
                gt = tensor_io.read_mask(gt_path)
                field = build_field(patch, gt.shape[0], gt.shape[1])
            else:
                data, degenerate = l2_normalize(patch)
                field = FeatureField(data=data, degenerate=degenerate)
            session = HilSession(field, cfg)
        elif event["event"] == "label":
            if session is None:
                raise ValueError("label event before creation event")
            session.add_label(event["x"], event["y"], event["class_id"])
    if session is None:
        raise ValueError("log contains no creation event")
    return session
