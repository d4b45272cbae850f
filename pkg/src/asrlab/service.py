"""HTTP control surface around a training loop.

One background thread owns the optimizer; a single lock serializes its steps
against control mutations so every change lands on a batch boundary. Status
reads never lock: they copy the latest published snapshot reference. The
surface mutates nothing but the mixing schedule and the run lifecycle
(pause / resume / checkpoint-now). Plain unauthenticated HTTP; this is a
desk-scale instrument, not a production service.
"""

from __future__ import annotations

import json
import os
import shutil
import threading
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .checkpoint import write_trainer_checkpoint


class MixingRequest(BaseModel):
    weights: dict[str, float]


class MixingAck(BaseModel):
    effective_step: int
    weights: dict[str, float]


class LifecycleAck(BaseModel):
    state: str
    step: int


class CheckpointAck(BaseModel):
    path: str
    step: int


class TrainerService:
    def __init__(self, trainer, checkpoint_dir, checkpoint_every: int = 0):
        self.trainer = trainer
        self.checkpoint_dir = Path(checkpoint_dir)
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        self.checkpoint_every = checkpoint_every
        self._lock = threading.Lock()
        self._paused = threading.Event()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._state = "idle"
        self._throughput = 0.0
        self._recent_lang_loss: dict[str, float] = {}
        self._last_row: dict | None = None
        self._error: str | None = None
        self._snapshot: dict = {}
        self._publish()

    # -- loop ------------------------------------------------------------

    def start(self, num_steps: int) -> None:
        if self._thread is not None and self._thread.is_alive():
            raise RuntimeError("training loop already running")
        self._stop.clear()
        self._thread = threading.Thread(
            target=self._run, args=(num_steps,), name="train-loop", daemon=True
        )
        self._thread.start()

    def _run(self, num_steps: int) -> None:
        done = 0
        self._state = "running"
        self._publish()
        while done < num_steps and not self._stop.is_set():
            if self._paused.is_set():
                self._state = "paused"
                self._publish()
                time.sleep(0.02)
                continue
            self._state = "running"
            began = time.perf_counter()
            try:
                with self._lock:
                    row = self.trainer.step()
            except Exception as e:
                self._state = "diverged"
                self._error = str(e)
                self._publish()
                return
            elapsed = max(time.perf_counter() - began, 1e-9)
            instant = self.trainer.config.batch_size / elapsed
            self._throughput = (
                instant if self._throughput == 0 else 0.7 * self._throughput + 0.3 * instant
            )
            self._recent_lang_loss.update(row["per_language_loss"])
            self._last_row = row
            done += 1
            if self.checkpoint_every and row["step"] % self.checkpoint_every == 0:
                with self._lock:
                    self._write_checkpoint()
            self._publish()
        self._state = "idle"
        self._publish()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=30)

    def wait(self, timeout=None) -> None:
        """Block until the training thread finishes, without stopping it."""
        if self._thread is not None:
            self._thread.join(timeout=timeout)

    # -- status ------------------------------------------------------------

    def _publish(self) -> None:
        row = self._last_row
        self._snapshot = {
            "state": self._state,
            "step": self.trainer.step_count,
            "lr": row["lr"] if row else None,
            "loss": row["loss"] if row else None,
            "tokens": row["tokens"] if row else None,
            "per_language_loss": dict(self._recent_lang_loss),
            "per_language_wer": None,
            "mixing": dict(
                zip(self.trainer.table.codes, self.trainer.mixing.probabilities())
            ),
            "throughput": self._throughput,
            "error": self._error,
        }

    def status(self) -> dict:
        return self._snapshot

    def history_since(self, since: int) -> list[dict]:
        return [r for r in self.trainer.history if r["step"] > since]

    # -- control -----------------------------------------------------------

    def request_mixing(self, weights_by_code: dict[str, float]):
        ids = {self.trainer.table.id_of(c): w for c, w in weights_by_code.items()}
        with self._lock:
            preview = self.trainer.request_mixing(ids)
            effective = self.trainer.step_count + 1
        return effective, dict(zip(self.trainer.table.codes, preview.probabilities()))

    def pause(self):
        self._paused.set()
        with self._lock:
            if self._thread is not None and self._thread.is_alive():
                self._state = "paused"
        self._publish()
        return self._state, self.trainer.step_count

    def resume(self):
        self._paused.clear()
        if self._thread is not None and self._thread.is_alive():
            self._state = "running"
        self._publish()
        return self._state, self.trainer.step_count

    def checkpoint_now(self):
        with self._lock:
            path = self._write_checkpoint()
        return path, self.trainer.step_count

    def _write_checkpoint(self) -> str:
        step = self.trainer.step_count
        path = self.checkpoint_dir / f"step-{step:06d}.ckpt"
        write_trainer_checkpoint(path, self.trainer)
        tmp = self.checkpoint_dir / "latest.ckpt.tmp"
        shutil.copyfile(path, tmp)
        os.replace(tmp, self.checkpoint_dir / "latest.ckpt")
        return str(path)


def create_app(service: TrainerService, static_dir=None) -> FastAPI:
    app = FastAPI(title="asrlab control surface")

    @app.get("/status")
    def status():
        return service.status()

    @app.get("/metrics/history")
    def history(since: int = 0):
        rows = service.history_since(since)
        body = "".join(json.dumps(r) + "\n" for r in rows)
        return PlainTextResponse(body, media_type="application/x-ndjson")

    @app.post("/mixing", response_model=MixingAck)
    def mixing(req: MixingRequest):
        try:
            effective, weights = service.request_mixing(req.weights)
        except (KeyError, ValueError) as e:
            # str(KeyError) wraps the message in quotes; args[0] is the text.
            detail = e.args[0] if e.args else str(e)
            raise HTTPException(status_code=400, detail=detail) from None
        return MixingAck(effective_step=effective, weights=weights)

    @app.post("/pause", response_model=LifecycleAck)
    def pause():
        state, step = service.pause()
        return LifecycleAck(state=state, step=step)

    @app.post("/resume", response_model=LifecycleAck)
    def resume():
        state, step = service.resume()
        return LifecycleAck(state=state, step=step)

    @app.post("/checkpoint", response_model=CheckpointAck)
    def checkpoint():
        path, step = service.checkpoint_now()
        return CheckpointAck(path=path, step=step)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")
    return app


def run_server(service: TrainerService, port: int, static_dir=None) -> None:
    import uvicorn

    uvicorn.run(
        create_app(service, static_dir=static_dir),
        host="127.0.0.1",
        port=port,
        log_level="warning",
    )
