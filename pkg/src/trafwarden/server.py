"""Process entry points: scenario files, headless runs, replay, live serving.

Wire format: newline-free JSON objects, one per WebSocket text frame, each
with a "type" field (hello, state, command, set_mode, metrics, error).
Unknown fields are ignored.  Scenario files are flat "key = value" text.
Command traces are CSV lines "time,source,name,result" under a small
header that pins the scenario hash and seed for replay.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import logging
from collections import deque
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Deque, Dict, Iterable, List, Optional, Tuple

from .controller import (
    Action,
    GestureAction,
    GrantAction,
    Mode,
    PolicyConfig,
    SensorReading,
    ValidationResult,
    make_policy,
    parse_action,
    validate_command,
)
from .gestures import (
    APPROACHES,
    TrafficSignal,
    is_conflicting,
    signal_definition,
    signal_from_name,
)
from .sim import MetricsReport, ScenarioConfig, ScenarioError, Simulation

log = logging.getLogger("trafwarden")

WIRE_VERSION = 1
TRACE_HEADER = "# trafwarden-trace v1"


# -- scenario files ----------------------------------------------------------

_INT_FIELDS = {"seed"}


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioConfig:
    known = {f.name: f for f in fields(ScenarioConfig)}
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(
                f"{source}:{lineno}", f"expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ScenarioError(key, f"unknown scenario key (line {lineno})")
        try:
            values[key] = int(value) if key in _INT_FIELDS else float(value)
        except ValueError:
            raise ScenarioError(
                key, f"invalid value {value!r} (line {lineno})") from None
    cfg = ScenarioConfig(**values)
    cfg.validate()
    cfg.validate_demand()
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ScenarioError(str(p), "scenario file not found")
    return parse_scenario(p.read_text(encoding="utf-8"), source=str(p))


def save_scenario(cfg: ScenarioConfig) -> str:
    """Canonical text form; load(save(cfg)) == cfg."""
    lines = [f"{f.name} = {getattr(cfg, f.name)!r}" for f in fields(ScenarioConfig)]
    return "\n".join(lines) + "\n"


def scenario_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(save_scenario(cfg).encode("utf-8")).hexdigest()


# -- command trace -----------------------------------------------------------

@dataclass(frozen=True)
class TraceRecord:
    time: float
    source: str
    name: str
    result: str

    def line(self) -> str:
        return f"{self.time:.6f},{self.source},{self.name},{self.result}"


def format_trace(cfg: ScenarioConfig, mode: Mode,
                 records: Iterable[TraceRecord]) -> str:
    head = [
        TRACE_HEADER,
        f"# scenario_sha256={scenario_hash(cfg)}",
        f"# seed={cfg.seed}",
        f"# mode={mode.value}",
    ]
    return "\n".join(head + [r.line() for r in records]) + "\n"


def parse_trace(text: str) -> Tuple[Dict[str, str], List[TraceRecord]]:
    meta: Dict[str, str] = {}
    records: List[TraceRecord] = []
    lines = text.splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ScenarioError("trace", "not a trafwarden trace file")
    for raw in lines[1:]:
        if not raw.strip():
            continue
        if raw.startswith("#"):
            key, _, value = raw[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            continue
        parts = raw.split(",")
        if len(parts) != 4:
            raise ScenarioError("trace", f"malformed trace line: {raw!r}")
        records.append(TraceRecord(float(parts[0]), parts[1], parts[2], parts[3]))
    return meta, records


# -- metrics CSV -------------------------------------------------------------

def metrics_csv(report: MetricsReport) -> str:
    lines = ["approach,arrivals,crossed,mean_delay_s,max_queue"]
    for a in APPROACHES:
        m = report.per_approach[a]
        lines.append(f"{a.value},{m.arrivals},{m.crossed},"
                     f"{m.mean_delay:.6f},{m.max_queue}")
    t = report.total
    lines.append(f"total,{t.arrivals},{t.crossed},{t.mean_delay:.6f},{t.max_queue}")
    lines.append(f"conflicts,{report.conflicts},,,")
    return "\n".join(lines) + "\n"


# -- session engine ----------------------------------------------------------

_CLEARANCE_SIGNALS = (TrafficSignal.CHANGE_SIGN, TrafficSignal.ALL_STOP)


class Session:
    """One simulation run: merges command sources, validates, traces, steps."""

    def __init__(self, cfg: ScenarioConfig, mode: Mode) -> None:
        self.cfg = cfg
        self.mode = mode
        self.sim = Simulation(cfg)
        self.policy = make_policy(self._policy_cfg(mode))
        self.trace: List[TraceRecord] = []
        self.warnings: List[Dict[str, object]] = []
        self._inbox: Deque[Tuple[str, Action]] = deque()
        self._last_clearance: Optional[float] = None
        self._poll_every = max(1, round((cfg.interim / 10.0) / cfg.dt))
        self.total_steps = round(cfg.duration / cfg.dt)

    def _policy_cfg(self, mode: Mode) -> PolicyConfig:
        return PolicyConfig(
            mode=mode, min_green=self.cfg.min_green,
            max_green=self.cfg.max_green, interim=self.cfg.interim,
            sensor_sigma=self.cfg.sensor_sigma)

    @property
    def steps_done(self) -> int:
        return self.sim._step_index

    @property
    def finished(self) -> bool:
        return self.steps_done >= self.total_steps

    def submit(self, action: Action, source: str = "operator") -> None:
        """Queue a command; it is applied at the next step boundary."""
        self._inbox.append((source, action))

    def set_mode(self, mode: Mode) -> None:
        """Switch control mode; entering an autonomous mode fail-safes first."""
        if mode is self.mode:
            return
        self.mode = mode
        if mode is Mode.WIZARD_OF_OZ:
            self.policy = None
            return
        self.submit(GestureAction(TrafficSignal.ALL_STOP), source="system")
        self.policy = make_policy(self._policy_cfg(mode), start=self.sim.clock)

    def advance(self) -> None:
        """Apply queued and policy commands at the current clock, then step."""
        now = self.sim.clock
        batch: List[Tuple[str, Action]] = []
        while self._inbox:
            batch.append(self._inbox.popleft())
        if self.policy is not None and self.steps_done % self._poll_every == 0:
            reading = SensorReading(self.sim.queue_estimates(), now)
            batch.extend(("policy", a) for a in self.policy.poll(now, reading))
        for source, action in batch:
            result, reason = validate_command(
                self.sim.commanded, action, self.mode, now,
                self._last_clearance, self.cfg.interim)
            self.trace.append(TraceRecord(now, source, action.name, result.value))
            if result is ValidationResult.REJECT:
                self.warnings.append(
                    {"time": now, "text": f"rejected {action.name}: {reason}"})
                continue
            if result is ValidationResult.ACCEPT_WITH_WARNING:
                self.warnings.append(
                    {"time": now, "text": f"{action.name}: {reason}"})
            if isinstance(action, GestureAction):
                self.sim.apply_signal(action.signal, now)
                if action.signal in _CLEARANCE_SIGNALS:
                    self._last_clearance = now
            else:
                self.sim.apply_grant(action.approaches, now)
        self.sim.step()

    def run(self) -> MetricsReport:
        while not self.finished:
            self.advance()
        return self.metrics()

    def metrics(self) -> MetricsReport:
        return self.sim.collect_metrics(trace_length=len(self.trace))


# -- snapshots ---------------------------------------------------------------

def build_hello(cfg: ScenarioConfig) -> Dict[str, object]:
    scenario = {f.name: getattr(cfg, f.name) for f in fields(ScenarioConfig)}
    return {"type": "hello", "version": WIRE_VERSION, "scenario": scenario}


def build_state(session: Session, seq: int) -> Dict[str, object]:
    sim = session.sim
    frame = sim.frame()
    vehicles = [
        {"id": v.vid, "approach": a.value, "s": round(v.s, 3),
         "speed": round(v.speed, 3)}
        for a in APPROACHES for v in sim.vehicles[a]
    ]
    warnings = session.warnings
    session.warnings = []
    if is_conflicting(sim.effective):
        warnings = warnings + [{
            "time": sim.clock,
            "text": "conflicting effective permissions: crossing streams"}]
    def arm(chain):
        return {"shoulder": list(chain.shoulder), "elbow": list(chain.elbow),
                "wrist": list(chain.wrist), "fingertip": list(chain.fingertip)}
    return {
        "type": "state",
        "seq": seq,
        "clock": round(sim.clock, 6),
        "vehicles": vehicles,
        "permissions": {a.value: sim.commanded[a].value for a in APPROACHES},
        "effective_permissions": {
            a.value: sim.effective[a].value for a in APPROACHES},
        "robot_pose": {j.name.lower(): sim.pose[j] for j in sim.pose},
        "fk_points": {
            "left": arm(frame.left),
            "right": arm(frame.right),
            "torso_top": frame.torso_top,
            "head_yaw": frame.head_yaw,
            "head_center": list(frame.head_center),
            "head_radius": sim.links.head_radius,
        },
        "queues": {a.value: sim.queue_counts[a] for a in APPROACHES},
        "current_signal": (sim.current_signal.value
                           if sim.current_signal else None),
        "mode": session.mode.value,
        "warnings": warnings,
    }


def build_metrics_message(report: MetricsReport) -> Dict[str, object]:
    return {"type": "metrics", "report": report.to_dict()}


def build_error(code: str, text: str) -> Dict[str, object]:
    return {"type": "error", "code": code, "text": text}


# -- headless run and replay -------------------------------------------------

def run_headless(cfg: ScenarioConfig, mode: Mode,
                 out_dir: str | Path | None = None,
                 seed: Optional[int] = None) -> MetricsReport:
    """Run the full scenario under a policy; optionally write CSV and trace."""
    if mode is Mode.WIZARD_OF_OZ:
        raise ScenarioError("policy", "headless runs need an autonomous policy")
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    session = Session(cfg, mode)
    report = session.run()
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(metrics_csv(report), encoding="utf-8")
        (out / "trace.csv").write_text(
            format_trace(cfg, mode, session.trace), encoding="utf-8")
    return report


def replay(trace_path: str | Path, cfg: ScenarioConfig,
           out_dir: str | Path | None = None) -> MetricsReport:
    """Re-run a recorded session; the hash guard runs before any stepping."""
    p = Path(trace_path)
    if not p.is_file():
        raise ScenarioError(str(p), "trace file not found")
    meta, records = parse_trace(p.read_text(encoding="utf-8"))
    if meta.get("scenario_sha256") != scenario_hash(cfg):
        raise ScenarioError("trace", "scenario does not match the recorded hash")
    if meta.get("seed") != str(cfg.seed):
        raise ScenarioError("trace", "seed does not match the recorded seed")
    mode = Mode(meta.get("mode", Mode.WIZARD_OF_OZ.value))

    session = Session(cfg, Mode.WIZARD_OF_OZ)
    session.mode = mode  # validate under the recorded rules, but no policy
    session.policy = None
    by_step: Dict[int, List[TraceRecord]] = {}
    for r in records:
        by_step.setdefault(round(r.time / cfg.dt), []).append(r)
    while not session.finished:
        for r in by_step.get(session.steps_done, ()):  # recorded step boundary
            session.submit(parse_action(r.name), source=r.source)
        session.advance()
    report = session.metrics()
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(metrics_csv(report), encoding="utf-8")
        (out / "trace.csv").write_text(
            format_trace(cfg, mode, session.trace), encoding="utf-8")
    return report


# -- live serving ------------------------------------------------------------

def _offer_latest(queue: "asyncio.Queue[str]", item: str) -> None:
    # Latest-wins: a slow client drops frames, never stalls the stepper.
    if queue.full():
        try:
            queue.get_nowait()
        except asyncio.QueueEmpty:
            pass
    queue.put_nowait(item)


class LiveServer:
    def __init__(self, cfg: ScenarioConfig, fps: float = 20.0) -> None:
        self.cfg = cfg
        self.session = Session(cfg, Mode.WIZARD_OF_OZ)
        self.fps = fps
        self.clients: Dict[object, asyncio.Queue] = {}
        self.seq = 0
        self._broadcast_every = max(1, round(1.0 / (fps * cfg.dt)))

    def handle_text(self, raw: str) -> Optional[Dict[str, object]]:
        """Apply one inbound frame; returns an error message or None."""
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            return build_error("parse", f"malformed JSON frame: {exc.msg}")
        if not isinstance(msg, dict):
            return build_error("parse", "frame must be a JSON object")
        kind = msg.get("type")
        if kind == "command":
            try:
                signal = signal_from_name(str(msg.get("signal")))
            except ValueError as exc:
                return build_error("bad_command", str(exc))
            self.session.submit(GestureAction(signal), source="operator")
            return None
        if kind == "set_mode":
            try:
                mode = Mode(str(msg.get("mode")))
            except ValueError:
                return build_error("bad_mode", f"unknown mode {msg.get('mode')!r}")
            self.session.set_mode(mode)
            return None
        return build_error("unsupported", f"unsupported message type {kind!r}")

    def on_disconnect(self) -> None:
        # Operator loss in Wizard-of-Oz mode fail-safes to all-stop.
        if self.session.mode is Mode.WIZARD_OF_OZ and not self.session.finished:
            self.session.submit(
                GestureAction(TrafficSignal.ALL_STOP), source="system")

    def broadcast(self, payload: Dict[str, object]) -> None:
        text = json.dumps(payload, separators=(",", ":"))
        for queue in self.clients.values():
            _offer_latest(queue, text)

    async def stepper(self) -> None:
        loop = asyncio.get_running_loop()
        next_tick = loop.time()
        while not self.session.finished:
            self.session.advance()
            if self.session.steps_done % self._broadcast_every == 0:
                self.seq += 1
                self.broadcast(build_state(self.session, self.seq))
            next_tick += self.cfg.dt
            delay = next_tick - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_tick = loop.time()  # fell behind; don't try to catch up
        self.broadcast(build_metrics_message(self.session.metrics()))

    async def handler(self, ws) -> None:
        queue: asyncio.Queue = asyncio.Queue(maxsize=1)
        self.clients[ws] = queue

        async def sender() -> None:
            while True:
                await ws.send(await queue.get())

        send_task = asyncio.create_task(sender())
        try:
            await ws.send(json.dumps(build_hello(self.cfg), separators=(",", ":")))
            async for raw in ws:
                reply = self.handle_text(raw)
                if reply is not None:
                    await ws.send(json.dumps(reply, separators=(",", ":")))
        finally:
            send_task.cancel()
            self.clients.pop(ws, None)
            self.on_disconnect()


async def serve_async(cfg: ScenarioConfig, host: str, port: int,
                      fps: float = 20.0,
                      ready: Optional[asyncio.Event] = None,
                      bound: Optional[list] = None) -> None:
    import websockets.asyncio.server

    server = LiveServer(cfg, fps=fps)
    async with websockets.asyncio.server.serve(server.handler, host, port) as ws:
        actual = next(iter(ws.sockets)).getsockname()
        log.info("serving ws://%s:%s (fps=%s)", actual[0], actual[1], fps)
        if bound is not None:
            bound.append(actual[1])
        if ready is not None:
            ready.set()
        await server.stepper()
        await asyncio.Future()  # keep serving the final state until cancelled


def serve(cfg: ScenarioConfig, host: str, port: int, fps: float = 20.0) -> None:
    try:
        asyncio.run(serve_async(cfg, host, port, fps))
    except KeyboardInterrupt:
        log.info("stopped")
