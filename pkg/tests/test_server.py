import asyncio
import json
from dataclasses import replace
from pathlib import Path

import pytest

from trafwarden.controller import GestureAction, Mode
from trafwarden.gestures import Approach, TrafficSignal
from trafwarden.server import (
    Session,
    build_state,
    format_trace,
    load_scenario,
    metrics_csv,
    parse_trace,
    replay,
    run_headless,
    save_scenario,
    scenario_hash,
    serve_async,
)
from trafwarden.sim import ScenarioConfig, ScenarioError

QUIET = dict(lambda_front=0.0, lambda_behind=0.0, lambda_left=0.0,
             lambda_right=0.0)


# -- scenario files ----------------------------------------------------------

def test_empty_scenario_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    assert load_scenario(path) == ScenarioConfig()


def test_scenario_round_trip(tmp_path):
    cfg = ScenarioConfig(lambda_front=0.2, seed=7, joint_speed=2.0)
    path = tmp_path / "s.cfg"
    path.write_text(save_scenario(cfg))
    assert load_scenario(path) == cfg


def test_scenario_error_names_field(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("lambda_front = -1\n")
    with pytest.raises(ScenarioError) as err:
        load_scenario(path)
    assert "lambda_front" in str(err.value)


def test_scenario_unknown_key_names_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("dt = 0.05\nwarp_speed = 9\n")
    with pytest.raises(ScenarioError) as err:
        load_scenario(path)
    assert "warp_speed" in str(err.value)
    assert "line 2" in str(err.value)


def test_scenario_missing_file():
    with pytest.raises(ScenarioError):
        load_scenario("/nonexistent/scenario.cfg")


def test_scenario_comments_and_blanks(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# demand\nlambda_front = 0.15  # veh/s\n\nseed = 3\n")
    cfg = load_scenario(path)
    assert cfg.lambda_front == 0.15
    assert cfg.seed == 3


# -- headless runs -----------------------------------------------------------

def test_zero_demand_run_is_empty():
    cfg = ScenarioConfig(duration=30.0, **QUIET)
    report = run_headless(cfg, Mode.ROUND_ROBIN)
    assert report.total.crossed == 0
    assert report.total.mean_delay == 0.0
    assert report.conflicts == 0


def test_run_headless_writes_deterministic_files(tmp_path):
    cfg = ScenarioConfig(duration=60.0, seed=11)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_headless(cfg, Mode.QUEUE_PRIORITY, out_dir=out1)
    run_headless(cfg, Mode.QUEUE_PRIORITY, out_dir=out2)
    assert (out1 / "metrics.csv").read_bytes() == (out2 / "metrics.csv").read_bytes()
    assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()


def test_metrics_csv_shape():
    cfg = ScenarioConfig(duration=30.0, **QUIET)
    report = run_headless(cfg, Mode.ROUND_ROBIN)
    lines = metrics_csv(report).strip().splitlines()
    assert lines[0] == "approach,arrivals,crossed,mean_delay_s,max_queue"
    assert [l.split(",")[0] for l in lines[1:]] == [
        "front", "behind", "left", "right", "total", "conflicts"]
    assert lines[-1] == "conflicts,0,,,"


def test_seed_override_changes_outcome():
    cfg = ScenarioConfig(duration=120.0, seed=1)
    a = run_headless(cfg, Mode.ROUND_ROBIN)
    b = run_headless(cfg, Mode.ROUND_ROBIN, seed=2)
    assert a.total.arrivals != b.total.arrivals


# -- trace record / replay ---------------------------------------------------

def scripted_woz_session(cfg: ScenarioConfig) -> Session:
    """Drive a short Wizard-of-Oz session from a fixed operator script."""
    session = Session(cfg, Mode.WIZARD_OF_OZ)
    script = {
        0.0: TrafficSignal.LEFT_RIGHT_STOP,
        2.0: TrafficSignal.CHANGE_SIGN,
        6.0: TrafficSignal.START_LEFT,
        12.0: TrafficSignal.CHANGE_SIGN,
        16.0: TrafficSignal.START_RIGHT,
    }
    pending = sorted(script.items())
    while not session.finished:
        while pending and session.sim.clock >= pending[0][0] - 1e-9:
            session.submit(GestureAction(pending.pop(0)[1]))
        session.advance()
    return session


def test_trace_round_trip(tmp_path):
    cfg = ScenarioConfig(duration=20.0, seed=3)
    session = scripted_woz_session(cfg)
    text = format_trace(cfg, Mode.WIZARD_OF_OZ, session.trace)
    meta, records = parse_trace(text)
    assert meta["scenario_sha256"] == scenario_hash(cfg)
    assert meta["seed"] == "3"
    assert meta["mode"] == "wizard_of_oz"
    assert [r.name for r in records] == [
        "left_right_stop", "change_sign", "start_left", "change_sign",
        "start_right"]
    assert all(r.result == "accept" for r in records)


def test_replay_reproduces_metrics_exactly(tmp_path):
    cfg = ScenarioConfig(duration=20.0, seed=3)
    session = scripted_woz_session(cfg)
    recorded_metrics = metrics_csv(session.metrics())
    trace_path = tmp_path / "trace.csv"
    trace_path.write_text(format_trace(cfg, Mode.WIZARD_OF_OZ, session.trace))

    replayed = replay(trace_path, cfg, out_dir=tmp_path / "replayed")
    assert metrics_csv(replayed) == recorded_metrics
    new_trace = (tmp_path / "replayed" / "trace.csv").read_text()
    assert new_trace == trace_path.read_text()


def test_replay_rejects_altered_seed(tmp_path):
    cfg = ScenarioConfig(duration=20.0, seed=3)
    session = scripted_woz_session(cfg)
    trace_path = tmp_path / "trace.csv"
    trace_path.write_text(format_trace(cfg, Mode.WIZARD_OF_OZ, session.trace))
    with pytest.raises(ScenarioError) as err:
        replay(trace_path, replace(cfg, seed=4))
    assert "hash" in str(err.value) or "seed" in str(err.value)


def test_replay_empty_trace_equals_all_stop_run(tmp_path):
    cfg = ScenarioConfig(duration=20.0, seed=6)
    trace_path = tmp_path / "empty.csv"
    trace_path.write_text(format_trace(cfg, Mode.WIZARD_OF_OZ, []))
    replayed = replay(trace_path, cfg)

    baseline = Session(cfg, Mode.WIZARD_OF_OZ)
    baseline.run()
    assert metrics_csv(replayed) == metrics_csv(baseline.metrics())
    assert replayed.total.crossed == 0  # nothing ever went


def test_replay_rejects_foreign_file(tmp_path):
    path = tmp_path / "nope.csv"
    path.write_text("hello\n")
    with pytest.raises(ScenarioError):
        replay(path, ScenarioConfig())


# -- snapshots ----------------------------------------------------------------

def test_snapshot_monotone_and_complete():
    cfg = ScenarioConfig(duration=10.0, seed=2)
    session = Session(cfg, Mode.ROUND_ROBIN)
    last_clock = -1.0
    for seq in range(1, 40):
        for _ in range(5):
            session.advance()
        snap = build_state(session, seq)
        assert snap["seq"] == seq
        assert snap["clock"] >= last_clock
        last_clock = snap["clock"]
        assert set(snap["permissions"]) == {"front", "behind", "left", "right"}
        eff = snap["effective_permissions"]
        fb_go = eff["front"] == "go" or eff["behind"] == "go"
        lr_go = eff["left"] == "go" or eff["right"] == "go"
        if fb_go and lr_go:
            assert snap["warnings"]
        assert len(snap["robot_pose"]) == 14
        assert "fingertip" in snap["fk_points"]["left"]


# -- live serving -------------------------------------------------------------

async def _ws_scenario() -> None:
    import websockets.asyncio.client

    cfg = ScenarioConfig(duration=6.0, **QUIET)
    ready = asyncio.Event()
    bound: list = []
    server_task = asyncio.create_task(
        serve_async(cfg, "127.0.0.1", 0, fps=20.0, ready=ready, bound=bound))
    await asyncio.wait_for(ready.wait(), 5)
    uri = f"ws://127.0.0.1:{bound[0]}"

    try:
        async with websockets.asyncio.client.connect(uri) as ws:
            hello = json.loads(await asyncio.wait_for(ws.recv(), 2))
            assert hello["type"] == "hello"
            assert hello["version"] == 1
            assert hello["scenario"]["dt"] == cfg.dt

            # malformed frame -> error reply, session keeps going
            await ws.send("{not json")
            reply = json.loads(await asyncio.wait_for(ws.recv(), 2))
            while reply["type"] == "state":
                reply = json.loads(await asyncio.wait_for(ws.recv(), 2))
            assert reply["type"] == "error"
            assert reply["code"] == "parse"

            await ws.send(json.dumps({"type": "command", "signal": "start_left"}))
            saw_signal = None
            for _ in range(40):
                msg = json.loads(await asyncio.wait_for(ws.recv(), 2))
                if msg["type"] == "state" and msg["current_signal"] == "start_left":
                    saw_signal = msg
                    break
            assert saw_signal is not None
            assert saw_signal["permissions"]["left"] == "go"
            assert saw_signal["mode"] == "wizard_of_oz"
            # the arms are still interpolating toward the gesture target
            later = json.loads(await asyncio.wait_for(ws.recv(), 2))
            while later["type"] != "state":
                later = json.loads(await asyncio.wait_for(ws.recv(), 2))
            assert later["robot_pose"] != saw_signal["robot_pose"]

        # first client gone: the fail-safe all-stop must appear
        async with websockets.asyncio.client.connect(uri) as ws:
            hello = json.loads(await asyncio.wait_for(ws.recv(), 2))
            assert hello["type"] == "hello"
            saw_all_stop = False
            for _ in range(40):
                msg = json.loads(await asyncio.wait_for(ws.recv(), 2))
                if msg["type"] == "state" and msg["current_signal"] == "all_stop":
                    saw_all_stop = True
                    break
            assert saw_all_stop
    finally:
        server_task.cancel()
        try:
            await server_task
        except asyncio.CancelledError:
            pass


def test_live_server_round_trip():
    asyncio.run(_ws_scenario())
