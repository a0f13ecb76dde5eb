"""Line-delimited JSON protocol for driving a design model across processes.

One session runs over any reliable, ordered, bidirectional byte stream
(a stdin/stdout pair or a TCP connection). Framing is one UTF-8 JSON
object per line, newline-terminated, with a ``type`` field naming the
variant:

=========  =========================================  ==================
type       fields                                     direction
=========  =========================================  ==================
hello      protocol_version, action_space, events     server, once first
reset      seed                                       client
reset_ack  observation                                server
step       action                                     client
step_ack   observation, counts, done                  server
error      code, detail                               server
=========  =========================================  ==================

Requests and responses alternate strictly; every ``reset`` is answered by
``reset_ack`` or ``error``, every ``step`` by ``step_ack`` or ``error``.
Unknown types, missing fields, and unexpected extra fields are all
rejected. Error codes: ``decode`` (unparseable line), ``protocol``
(request out of order), ``invalid_action`` (action outside the served
space), ``dut_fault`` (design model raised).

Stimulus randomness lives on the serving side, seeded by ``reset``; the
wire carries knob values only. That makes a bridged campaign byte-for-byte
identical to an in-process one with the same seeds.
"""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass

from .actionspace import Action, ActionSpace, KnobSpec, validate
from .env import DutModel, stimulus_rng
from .errors import (
    BridgeDecodeError,
    BridgeProtocolError,
    RemoteDutError,
    TransportError,
)

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class Reset:
    seed: int


@dataclass(frozen=True)
class ResetAck:
    observation: tuple[float, ...]


@dataclass(frozen=True)
class Step:
    action: tuple[float, ...]


@dataclass(frozen=True)
class StepAck:
    observation: tuple[float, ...]
    counts: tuple[int, ...]
    done: bool


@dataclass(frozen=True)
class Hello:
    protocol_version: int
    action_space: ActionSpace
    events: tuple[str, ...]


@dataclass(frozen=True)
class Error:
    code: str
    detail: str


BridgeMessage = Reset | ResetAck | Step | StepAck | Hello | Error

_FIELDS = {
    "reset": ("seed",),
    "reset_ack": ("observation",),
    "step": ("action",),
    "step_ack": ("observation", "counts", "done"),
    "hello": ("protocol_version", "action_space", "events"),
    "error": ("code", "detail"),
}


def _wire_num(x: float):
    """Render a real compactly: integral values as JSON ints."""
    x = float(x)
    if not (x == x and abs(x) != float("inf")):
        raise ValueError("non-finite value in message")
    if x.is_integer():
        return int(x)
    return x


def _space_payload(space: ActionSpace) -> dict:
    knobs = []
    for k in space.knobs:
        if k.kind == "continuous":
            knobs.append(
                {"name": k.name, "kind": k.kind, "lo": _wire_num(k.lo), "hi": _wire_num(k.hi)}
            )
        else:
            knobs.append(
                {"name": k.name, "kind": k.kind, "values": [_wire_num(v) for v in k.values]}
            )
    return {"knobs": knobs}


def _space_from_payload(obj) -> ActionSpace:
    if not isinstance(obj, dict) or set(obj) != {"knobs"} or not isinstance(obj["knobs"], list):
        raise BridgeDecodeError("malformed action_space payload")
    knobs = []
    for item in obj["knobs"]:
        if not isinstance(item, dict):
            raise BridgeDecodeError("malformed knob payload")
        kind = item.get("kind")
        try:
            if kind == "continuous":
                if set(item) != {"name", "kind", "lo", "hi"}:
                    raise BridgeDecodeError("malformed continuous knob payload")
                knobs.append(
                    KnobSpec.continuous(item["name"], _real(item["lo"]), _real(item["hi"]))
                )
            elif kind == "discrete":
                if set(item) != {"name", "kind", "values"}:
                    raise BridgeDecodeError("malformed discrete knob payload")
                knobs.append(KnobSpec.discrete(item["name"], _real_list(item["values"])))
            else:
                raise BridgeDecodeError(f"unknown knob kind {kind!r}")
        except ValueError as exc:
            raise BridgeDecodeError(f"invalid knob payload: {exc}") from exc
    try:
        return ActionSpace(knobs=tuple(knobs))
    except ValueError as exc:
        raise BridgeDecodeError(f"invalid action space: {exc}") from exc


def _real(x) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise BridgeDecodeError(f"expected a number, got {x!r}")
    return float(x)


def _real_list(xs) -> tuple[float, ...]:
    if not isinstance(xs, list):
        raise BridgeDecodeError(f"expected a list of numbers, got {xs!r}")
    return tuple(_real(x) for x in xs)


def _count_list(xs) -> tuple[int, ...]:
    if not isinstance(xs, list):
        raise BridgeDecodeError(f"expected a list of counts, got {xs!r}")
    out = []
    for x in xs:
        if isinstance(x, bool) or not isinstance(x, int) or x < 0:
            raise BridgeDecodeError(f"counts must be non-negative integers, got {x!r}")
        out.append(x)
    return tuple(out)


def _unsigned(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < 0:
        raise BridgeDecodeError(f"expected an unsigned integer, got {x!r}")
    return x


def encode(msg: BridgeMessage) -> bytes:
    """One message per line: compact JSON with the variant in ``type``."""
    if isinstance(msg, Reset):
        body = {"type": "reset", "seed": _unsigned(msg.seed)}
    elif isinstance(msg, ResetAck):
        body = {"type": "reset_ack", "observation": [_wire_num(x) for x in msg.observation]}
    elif isinstance(msg, Step):
        body = {"type": "step", "action": [_wire_num(x) for x in msg.action]}
    elif isinstance(msg, StepAck):
        body = {
            "type": "step_ack",
            "observation": [_wire_num(x) for x in msg.observation],
            "counts": [int(c) for c in msg.counts],
            "done": bool(msg.done),
        }
    elif isinstance(msg, Hello):
        body = {
            "type": "hello",
            "protocol_version": int(msg.protocol_version),
            "action_space": _space_payload(msg.action_space),
            "events": list(msg.events),
        }
    elif isinstance(msg, Error):
        body = {"type": "error", "code": str(msg.code), "detail": str(msg.detail)}
    else:
        raise TypeError(f"not a bridge message: {msg!r}")
    return (json.dumps(body, separators=(",", ":")) + "\n").encode("utf-8")


def decode(line: bytes | str) -> BridgeMessage:
    """Strict inverse of encode; raises BridgeDecodeError on any defect."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BridgeDecodeError("line is not UTF-8") from exc
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise BridgeDecodeError(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise BridgeDecodeError("message must be a JSON object")
    mtype = obj.get("type")
    if mtype is None:
        raise BridgeDecodeError("missing field: type")
    if mtype not in _FIELDS:
        raise BridgeDecodeError(f"unknown type: {mtype!r}")
    expected = set(_FIELDS[mtype])
    got = set(obj) - {"type"}
    missing = expected - got
    if missing:
        raise BridgeDecodeError(f"missing field: {sorted(missing)[0]}")
    extra = got - expected
    if extra:
        raise BridgeDecodeError(f"unknown field: {sorted(extra)[0]}")

    if mtype == "reset":
        return Reset(seed=_unsigned(obj["seed"]))
    if mtype == "reset_ack":
        return ResetAck(observation=_real_list(obj["observation"]))
    if mtype == "step":
        return Step(action=_real_list(obj["action"]))
    if mtype == "step_ack":
        done = obj["done"]
        if not isinstance(done, bool):
            raise BridgeDecodeError(f"done must be a boolean, got {done!r}")
        return StepAck(
            observation=_real_list(obj["observation"]),
            counts=_count_list(obj["counts"]),
            done=done,
        )
    if mtype == "hello":
        version = obj["protocol_version"]
        if isinstance(version, bool) or not isinstance(version, int):
            raise BridgeDecodeError("protocol_version must be an integer")
        events = obj["events"]
        if not isinstance(events, list) or not all(isinstance(e, str) for e in events):
            raise BridgeDecodeError("events must be a list of strings")
        return Hello(
            protocol_version=version,
            action_space=_space_from_payload(obj["action_space"]),
            events=tuple(events),
        )
    # error
    code, detail = obj["code"], obj["detail"]
    if not isinstance(code, str) or not isinstance(detail, str):
        raise BridgeDecodeError("error code and detail must be strings")
    return Error(code=code, detail=detail)


def _send(wfile, msg: BridgeMessage) -> None:
    wfile.write(encode(msg))
    wfile.flush()


def serve_dut(dut: DutModel, rfile, wfile, max_steps: int = 1) -> None:
    """Serve one session: hello, then answer reset/step until the stream closes.

    Decode failures and design-model faults are answered with error
    messages and the session continues; only transport closure ends it.
    """
    space = dut.action_space()
    _send(wfile, Hello(PROTOCOL_VERSION, space, dut.event_names()))
    rng = None
    steps_taken = 0
    try:
        for line in rfile:
            try:
                msg = decode(line)
            except BridgeDecodeError as exc:
                _send(wfile, Error("decode", str(exc)))
                continue
            if isinstance(msg, Reset):
                try:
                    obs = dut.reset(msg.seed)
                except Exception as exc:  # noqa: BLE001 - reported to the peer
                    _send(wfile, Error("dut_fault", f"{type(exc).__name__}: {exc}"))
                    continue
                rng = stimulus_rng(msg.seed)
                steps_taken = 0
                _send(wfile, ResetAck(tuple(float(x) for x in obs)))
            elif isinstance(msg, Step):
                if rng is None:
                    _send(wfile, Error("protocol", "step before reset"))
                    continue
                if steps_taken >= max_steps:
                    _send(wfile, Error("protocol", "step after episode end"))
                    continue
                action = Action(msg.action)
                violations = validate(space, action)
                if violations:
                    _send(wfile, Error("invalid_action", violations[0].message))
                    continue
                try:
                    obs, counts = dut.step(action, rng)
                except Exception as exc:  # noqa: BLE001 - reported to the peer
                    _send(wfile, Error("dut_fault", f"{type(exc).__name__}: {exc}"))
                    continue
                steps_taken += 1
                _send(
                    wfile,
                    StepAck(
                        observation=tuple(float(x) for x in obs),
                        counts=tuple(int(c) for c in counts),
                        done=steps_taken >= max_steps,
                    ),
                )
            else:
                _send(wfile, Error("protocol", f"unexpected message type {type(msg).__name__}"))
    except (BrokenPipeError, ConnectionResetError):
        return


class DutProxy(DutModel):
    """Client-side design model backed by one bridge session."""

    def __init__(self, rfile, wfile, hello: Hello, sock: socket.socket | None = None):
        self._rfile = rfile
        self._wfile = wfile
        self._hello = hello
        self._sock = sock

    def _request(self, msg: BridgeMessage, expected: type) -> BridgeMessage:
        try:
            _send(self._wfile, msg)
            line = self._rfile.readline()
        except (TimeoutError, socket.timeout) as exc:
            raise TransportError("timed out waiting for the serving side") from exc
        except (BrokenPipeError, ConnectionResetError, OSError) as exc:
            raise TransportError(f"transport failed: {exc}") from exc
        if not line:
            raise TransportError("serving side closed the connection")
        reply = decode(line)
        if isinstance(reply, Error):
            raise RemoteDutError(reply.code, reply.detail)
        if not isinstance(reply, expected):
            raise BridgeProtocolError(
                f"expected {expected.__name__}, got {type(reply).__name__}"
            )
        return reply

    def reset(self, seed: int):
        ack = self._request(Reset(int(seed)), ResetAck)
        return ack.observation

    def step(self, action: Action, rng=None):
        # rng is unused: stimulus randomness lives on the serving side.
        ack = self._request(Step(tuple(action.values)), StepAck)
        self.last_done = ack.done
        return ack.observation, ack.counts

    def event_names(self):
        return self._hello.events

    def action_space(self):
        return self._hello.action_space

    def close(self) -> None:
        for closer in (self._rfile, self._wfile, self._sock):
            if closer is not None:
                try:
                    closer.close()
                except OSError:
                    pass


def connect_dut(rfile, wfile, sock: socket.socket | None = None) -> DutProxy:
    """Attach to a serving side over an open stream pair; reads the hello."""
    try:
        line = rfile.readline()
    except (TimeoutError, socket.timeout) as exc:
        raise TransportError("timed out waiting for hello") from exc
    if not line:
        raise TransportError("stream closed before hello")
    hello = decode(line)
    if not isinstance(hello, Hello):
        raise BridgeProtocolError(f"expected hello, got {type(hello).__name__}")
    if hello.protocol_version != PROTOCOL_VERSION:
        raise BridgeProtocolError(
            f"unsupported protocol_version {hello.protocol_version}, "
            f"this side speaks {PROTOCOL_VERSION}"
        )
    return DutProxy(rfile, wfile, hello, sock=sock)


def connect_tcp(host: str, port: int, timeout: float = DEFAULT_TIMEOUT) -> DutProxy:
    """Connect to a TCP serving side; the timeout applies to every response."""
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except OSError as exc:
        raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
    sock.settimeout(timeout)
    return connect_dut(sock.makefile("rb"), sock.makefile("wb"), sock=sock)


def serve_tcp(
    dut_factory,
    host: str = "127.0.0.1",
    port: int = 0,
    max_sessions: int | None = None,
    on_bound=None,
) -> None:
    """Accept connections and serve each with a fresh design-model instance.

    ``on_bound`` receives the actual bound port (useful with port 0).
    ``max_sessions`` limits how many connections are served before
    returning; None serves forever.
    """
    import threading

    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind((host, port))
        server.listen()
        if on_bound is not None:
            on_bound(server.getsockname()[1])
        served = 0
        while max_sessions is None or served < max_sessions:
            conn, _ = server.accept()
            served += 1

            def session(c=conn):
                with c:
                    serve_dut(dut_factory(), c.makefile("rb"), c.makefile("wb"))

            if max_sessions == 1:
                session()
            else:
                threading.Thread(target=session, daemon=True).start()
