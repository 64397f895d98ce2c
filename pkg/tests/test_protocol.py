"""Wire protocol: codec identity under fuzzing, sequence discipline,
handshake outcomes, the remote-agent proxy, and proxy transparency
(a wire-connected strategy leaves the same transcript as an in-process one)."""

import random
import socket
import string
import threading
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gamearena.protocol as protocol
from conftest import WireClient, tit_for_tat_policy
from gamearena.agents import AgentMemory, StrategyKind, perceive
from gamearena.arena import (
    AgentRegistration,
    Arena,
    PlanGame,
    ScriptedAgent,
    build_config,
)
from gamearena.errors import (
    IllegalForfeit,
    ProtocolError,
    TimeoutForfeit,
    TransportLost,
)
from gamearena.games.engine import init_state
from gamearena.games.types import GameKind, MatchConfig, derive_seed
from gamearena.protocol import (
    Connection,
    ProtocolMessage,
    RemoteAgentProxy,
    client_handshake,
    decode,
    encode,
    server_handshake,
)
from gamearena.server import ArenaServer
from gamearena.storage import read_index, transcript_lines, transcript_path


def random_payload(rng: random.Random, depth: int = 0):
    choices = ["str", "int", "float", "bool", "none"]
    if depth < 2:
        choices += ["list", "dict"]
    kind = rng.choice(choices)
    if kind == "str":
        alphabet = string.printable + "äöüß∆💡"
        return "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
    if kind == "int":
        return rng.randrange(-(10**9), 10**9)
    if kind == "float":
        return rng.uniform(-1e6, 1e6)
    if kind == "bool":
        return rng.random() < 0.5
    if kind == "none":
        return None
    if kind == "list":
        return [random_payload(rng, depth + 1) for _ in range(rng.randrange(0, 4))]
    return {
        f"k{i}": random_payload(rng, depth + 1) for i in range(rng.randrange(0, 4))
    }


def random_message(rng: random.Random, seq: int) -> ProtocolMessage:
    return ProtocolMessage(
        type=rng.choice(sorted(protocol.MESSAGE_TYPES)),
        seq=seq,
        match_id=None if rng.random() < 0.3 else f"m{rng.randrange(1000)}",
        payload={f"f{i}": random_payload(rng) for i in range(rng.randrange(0, 5))},
    )


class TestCodec:
    def test_hello_is_one_tagged_line(self):
        msg = ProtocolMessage(
            type="hello", seq=1, payload={"name": "tft", "games": ["prisoners_dilemma"]}
        )
        line = encode(msg)
        assert line.endswith(b"\n") and line.count(b"\n") == 1
        assert b'"hello"' in line and b'"tft"' in line

    def test_newlines_in_text_fields_stay_escaped(self):
        msg = ProtocolMessage(type="error", seq=2, payload={"note": "line1\nline2"})
        line = encode(msg)
        assert line.count(b"\n") == 1
        assert decode(line) == msg

    def test_empty_line_is_a_keepalive_skip(self):
        assert decode(b"") is None
        assert decode(b"   \r") is None

    def test_truncated_line_is_a_protocol_error(self):
        with pytest.raises(ProtocolError):
            decode(b'{"type":"hello","seq"')

    def test_unknown_type_tag(self):
        with pytest.raises(ProtocolError) as excinfo:
            decode(b'{"type":"teleport","seq":1,"payload":{}}')
        assert excinfo.value.code == "unknown_type"

    def test_unknown_envelope_fields_are_ignored(self):
        msg = decode(b'{"type":"ping","seq":3,"payload":{},"future_field":true}')
        assert msg == ProtocolMessage(type="ping", seq=3)

    def test_bad_seq_rejected(self):
        with pytest.raises(ProtocolError):
            decode(b'{"type":"ping","seq":"one","payload":{}}')

    def test_seeded_fuzz_round_trip_identity(self):
        rng = random.Random(20240)
        for seq in range(1, 10_001):
            msg = random_message(rng, seq)
            assert decode(encode(msg)) == msg

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_hypothesis_round_trip(self, data):
        payload = data.draw(
            st.dictionaries(
                st.text(max_size=8),
                st.recursive(
                    st.none() | st.booleans() | st.integers() | st.text(max_size=20),
                    lambda inner: st.lists(inner, max_size=3),
                    max_leaves=6,
                ),
                max_size=4,
            )
        )
        msg = ProtocolMessage(
            type=data.draw(st.sampled_from(sorted(protocol.MESSAGE_TYPES))),
            seq=data.draw(st.integers(1, 2**31)),
            match_id=data.draw(st.none() | st.text(min_size=1, max_size=12)),
            payload=payload,
        )
        assert decode(encode(msg)) == msg


def pipe():
    a, b = socket.socketpair()
    return Connection(a), Connection(b)


class TestConnection:
    def test_seq_must_strictly_increase(self):
        server, client = pipe()
        client.send("ping")
        client.send("ping")
        assert server.recv(timeout=1).seq == 1
        assert server.recv(timeout=1).seq == 2
        # replaying an old seq is a protocol error
        client.sock.sendall(encode(ProtocolMessage(type="ping", seq=2)))
        with pytest.raises(ProtocolError) as excinfo:
            server.recv(timeout=1)
        assert excinfo.value.code == "seq_violation"

    def test_timeout_returns_none(self):
        server, _client = pipe()
        assert server.recv(timeout=0.05) is None

    def test_peer_close_is_transport_lost(self):
        server, client = pipe()
        client.close()
        with pytest.raises(TransportLost):
            server.recv(timeout=1)

    def test_blank_lines_are_skipped(self):
        server, client = pipe()
        client.sock.sendall(b"\n\n")
        client.send("pong")
        assert server.recv(timeout=1).type == "pong"


class TestHandshake:
    def test_hello_v1_gets_a_welcome(self):
        server, client = pipe()
        result = {}

        def client_side():
            result.update(client_handshake(client, "tft", ["prisoners_dilemma"]))

        thread = threading.Thread(target=client_side)
        thread.start()
        name, games = server_handshake(server, taken_names=set())
        thread.join()
        assert name == "tft"
        assert games == frozenset({GameKind.PRISONERS_DILEMMA})
        assert result["agent_id"] == "tft"

    def test_wrong_version_is_refused(self):
        server, client = pipe()

        def client_side():
            client.send("hello", payload={"name": "x", "games": [], "version": 99})

        threading.Thread(target=client_side).start()
        with pytest.raises(TransportLost, match="version"):
            server_handshake(server, taken_names=set())
        reply = client.recv(timeout=1)
        assert reply.type == "error" and reply.payload["code"] == "version_mismatch"

    def test_duplicate_name_is_refused(self):
        server, client = pipe()
        threading.Thread(
            target=lambda: client.send(
                "hello", payload={"name": "tft", "games": [], "version": 1}
            )
        ).start()
        with pytest.raises(TransportLost, match="duplicate"):
            server_handshake(server, taken_names={"tft"})
        reply = client.recv(timeout=1)
        assert reply.payload["code"] == "duplicate_name"

    def test_silence_times_out_and_closes(self, monkeypatch):
        monkeypatch.setattr(protocol, "HANDSHAKE_TIMEOUT_S", 0.1)
        server, _client = pipe()
        started = time.monotonic()
        with pytest.raises(TransportLost, match="no hello"):
            server_handshake(server, taken_names=set())
        assert time.monotonic() - started < 2.0
        assert server.closed


def make_obs(deadline_ms=400):
    config = MatchConfig(game=GameKind.PRISONERS_DILEMMA, rounds=10, rng_seed=3)
    return perceive(init_state(config), 0, AgentMemory(), deadline_ms=deadline_ms)


def make_proxy(ping_interval_ms=100):
    server_conn, client_conn = pipe()
    proxy = RemoteAgentProxy(
        server_conn,
        agent_id="r1",
        games=frozenset({GameKind.PRISONERS_DILEMMA}),
        ping_interval_ms=ping_interval_ms,
    )
    proxy.bind_match("m1")
    return proxy, client_conn


class TestRemoteDecide:
    def answer(self, client, action="cooperate", stale_first=False, delay=0.0):
        def run():
            try:
                msg = client.recv(timeout=2)
                assert msg.type == "observation_request"
                if delay:
                    time.sleep(delay)
                if stale_first:
                    client.send(
                        "action_response",
                        payload={"request_seq": msg.seq - 1, "action": "defect"},
                        match_id=msg.match_id,
                    )
                client.send(
                    "action_response",
                    payload={"request_seq": msg.seq, "action": action},
                    match_id=msg.match_id,
                )
                while True:
                    follow = client.recv(timeout=1)
                    if follow is None:
                        return
                    if follow.type == "ping":
                        client.send("pong")
            except TransportLost:
                pass

        thread = threading.Thread(target=run, daemon=True)
        thread.start()
        return thread

    def test_legal_answer_within_deadline(self):
        proxy, client = make_proxy()
        self.answer(client, "cooperate")
        decision = proxy.decide(make_obs(), AgentMemory(), 0)
        from gamearena.games.types import BinaryAction

        assert decision.action == BinaryAction.COOPERATE

    def test_stale_request_seq_is_ignored_then_real_answer_wins(self):
        proxy, client = make_proxy()
        self.answer(client, "cooperate", stale_first=True)
        decision = proxy.decide(make_obs(), AgentMemory(), 0)
        from gamearena.games.types import BinaryAction

        assert decision.action == BinaryAction.COOPERATE

    def test_illegal_action_forfeits(self):
        proxy, client = make_proxy()
        self.answer(client, "surrender")
        with pytest.raises(IllegalForfeit):
            proxy.decide(make_obs(), AgentMemory(), 0)

    def test_live_but_late_client_forfeits_on_timeout(self):
        proxy, client = make_proxy(ping_interval_ms=80)

        def ponger():
            try:
                while True:
                    msg = client.recv(timeout=2)
                    if msg is None:
                        return
                    if msg.type == "ping":
                        client.send("pong")
            except TransportLost:
                pass

        threading.Thread(target=ponger, daemon=True).start()
        with pytest.raises(TimeoutForfeit):
            proxy.decide(make_obs(deadline_ms=300), AgentMemory(), 0)

    def test_fully_silent_client_is_transport_lost(self):
        proxy, _client = make_proxy(ping_interval_ms=60)
        with pytest.raises(TransportLost):
            proxy.decide(make_obs(deadline_ms=400), AgentMemory(), 0)
        assert proxy.dead

    def test_closed_socket_is_transport_lost(self):
        proxy, client = make_proxy()
        client.close()
        with pytest.raises(TransportLost):
            proxy.decide(make_obs(), AgentMemory(), 0)


@pytest.fixture
def server():
    arena = Arena(deadline_ms=2000)
    server = ArenaServer(
        arena,
        entries=[PlanGame(GameKind.PRISONERS_DILEMMA, "multi", 1, rounds=10)],
        plan_agents=[
            ("housead", StrategyKind.ALWAYS_DEFECT, frozenset({GameKind.PRISONERS_DILEMMA}))
        ],
        seed=777,
        ping_interval_ms=200,
    )
    server.start()
    yield server
    server.shutdown()


class TestProxyTransparency:
    def golden_lines(self):
        """In-process run of the same pairing under the same ids and seed."""
        arena = Arena(deadline_ms=2000)
        arena.register(
            AgentRegistration(
                agent_id="housead",
                handler=ScriptedAgent(StrategyKind.ALWAYS_DEFECT),
                supported_games=frozenset({GameKind.PRISONERS_DILEMMA}),
            )
        )
        arena.register(
            AgentRegistration(
                agent_id="wire_tft",
                handler=ScriptedAgent(StrategyKind.TIT_FOR_TAT),
                supported_games=frozenset({GameKind.PRISONERS_DILEMMA}),
            )
        )
        entry = PlanGame(GameKind.PRISONERS_DILEMMA, "multi", 1, rounds=10)
        seats = ("housead", "wire_tft")
        seed = derive_seed(777, "prisoners_dilemma", "multi", 0, *seats)
        ticket = arena.matchmake(build_config(entry, seats, seed))
        record = arena.run_match(ticket)
        return transcript_lines(record), record

    def test_wire_tft_transcript_is_byte_identical(self, server, tmp_path):
        server.out_dir = tmp_path
        host, port = server.address
        client = WireClient(
            host, port, "wire_tft", ["prisoners_dilemma"], tit_for_tat_policy
        ).start()
        assert client.done.wait(timeout=15), "match did not finish over the wire"
        assert server.wait_idle(timeout=10)
        golden, record = self.golden_lines()
        wire_path = transcript_path(tmp_path, record.match_id)
        assert wire_path.exists()
        assert wire_path.read_text().splitlines() == golden
        # same payoffs as in-process: defector exploits round 1 only
        assert record.outcome.payoffs == (14, 9)
        client.close()

    def test_silent_client_aborts_without_rating_effect(self, tmp_path):
        arena = Arena(deadline_ms=1500)
        server = ArenaServer(
            arena,
            entries=[PlanGame(GameKind.PRISONERS_DILEMMA, "multi", 1, rounds=10)],
            plan_agents=[
                ("housead", StrategyKind.ALWAYS_DEFECT, frozenset({GameKind.PRISONERS_DILEMMA}))
            ],
            seed=1,
            out_dir=tmp_path,
            ping_interval_ms=150,
        )
        server.start()
        try:
            host, port = server.address
            sock = socket.create_connection((host, port), timeout=5)
            conn = Connection(sock)
            client_handshake(conn, "mute", ["prisoners_dilemma"])
            # say nothing more: the keep-alive probes go unanswered
            deadline = time.monotonic() + 10
            while time.monotonic() < deadline:
                if read_index(tmp_path):
                    break
                time.sleep(0.05)
            assert server.wait_idle(timeout=10)
            entries = read_index(tmp_path)
            assert len(entries) == 1
            assert entries[0]["status"] == "aborted"
            assert arena.board.value("pd_multi", "housead") is None
            assert arena.board.value("pd_multi", "mute") is None
        finally:
            server.shutdown()
