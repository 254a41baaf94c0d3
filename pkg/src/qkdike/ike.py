"""Simplified IKEv2 key establishment over the virtual network.

Method 1 of a proposal runs in IKE_SA_INIT, each further method in its own
IKE_INTERMEDIATE round (multiple key exchanges, RFC 9370 style), then a
fixed-size IKE_AUTH exchange closes the key-establishment window. Wire
sizes come from :func:`plan_fragments`; no real IKE encoding is produced.
"""

from __future__ import annotations

import enum
import hashlib
import math
import random
import re
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

from .errors import HandshakeFailure, QkdIkeError
from .etsi import EtsiAdapter, QkdBackendConfig
from .kme import KmePair, Side
from .methods import KeMethod, Role, canonical_method, create_method
from .netsim import Channel, Event, EventQueue, NetworkProfile, VirtualClock
from .registry import REGISTRY, Registry


class ExchangeType(enum.IntEnum):
    IKE_SA_INIT = 34
    IKE_AUTH = 35
    CREATE_CHILD_SA = 36
    INFORMATIONAL = 37
    IKE_INTERMEDIATE = 43


class Direction(str, enum.Enum):
    REQUEST = "request"
    RESPONSE = "response"


@dataclass(frozen=True)
class FragmentationModel:
    frame_cap: float = 1514
    per_fragment_overhead: int = 34
    base_overhead_initiator: int = 236
    base_overhead_responder: int = 269

    def __post_init__(self):
        biggest = max(self.base_overhead_initiator, self.base_overhead_responder)
        if not self.frame_cap > self.per_fragment_overhead + biggest:
            raise ValueError("frame_cap too small for the per-message overheads")

    def base_overhead(self, direction: Direction) -> int:
        if Direction(direction) is Direction.REQUEST:
            return self.base_overhead_initiator
        return self.base_overhead_responder


@dataclass(frozen=True)
class WirePlan:
    fragment_count: int
    fragment_sizes: tuple
    total_bytes: int
    crypto_payload_len: int
    frame_cap: float

    @property
    def last(self) -> int:
        return self.fragment_sizes[-1]

    @property
    def avail(self):
        return self.frame_cap - self.last

    @property
    def overhead(self) -> int:
        return self.total_bytes - self.crypto_payload_len


def plan_fragments(model: FragmentationModel, crypto_payload_len: int, direction) -> WirePlan:
    if crypto_payload_len < 0:
        raise ValueError("crypto_payload_len must be >= 0")
    body = crypto_payload_len + model.base_overhead(direction)
    per = model.per_fragment_overhead
    n = max(1, math.ceil(body / (model.frame_cap - per)))
    total = body + per * n
    if n == 1:
        sizes = (total,)
    else:
        cap = int(model.frame_cap)
        sizes = (cap,) * (n - 1) + (total - (n - 1) * cap,)
    return WirePlan(n, sizes, total, crypto_payload_len, model.frame_cap)


def derive_final_secret(secrets: Sequence[bytes]) -> bytes:
    if not secrets:
        raise ValueError("at least one secret is required")
    return hashlib.sha256(b"".join(secrets)).digest()


_KE_SPLIT = re.compile(r"-ke(\d+)_")


@dataclass(frozen=True)
class Proposal:
    label: str
    methods: tuple

    @property
    def n(self) -> int:
        return len(self.methods)

    @property
    def intermediate_rounds(self) -> int:
        return self.n - 1


def make_label(methods: Sequence[str]) -> str:
    return methods[0] + "".join(f"-ke{i}_{m}" for i, m in enumerate(methods[1:], start=1))


def parse_proposal(label: str, registry: Registry = REGISTRY) -> Proposal:
    """Parse ``m1-ke1_m2-ke2_m3`` into its ordered method identifiers."""
    text = label.strip()
    if not text:
        raise ValueError("empty proposal")
    parts = _KE_SPLIT.split(text)
    methods = parts[0::2]
    numbers = [int(x) for x in parts[1::2]]
    if numbers != list(range(1, len(numbers) + 1)):
        raise ValueError(f"{label!r}: additional key exchanges must be numbered ke1, ke2, ...")
    if any(not m for m in methods):
        raise ValueError(f"{label!r}: empty method identifier")
    methods = tuple(canonical_method(m, registry) for m in methods)
    return Proposal(make_label(methods), methods)


@dataclass
class EngineConfig:
    model: FragmentationModel = field(default_factory=FragmentationModel)
    qkd: QkdBackendConfig = field(default_factory=QkdBackendConfig)
    auth_request_len: int = 303
    auth_response_len: int = 303
    retransmit_timeout: float = 3000.0  # ms
    retransmit_tries: int = 3  # retransmissions after the first send
    registry: Registry = REGISTRY


@dataclass
class MessageRecord:
    exchange_type: int
    message_id: int
    direction: str
    attempt: int
    crypto_bytes: int
    total_bytes: int
    fragments: int
    t_send: float
    t_recv: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["exchange_name"] = ExchangeType(self.exchange_type).name
        return d


@dataclass
class MethodRecord:
    identifier: str
    role: str
    round: int
    t_create: float
    t_destroy: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class HandshakeTranscript:
    proposal: str
    methods: List[str]
    seed: int
    messages: List[MessageRecord] = field(default_factory=list)
    lifecycles: List[MethodRecord] = field(default_factory=list)
    initiator_secret: Optional[bytes] = None
    responder_secret: Optional[bytes] = None
    success: bool = False
    failure: Optional[str] = None
    t_done: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "proposal": self.proposal,
            "methods": list(self.methods),
            "seed": self.seed,
            "success": self.success,
            "failure": self.failure,
            "t_done": self.t_done,
            "initiator_secret": self.initiator_secret.hex() if self.initiator_secret else None,
            "responder_secret": self.responder_secret.hex() if self.responder_secret else None,
            "messages": [m.to_dict() for m in self.messages],
            "lifecycles": [m.to_dict() for m in self.lifecycles],
        }


@dataclass(frozen=True)
class Fragment:
    exchange_type: ExchangeType
    message_id: int
    direction: Direction
    attempt: int
    number: int
    count: int
    size: int


class _Endpoint:
    def __init__(self, role: Role, side: Side, kme: Optional[KmePair], qkd: QkdBackendConfig, rng):
        self.role = role
        self.clock = VirtualClock()
        self.adapter = EtsiAdapter(kme, qkd.for_side(side), self.clock)
        self.rng = rng
        self.methods: List[KeMethod] = []
        self.records: List[MethodRecord] = []
        self.secrets: List[bytes] = []

    def destroy_all(self) -> None:
        for method, record in zip(self.methods, self.records):
            if method.t_destroy is None:
                try:
                    method.destroy()
                except QkdIkeError:
                    pass
            record.t_destroy = method.t_destroy


class Handshake:
    """One initiator/responder pair driven by an :class:`EventQueue`.

    Several handshakes may share a queue (and a KME pair); each owns its
    channel and endpoint clocks.
    """

    def __init__(self, proposal, network: NetworkProfile, kme: Optional[KmePair] = None,
                 config: Optional[EngineConfig] = None, seed: int = 0):
        self.config = config or EngineConfig()
        if isinstance(proposal, str):
            proposal = parse_proposal(proposal, self.config.registry)
        self.proposal = proposal
        self.network = network
        self.kme = kme
        self.seed = seed
        self.transcript = HandshakeTranscript(proposal.label, list(proposal.methods), seed)
        self.queue: Optional[EventQueue] = None
        self.channel: Optional[Channel] = None
        self.initiator = _Endpoint(Role.INITIATOR, Side.A, kme, self.config.qkd,
                                   random.Random(f"{seed}:initiator"))
        self.responder = _Endpoint(Role.RESPONDER, Side.B, kme, self.config.qkd,
                                   random.Random(f"{seed}:responder"))
        self.done = False
        # initiator state
        self._round = -1
        self._outstanding: Optional[tuple] = None  # (exchange, message_id, payload)
        self._attempts = 0
        self._timer: Optional[Event] = None
        # responder state
        self._last_id = -1
        self._cached: Optional[tuple] = None
        # reassembly: (direction, message_id, attempt) -> fragments seen
        self._partial: Dict[tuple, int] = {}
        self._records: Dict[tuple, MessageRecord] = {}

    # -- plumbing ------------------------------------------------------

    def start(self, queue: EventQueue) -> None:
        self.queue = queue
        self.channel = Channel(self.network, queue)
        self.initiator.clock.sync(queue.now)
        self.responder.clock.sync(queue.now)
        queue.schedule(queue.now, self._guard(self._begin_next_round), label="start")

    def _guard(self, fn, *args):
        def run():
            if self.done:
                return
            try:
                fn(*args)
            except QkdIkeError as exc:
                self._fail(f"{type(exc).__name__}: {exc}")
        return run

    def _fail(self, reason: str) -> None:
        if self.done:
            return
        self.done = True
        if self._timer is not None:
            self._timer.cancel()
        self.initiator.destroy_all()
        self.responder.destroy_all()
        self.transcript.failure = reason
        self.transcript.t_done = self.queue.now

    def _transmit(self, sender: _Endpoint, exchange: ExchangeType, message_id: int,
                  direction: Direction, payload: bytes, attempt: int) -> None:
        plan = plan_fragments(self.config.model, len(payload), direction)
        t_send = sender.clock.now
        record = MessageRecord(int(exchange), message_id, direction.value, attempt,
                               len(payload), plan.total_bytes, plan.fragment_count, t_send)
        self.transcript.messages.append(record)
        key = (direction, message_id, attempt)
        self._records[key] = record
        self._partial[key] = 0
        for i, size in enumerate(plan.fragment_sizes):
            frag = Fragment(exchange, message_id, direction, attempt, i, plan.fragment_count, size)
            self.channel.send(frag, t_send, lambda f, p=payload: self._guard(self._on_fragment, f, p)())

    def _on_fragment(self, frag: Fragment, payload: bytes) -> None:
        key = (frag.direction, frag.message_id, frag.attempt)
        self._partial[key] += 1
        if self._partial[key] < frag.count:
            return
        self._records[key].t_recv = self.queue.now
        if frag.direction is Direction.REQUEST:
            self._responder_receive(frag.exchange_type, frag.message_id, payload)
        else:
            self._initiator_receive(frag.exchange_type, frag.message_id, payload)

    # -- initiator -----------------------------------------------------

    def _begin_next_round(self) -> None:
        ep = self.initiator
        ep.clock.sync(self.queue.now)
        self._round += 1
        k = self._round
        if k < self.proposal.n:
            ident = self.proposal.methods[k]
            method = create_method(ident, Role.INITIATOR, clock=ep.clock, rng=ep.rng,
                                   adapter=ep.adapter, registry=self.config.registry)
            ep.methods.append(method)
            record = MethodRecord(ident, Role.INITIATOR.value, k, method.t_create)
            ep.records.append(record)
            self.transcript.lifecycles.append(record)
            payload = method.get_public_key()
            exchange = ExchangeType.IKE_SA_INIT if k == 0 else ExchangeType.IKE_INTERMEDIATE
        else:
            self.transcript.initiator_secret = derive_final_secret(ep.secrets)
            payload = bytes(self.config.auth_request_len)
            exchange = ExchangeType.IKE_AUTH
        self._outstanding = (exchange, k, payload)
        self._attempts = 0
        self._send_request()

    def _send_request(self) -> None:
        exchange, message_id, payload = self._outstanding
        self._attempts += 1
        self._transmit(self.initiator, exchange, message_id, Direction.REQUEST, payload, self._attempts)
        deadline = self.initiator.clock.now + self.config.retransmit_timeout
        self._timer = self.queue.schedule(deadline, self._guard(self._on_timeout, message_id), label="timeout")

    def _on_timeout(self, message_id: int) -> None:
        if self._outstanding is None or self._outstanding[1] != message_id:
            return
        if self._attempts > self.config.retransmit_tries:
            self._fail(f"retransmission budget exhausted for message {message_id}")
            return
        self.initiator.clock.sync(self.queue.now)
        self._send_request()

    def _initiator_receive(self, exchange: ExchangeType, message_id: int, payload: bytes) -> None:
        if self._outstanding is None or self._outstanding[1] != message_id:
            return  # duplicate or stale response
        self._outstanding = None
        self._timer.cancel()
        ep = self.initiator
        ep.clock.sync(self.queue.now)
        if exchange is ExchangeType.IKE_AUTH:
            self._complete()
            return
        method = ep.methods[message_id]
        method.set_public_key(payload)
        ep.secrets.append(method.get_shared_secret())
        method.destroy()
        ep.records[message_id].t_destroy = method.t_destroy
        self._begin_next_round()

    def _complete(self) -> None:
        t = self.transcript
        if t.initiator_secret != t.responder_secret:
            self._fail("shared secret mismatch")
            return
        self.done = True
        t.success = True
        t.t_done = self.initiator.clock.now

    # -- responder -----------------------------------------------------

    def _responder_receive(self, exchange: ExchangeType, message_id: int, payload: bytes) -> None:
        ep = self.responder
        ep.clock.sync(self.queue.now)
        if message_id == self._last_id and self._cached is not None:
            exchange_c, payload_c = self._cached
            self._transmit(ep, exchange_c, message_id, Direction.RESPONSE, payload_c,
                           self._records_attempt(Direction.RESPONSE, message_id))
            return
        if message_id != self._last_id + 1:
            return
        if exchange is ExchangeType.IKE_AUTH:
            ep.destroy_all()
            if self.transcript.initiator_secret != self.transcript.responder_secret:
                self._fail("AUTH verification failed: shared secret mismatch")
                return
            response = bytes(self.config.auth_response_len)
        else:
            ident = self.proposal.methods[message_id]
            method = create_method(ident, Role.RESPONDER, clock=ep.clock, rng=ep.rng,
                                   adapter=ep.adapter, registry=self.config.registry)
            ep.methods.append(method)
            record = MethodRecord(ident, Role.RESPONDER.value, message_id, method.t_create)
            ep.records.append(record)
            self.transcript.lifecycles.append(record)
            method.set_public_key(payload)
            response = method.get_public_key()
            ep.secrets.append(method.get_shared_secret())
            if len(ep.secrets) == self.proposal.n:
                self.transcript.responder_secret = derive_final_secret(ep.secrets)
        self._last_id = message_id
        self._cached = (exchange, response)
        self._transmit(ep, exchange, message_id, Direction.RESPONSE, response, 1)

    def _records_attempt(self, direction: Direction, message_id: int) -> int:
        n = 1
        while (direction, message_id, n) in self._records:
            n += 1
        return n


def run_handshake(proposal, network: NetworkProfile, kme_pair: Optional[KmePair] = None,
                  config: Optional[EngineConfig] = None, seed: int = 0) -> HandshakeTranscript:
    """Run one handshake to completion on a private event queue.

    Raises :class:`HandshakeFailure` (carrying the partial transcript) when
    a method fails, the retransmission budget runs out, or secrets differ.
    """
    hs = Handshake(proposal, network, kme_pair, config, seed)
    queue = EventQueue()
    hs.start(queue)
    queue.run(until=lambda: hs.done)
    if not hs.done:
        hs._fail("event queue drained before completion")
    if not hs.transcript.success:
        raise HandshakeFailure(hs.transcript.failure, hs.transcript)
    return hs.transcript
