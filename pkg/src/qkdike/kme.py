"""A synchronized pair of Key Management Entities.

Side ``A`` and side ``B`` share one logical pool of pre-distributed keys.
Two access styles are offered over that pool:

* ETSI GS QKD 004 (stateful): ``open_connect`` / ``get_key_004`` / ``close``
  on a key stream addressed by a 16-byte KSID and a 32-bit index.
* ETSI GS QKD 014 (stateless): ``get_key_014`` hands out fresh
  (key_id, key) pairs, ``get_key_with_ids_014`` lets the peer fetch them.

Every call costs ``response_latency`` ms on the caller's clock.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .errors import AlreadyConsumed, KeyNotFound, PoolExhausted, SessionExpired, UnknownKsid
from .netsim import VirtualClock
from .registry import expand

ID_LEN = 16
MAX_INDEX = 0xFFFFFFFF


class Side(str, enum.Enum):
    A = "A"
    B = "B"

    @property
    def peer(self) -> "Side":
        return Side.B if self is Side.A else Side.A


class KeyState(str, enum.Enum):
    AVAILABLE = "available"
    DELIVERED = "delivered"
    CONSUMED = "consumed"


@dataclass(frozen=True)
class KmePairConfig:
    key_size: int = 32
    pool_capacity: int = 1000
    response_latency: float = 0.0
    replenish_rate: float = 0.0
    max_per_request: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.key_size <= 0:
            raise ValueError("key_size must be positive")
        if self.pool_capacity < 0:
            raise ValueError("pool_capacity must be >= 0")
        if self.response_latency < 0:
            raise ValueError("response_latency must be >= 0")
        if self.replenish_rate < 0:
            raise ValueError("replenish_rate must be >= 0")


@dataclass
class QkdKeyRecord:
    key_id: bytes
    material: bytes
    state: Dict[Side, KeyState] = field(
        default_factory=lambda: {Side.A: KeyState.AVAILABLE, Side.B: KeyState.AVAILABLE}
    )


@dataclass
class KeyStreamSession:
    ksid: bytes
    creator_side: Side
    secret: bytes
    created_at: float
    qos_ttl: Optional[float] = None  # virtual seconds
    open_on: Set[Side] = field(default_factory=set)
    cursor: Dict[Side, int] = field(default_factory=lambda: {Side.A: 0, Side.B: 0})
    drawn: Set[int] = field(default_factory=set)

    def expired(self, now_ms: float) -> bool:
        return self.qos_ttl is not None and now_ms > self.created_at + self.qos_ttl * 1000.0


@dataclass(frozen=True)
class KmeCall:
    side: Side
    op: str
    start: float
    end: float


def _as_side(side) -> Side:
    return side if isinstance(side, Side) else Side(side)


class KmePair:
    """Both KMEs of a QKD link, backed by one synchronized store.

    Callers may pass their own ``clock`` to each operation; the call then
    costs ``response_latency`` on that clock. Without one, the pair's own
    clock is used.
    """

    def __init__(self, config: Optional[KmePairConfig] = None, clock: Optional[VirtualClock] = None):
        self.config = config or KmePairConfig()
        self.clock = clock or VirtualClock()
        self._rng = random.Random(self.config.seed)
        self._pool_secret = self._rng.getrandbits(256).to_bytes(32, "big")
        self._stored = self.config.pool_capacity
        self._refill_at = 0.0
        self._refill_carry = 0.0
        self._keys: Dict[bytes, QkdKeyRecord] = {}
        self._sessions: Dict[bytes, KeyStreamSession] = {}
        self.calls: List[KmeCall] = []

    # -- bookkeeping ---------------------------------------------------

    def _begin(self, clock: Optional[VirtualClock]) -> VirtualClock:
        clock = clock or self.clock
        self._replenish(clock.now)
        return clock

    def _end(self, clock: VirtualClock, side: Side, op: str) -> None:
        start = clock.now
        clock.advance(self.config.response_latency)
        self.calls.append(KmeCall(side, op, start, clock.now))

    def _replenish(self, now: float) -> None:
        rate = self.config.replenish_rate
        if now <= self._refill_at:
            return
        if rate > 0:
            self._refill_carry += (now - self._refill_at) * rate / 1000.0
            whole = int(self._refill_carry)
            self._refill_carry -= whole
            self._stored = min(self.config.pool_capacity, self._stored + whole)
        self._refill_at = now

    def _take(self, n: int) -> None:
        if n > self._stored:
            raise PoolExhausted(f"requested {n} keys, {self._stored} available")
        self._stored -= n

    def _fresh_id(self) -> bytes:
        while True:
            candidate = self._rng.getrandbits(128).to_bytes(ID_LEN, "big")
            if candidate not in self._keys and candidate not in self._sessions:
                return candidate

    @property
    def stored_key_count(self) -> int:
        return self._stored

    # -- ETSI GS QKD 004 -----------------------------------------------

    def _session(self, ksid: bytes, clock: VirtualClock) -> KeyStreamSession:
        session = self._sessions.get(bytes(ksid))
        if session is None:
            raise UnknownKsid(f"unknown key stream {bytes(ksid).hex()}")
        if session.expired(clock.now):
            raise SessionExpired(f"key stream {session.ksid.hex()} expired")
        return session

    def open_connect(self, side, ksid: Optional[bytes] = None, qos_ttl: Optional[float] = None,
                     clock: Optional[VirtualClock] = None) -> bytes:
        """Open a new stream (``ksid=None``) or join the peer's stream."""
        side = _as_side(side)
        clock = self._begin(clock)
        if ksid is None:
            if self._stored < 1:
                raise PoolExhausted("no key material left to open a stream")
            ksid = self._fresh_id()
            secret = self._rng.getrandbits(256).to_bytes(32, "big")
            self._sessions[ksid] = KeyStreamSession(ksid, side, secret, clock.now, qos_ttl, {side})
        else:
            session = self._session(ksid, clock)
            session.open_on.add(side)
            ksid = session.ksid
        self._end(clock, side, "OPEN_CONNECT")
        return ksid

    def stream_material(self, session: KeyStreamSession, index: int) -> bytes:
        prf = hmac.new(session.secret, index.to_bytes(4, "big"), hashlib.sha256).digest()
        return expand(prf, self.config.key_size)

    def get_key_004(self, side, ksid: bytes, index: Optional[int] = None,
                    clock: Optional[VirtualClock] = None) -> Tuple[bytes, int]:
        """Read one key from the stream; returns (material, index used)."""
        side = _as_side(side)
        clock = self._begin(clock)
        session = self._session(ksid, clock)
        if side not in session.open_on:
            raise UnknownKsid(f"side {side.value} has no open connection on {session.ksid.hex()}")
        if index is None:
            used = session.cursor[side]
        else:
            if not 0 <= index <= MAX_INDEX:
                raise ValueError("index must be a 32-bit unsigned integer")
            used = index
        if used > MAX_INDEX:
            raise PoolExhausted("key stream index space exhausted")
        if used not in session.drawn:
            self._take(1)
            session.drawn.add(used)
        if index is None:
            session.cursor[side] = used + 1
        material = self.stream_material(session, used)
        self._end(clock, side, "GET_KEY")
        return material, used

    def close(self, side, ksid: bytes, clock: Optional[VirtualClock] = None) -> None:
        side = _as_side(side)
        clock = self._begin(clock)
        session = self._sessions.get(bytes(ksid))
        if session is None or side not in session.open_on:
            raise UnknownKsid(f"side {side.value} has no open connection on {bytes(ksid).hex()}")
        session.open_on.discard(side)
        if not session.open_on:
            del self._sessions[session.ksid]
        self._end(clock, side, "CLOSE")

    # -- ETSI GS QKD 014 -----------------------------------------------

    def get_key_014(self, side, count: int = 1, size: Optional[int] = None,
                    clock: Optional[VirtualClock] = None) -> List[Tuple[bytes, bytes]]:
        side = _as_side(side)
        clock = self._begin(clock)
        size = self.config.key_size if size is None else size
        if count < 1 or size < 1:
            raise ValueError("count and size must be positive")
        if count > self._stored:
            raise PoolExhausted(f"requested {count} keys, {self._stored} available")
        if count > self.config.max_per_request:
            raise ValueError(f"at most {self.config.max_per_request} keys per request")
        self._take(count)
        out = []
        for _ in range(count):
            key_id = self._fresh_id()
            material = expand(hashlib.sha256(self._pool_secret + key_id).digest(), size)
            record = QkdKeyRecord(key_id, material)
            record.state[side] = KeyState.DELIVERED
            self._keys[key_id] = record
            out.append((key_id, material))
        self._end(clock, side, "GET_KEY")
        return out

    def get_key_with_ids_014(self, side, key_ids: Sequence[bytes],
                             clock: Optional[VirtualClock] = None) -> List[Tuple[bytes, bytes]]:
        side = _as_side(side)
        clock = self._begin(clock)
        records = []
        for key_id in key_ids:
            record = self._keys.get(bytes(key_id))
            if record is None or record.state[side.peer] is KeyState.AVAILABLE:
                raise KeyNotFound(f"key {bytes(key_id).hex()} was not delivered to the peer")
            if record.state[side] is not KeyState.AVAILABLE:
                raise AlreadyConsumed(f"key {bytes(key_id).hex()} already retrieved")
            records.append(record)
        for record in records:
            record.state[side] = KeyState.CONSUMED
        self._end(clock, side, "GET_KEY_WITH_IDS")
        return [(r.key_id, r.material) for r in records]

    def get_status(self, side, clock: Optional[VirtualClock] = None) -> dict:
        side = _as_side(side)
        clock = self._begin(clock)
        status = {
            "stored_key_count": self._stored,
            "key_size": self.config.key_size,
            "max_per_request": self.config.max_per_request,
            "max_key_count": self.config.pool_capacity,
        }
        self._end(clock, side, "GET_STATUS")
        return status
