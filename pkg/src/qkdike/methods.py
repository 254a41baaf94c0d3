"""Key-exchange methods behind a strongSwan-style ``key_exchange_t`` contract.

Each method instance serves one endpoint of one handshake. The engine
drives it with the same four calls regardless of what sits underneath:

    initiator:  get_public_key -> (wire) -> set_public_key -> get_shared_secret
    responder:  set_public_key -> get_public_key -> (wire) -> get_shared_secret

Method identifiers used in proposals: ``qkd``, ``<kem>`` and ``qkd_<kem>``.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import BadLength, InvalidState
from .etsi import EtsiAdapter, Flow, QkdKeyHandle
from .netsim import VirtualClock
from .registry import REGISTRY, SEED_LEN, KemAlgorithmSpec, KemKeyPair, Registry


class Role(str, enum.Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"


@dataclass(frozen=True)
class SharedSecret:
    data: bytes
    composition: Tuple[Tuple[str, int], ...]


class KeMethod:
    """Lifecycle bookkeeping shared by every method."""

    identifier = "abstract"

    def __init__(self, role: Role, clock: Optional[VirtualClock] = None):
        self.role = Role(role)
        self.clock = clock or VirtualClock()
        self.t_create = self.clock.now
        self.t_destroy: Optional[float] = None
        self._sent = False
        self._received = False
        self._secret: Optional[SharedSecret] = None

    @property
    def initiator(self) -> bool:
        return self.role is Role.INITIATOR

    def _check_alive(self) -> None:
        if self.t_destroy is not None:
            raise InvalidState(f"{self.identifier}: method already destroyed")

    def get_public_key(self) -> bytes:
        self._check_alive()
        if self._sent:
            raise InvalidState(f"{self.identifier}: public value already produced")
        if not self.initiator and not self._received:
            raise InvalidState(f"{self.identifier}: responder must receive before replying")
        out = self._produce()
        self._sent = True
        return out

    def set_public_key(self, data: bytes) -> None:
        self._check_alive()
        if self._received:
            raise InvalidState(f"{self.identifier}: peer value already set")
        if self.initiator and not self._sent:
            raise InvalidState(f"{self.identifier}: initiator must send before receiving")
        self._consume(bytes(data))
        self._received = True

    def get_shared_secret(self) -> bytes:
        return self.shared_secret().data

    def shared_secret(self) -> SharedSecret:
        self._check_alive()
        if not (self._sent and self._received):
            raise InvalidState(f"{self.identifier}: exchange not complete")
        if self._secret is None:
            self._secret = self._derive()
        return self._secret

    def destroy(self) -> None:
        if self.t_destroy is not None:
            return
        try:
            self._release()
        finally:
            self.t_destroy = self.clock.now

    # subclass hooks
    def _produce(self) -> bytes:
        raise NotImplementedError

    def _consume(self, data: bytes) -> None:
        raise NotImplementedError

    def _derive(self) -> SharedSecret:
        raise NotImplementedError

    def _release(self) -> None:
        pass


def _draw(rng: random.Random) -> bytes:
    return rng.getrandbits(8 * SEED_LEN).to_bytes(SEED_LEN, "big")


class _KemCore:
    """Keygen/encaps/decaps half that both the plain and hybrid methods reuse."""

    def __init__(self, spec: KemAlgorithmSpec, registry: Registry, rng: random.Random):
        self.spec = spec
        self.engine = registry.engine(spec.name)
        self.rng = rng
        self.keypair: Optional[KemKeyPair] = None
        self.ciphertext: Optional[bytes] = None
        self.secret: Optional[bytes] = None

    def keygen(self) -> bytes:
        self.keypair = self.engine.keygen(_draw(self.rng))
        return self.keypair.public_key

    def encaps(self, public_key: bytes) -> None:
        self.ciphertext, self.secret = self.engine.encaps(public_key, _draw(self.rng))

    def decaps(self, ciphertext: bytes) -> None:
        self.secret = self.engine.decaps(self.keypair, ciphertext)


class KemMethod(KeMethod):
    def __init__(self, spec: KemAlgorithmSpec, role: Role, rng: Optional[random.Random] = None,
                 clock: Optional[VirtualClock] = None, registry: Registry = REGISTRY):
        super().__init__(role, clock)
        self.identifier = spec.name
        self.kem = _KemCore(spec, registry, rng or random.Random())

    def _produce(self) -> bytes:
        return self.kem.keygen() if self.initiator else self.kem.ciphertext

    def _consume(self, data: bytes) -> None:
        if self.initiator:
            self.kem.decaps(data)
        else:
            self.kem.encaps(data)

    def _derive(self) -> SharedSecret:
        return SharedSecret(self.kem.secret, (("kem", len(self.kem.secret)),))


class _QkdCore:
    """QKD half: which side acquires, which side retrieves, per flow."""

    def __init__(self, adapter: EtsiAdapter, role: Role):
        self.adapter = adapter
        self.role = role
        self.handle: Optional[QkdKeyHandle] = None

    @property
    def generates(self) -> bool:
        client = self.adapter.config.flow is Flow.CLIENT_INITIATED
        return client == (self.role is Role.INITIATOR)

    @property
    def handle_len(self) -> int:
        return self.adapter.config.handle_len

    def outgoing(self) -> bytes:
        """Encoded handle if this side picks the key, else nothing."""
        if not self.generates:
            return b""
        self.handle = self.adapter.acquire_new()
        return self.adapter.encode_handle(self.handle)

    def incoming(self, data: bytes) -> None:
        if self.generates:
            if data:
                raise BadLength(f"expected an empty QKD payload, got {len(data)} bytes")
            if self.handle is not None and self.handle.pending:
                self.adapter.complete_pending(self.handle)
            return
        peer = self.adapter.decode_handle(data)
        self.handle = self.adapter.retrieve_by_id(peer.key_id, peer.index)

    @property
    def material(self) -> bytes:
        if self.handle is None or self.handle.pending:
            raise InvalidState("QKD key not retrieved yet")
        return self.handle.material

    def release(self) -> None:
        if self.handle is not None:
            self.adapter.release(self.handle)


class QkdMethod(KeMethod):
    identifier = "qkd"

    def __init__(self, adapter: EtsiAdapter, role: Role, clock: Optional[VirtualClock] = None):
        super().__init__(role, clock or adapter.clock)
        self.qkd = _QkdCore(adapter, self.role)

    def _produce(self) -> bytes:
        return self.qkd.outgoing()

    def _consume(self, data: bytes) -> None:
        self.qkd.incoming(data)

    def _derive(self) -> SharedSecret:
        key = self.qkd.material
        return SharedSecret(key, (("qkd", len(key)),))

    def _release(self) -> None:
        self.qkd.release()


class QkdKemMethod(KeMethod):
    """Parallel hybrid: QKD handle and KEM value share one KE payload.

    The handle rides with whichever message the key-picking side sends;
    the secret is always ``kem_secret || qkd_key``.
    """

    def __init__(self, spec: KemAlgorithmSpec, adapter: EtsiAdapter, role: Role,
                 rng: Optional[random.Random] = None, clock: Optional[VirtualClock] = None,
                 registry: Registry = REGISTRY):
        super().__init__(role, clock or adapter.clock)
        self.identifier = f"qkd_{spec.name}"
        self.kem = _KemCore(spec, registry, rng or random.Random())
        self.qkd = _QkdCore(adapter, self.role)

    def _produce(self) -> bytes:
        kem_part = self.kem.keygen() if self.initiator else self.kem.ciphertext
        return self.qkd.outgoing() + kem_part

    def _consume(self, data: bytes) -> None:
        if self.qkd.generates:
            handle_part, kem_part = b"", data
        else:
            n = self.qkd.handle_len
            if len(data) < n:
                raise BadLength(f"hybrid payload shorter than the {n}-byte key handle")
            handle_part, kem_part = data[:n], data[n:]
        if self.initiator:
            self.kem.decaps(kem_part)
        else:
            self.kem.encaps(kem_part)
        self.qkd.incoming(handle_part)

    def _derive(self) -> SharedSecret:
        kem_secret, key = self.kem.secret, self.qkd.material
        return SharedSecret(kem_secret + key, (("kem", len(kem_secret)), ("qkd", len(key))))

    def _release(self) -> None:
        self.qkd.release()


def parse_method(identifier: str, registry: Registry = REGISTRY) -> Tuple[str, Optional[KemAlgorithmSpec]]:
    """Split a method identifier into (kind, kem spec); kind is kem/qkd/qkd_kem."""
    ident = identifier.strip()
    low = ident.lower()
    if low == "qkd":
        return "qkd", None
    if low.startswith("qkd_"):
        return "qkd_kem", registry.lookup(ident[4:])
    return "kem", registry.lookup(ident)


def canonical_method(identifier: str, registry: Registry = REGISTRY) -> str:
    kind, spec = parse_method(identifier, registry)
    if kind == "qkd":
        return "qkd"
    return spec.name if kind == "kem" else f"qkd_{spec.name}"


def create_method(identifier: str, role: Role, *, clock: VirtualClock,
                  rng: random.Random, adapter: Optional[EtsiAdapter] = None,
                  registry: Registry = REGISTRY) -> KeMethod:
    kind, spec = parse_method(identifier, registry)
    if kind == "kem":
        return KemMethod(spec, role, rng, clock, registry)
    if adapter is None:
        raise ValueError(f"method {identifier!r} needs a QKD adapter")
    if kind == "qkd":
        return QkdMethod(adapter, role, clock)
    return QkdKemMethod(spec, adapter, role, rng, clock, registry)


def payload_sizes(identifier: str, flow: Flow = Flow.CLIENT_INITIATED, include_index: bool = False,
                  registry: Registry = REGISTRY) -> Tuple[int, int]:
    """(request, response) KE payload lengths for a method, from sizes alone."""
    kind, spec = parse_method(identifier, registry)
    handle = 16 + (4 if include_index else 0)
    init_qkd, resp_qkd = (handle, 0) if Flow(flow) is Flow.CLIENT_INITIATED else (0, handle)
    if kind == "kem":
        return spec.public_key_len, spec.ciphertext_len
    if kind == "qkd":
        return init_qkd, resp_qkd
    return init_qkd + spec.public_key_len, resp_qkd + spec.ciphertext_len


def method_identifiers(registry: Registry = REGISTRY) -> List[str]:
    return ["qkd"] + [s.name for s in registry] + [f"qkd_{s.name}" for s in registry]
