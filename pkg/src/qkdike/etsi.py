"""One client interface over both ETSI QKD APIs.

Key-exchange methods talk only to :class:`EtsiAdapter`; the adapter decides
which KME calls fire and when, depending on the API (004 or 014) and on the
flow (whether the IKE initiator or the responder picks the key).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from .errors import BackendUnreachable, BadLength, InvalidState
from .kme import ID_LEN, MAX_INDEX, KmePair, Side
from .netsim import VirtualClock

INDEX_LEN = 4


class EtsiApi(str, enum.Enum):
    ETSI_004 = "004"
    ETSI_014 = "014"


class Flow(str, enum.Enum):
    CLIENT_INITIATED = "client"
    SERVER_INITIATED = "server"


@dataclass(frozen=True)
class QkdBackendConfig:
    api: EtsiApi = EtsiApi.ETSI_014
    flow: Flow = Flow.CLIENT_INITIATED
    include_index: bool = False
    kme_side: Side = Side.A
    key_size: Optional[int] = None
    qos_ttl: Optional[float] = None  # virtual seconds, 004 only

    def __post_init__(self):
        object.__setattr__(self, "api", EtsiApi(self.api))
        object.__setattr__(self, "flow", Flow(self.flow))
        object.__setattr__(self, "kme_side", Side(self.kme_side))
        if self.include_index and self.api is not EtsiApi.ETSI_004:
            raise ValueError("include_index is only meaningful for ETSI 004")

    @property
    def handle_len(self) -> int:
        return ID_LEN + (INDEX_LEN if self.include_index else 0)

    def for_side(self, side: Side) -> "QkdBackendConfig":
        return replace(self, kme_side=side)


@dataclass
class QkdKeyHandle:
    key_id: bytes
    index: Optional[int] = None
    material: Optional[bytes] = None  # None while PENDING

    @property
    def pending(self) -> bool:
        return self.material is None

    def fill(self, material: bytes) -> None:
        if self.material is not None:
            raise InvalidState("handle already carries key material")
        self.material = material


def encode_handle(handle: QkdKeyHandle) -> bytes:
    if len(handle.key_id) != ID_LEN:
        raise BadLength(f"key id must be {ID_LEN} bytes")
    if handle.index is None:
        return bytes(handle.key_id)
    if not 0 <= handle.index <= MAX_INDEX:
        raise ValueError("index must be a 32-bit unsigned integer")
    return bytes(handle.key_id) + handle.index.to_bytes(INDEX_LEN, "big")


def decode_handle(config: QkdBackendConfig, data: bytes) -> QkdKeyHandle:
    if len(data) != config.handle_len:
        raise BadLength(f"expected a {config.handle_len}-byte key handle, got {len(data)}")
    index = int.from_bytes(data[ID_LEN:], "big") if config.include_index else None
    return QkdKeyHandle(bytes(data[:ID_LEN]), index)


class EtsiAdapter:
    """Per-endpoint QKD client. ``clock`` is the endpoint's local clock."""

    def __init__(self, kme: Optional[KmePair], config: QkdBackendConfig,
                 clock: Optional[VirtualClock] = None):
        self.kme = kme
        self.config = config
        self.clock = clock
        self._open: set = set()

    @property
    def _kme(self) -> KmePair:
        if self.kme is None:
            raise BackendUnreachable("no KME configured for this endpoint")
        return self.kme

    @property
    def side(self) -> Side:
        return self.config.kme_side

    @property
    def key_size(self) -> int:
        return self.config.key_size or self._kme.config.key_size

    def encode_handle(self, handle: QkdKeyHandle) -> bytes:
        return encode_handle(handle)

    def decode_handle(self, data: bytes) -> QkdKeyHandle:
        return decode_handle(self.config, data)

    def acquire_new(self) -> QkdKeyHandle:
        kme = self._kme
        if self.config.api is EtsiApi.ETSI_014:
            ((key_id, material),) = kme.get_key_014(self.side, 1, self.key_size, clock=self.clock)
            return QkdKeyHandle(key_id, None, material)
        ksid = kme.open_connect(self.side, None, self.config.qos_ttl, clock=self.clock)
        self._open.add(ksid)
        # always the first index of a fresh stream
        handle = QkdKeyHandle(ksid, 0 if self.config.include_index else None)
        if self.config.flow is Flow.SERVER_INITIATED:
            material, _ = kme.get_key_004(self.side, ksid, handle.index, clock=self.clock)
            handle.fill(material)
        return handle

    def retrieve_by_id(self, key_id: bytes, index: Optional[int] = None) -> QkdKeyHandle:
        kme = self._kme
        if self.config.api is EtsiApi.ETSI_014:
            ((kid, material),) = kme.get_key_with_ids_014(self.side, [key_id], clock=self.clock)
            return QkdKeyHandle(kid, None, material)
        ksid = kme.open_connect(self.side, key_id, clock=self.clock)
        self._open.add(ksid)
        material, _ = kme.get_key_004(self.side, ksid, index, clock=self.clock)
        return QkdKeyHandle(ksid, index, material)

    def complete_pending(self, handle: QkdKeyHandle) -> QkdKeyHandle:
        if not handle.pending or self.config.api is EtsiApi.ETSI_014:
            raise InvalidState("handle is not pending")
        material, _ = self._kme.get_key_004(self.side, handle.key_id, handle.index, clock=self.clock)
        handle.fill(material)
        return handle

    def release(self, handle: Optional[QkdKeyHandle] = None) -> None:
        """CLOSE the stream behind ``handle``, or every stream still open."""
        targets = [handle.key_id] if handle is not None else sorted(self._open)
        for ksid in targets:
            if ksid in self._open:
                self._open.discard(ksid)
                self._kme.close(self.side, ksid, clock=self.clock)
