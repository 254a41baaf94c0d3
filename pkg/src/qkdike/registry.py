"""Algorithm parameter sets and a deterministic, size-faithful mock KEM.

The registry holds the public-key/ciphertext byte lengths of every
classical and post-quantum algorithm measured in the IKE_SA_INIT
fragmentation study. The mock engine produces byte strings of exactly
those lengths so that every downstream byte and fragment count is real,
while the "cryptography" is plain SHA-256.

A genuine KEM can replace the mock by registering any object that
implements :class:`KemEngine` under the algorithm name.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, Optional, Protocol, Tuple

from .errors import LengthMismatch, UnknownAlgorithm

SHARED_SECRET_LEN = 32
SEED_LEN = 32


class Family(str, enum.Enum):
    CLASSICAL = "classical"
    LATTICE = "lattice"
    CODE_BASED = "code-based"
    OTHER = "isogeny-free-other"


@dataclass(frozen=True)
class KemAlgorithmSpec:
    name: str
    public_key_len: int
    ciphertext_len: int
    family: Family
    shared_secret_len: int = SHARED_SECRET_LEN

    def __post_init__(self):
        for field in ("public_key_len", "ciphertext_len", "shared_secret_len"):
            if getattr(self, field) <= 0:
                raise ValueError(f"{self.name}: {field} must be positive")

    def to_dict(self) -> dict:
        return {
            "public_key_len": self.public_key_len,
            "ciphertext_len": self.ciphertext_len,
            "shared_secret_len": self.shared_secret_len,
            "family": self.family.value,
        }


@dataclass(frozen=True)
class KemKeyPair:
    spec: KemAlgorithmSpec
    public_key: bytes
    secret_seed: bytes


# name -> (PK bytes, CT bytes, family); sizes as captured on the wire
_TABLE: Tuple[Tuple[str, int, int, Family], ...] = (
    ("x25519", 32, 32, Family.CLASSICAL),
    ("ecp256", 64, 64, Family.CLASSICAL),
    ("bike1", 1541, 1573, Family.CODE_BASED),
    ("bike3", 3083, 3115, Family.CODE_BASED),
    ("frodoa1", 9616, 9720, Family.LATTICE),
    ("frodoa3", 15632, 15744, Family.LATTICE),
    ("frodoa5", 21520, 21632, Family.LATTICE),
    ("frodos1", 9616, 9720, Family.LATTICE),
    ("frodos3", 15632, 15744, Family.LATTICE),
    ("frodos5", 21520, 21632, Family.LATTICE),
    ("hqc1", 2249, 4433, Family.CODE_BASED),
    ("hqc3", 4522, 8978, Family.CODE_BASED),
    ("hqc5", 7245, 14421, Family.CODE_BASED),
    ("kyber1", 800, 768, Family.LATTICE),
    ("kyber3", 1184, 1088, Family.LATTICE),
    ("kyber5", 1568, 1568, Family.LATTICE),
)

ALIASES: Dict[str, str] = {
    "ml-kem-512": "kyber1",
    "ml-kem-768": "kyber3",
    "ml-kem-1024": "kyber5",
    "mlkem512": "kyber1",
    "mlkem768": "kyber3",
    "mlkem1024": "kyber5",
}


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def expand(seed: bytes, length: int) -> bytes:
    """Counter-mode SHA-256 expansion: H(seed || ctr_be32) for ctr = 0, 1, ..."""
    out = bytearray()
    counter = 0
    while len(out) < length:
        out += sha256(seed + counter.to_bytes(4, "big"))
        counter += 1
    return bytes(out[:length])


class KemEngine(Protocol):
    spec: KemAlgorithmSpec

    def keygen(self, seed: bytes) -> KemKeyPair: ...

    def encaps(self, public_key: bytes, randomness: bytes) -> Tuple[bytes, bytes]: ...

    def decaps(self, keypair: KemKeyPair, ciphertext: bytes) -> bytes: ...


def mock_keygen(spec: KemAlgorithmSpec, seed: bytes) -> KemKeyPair:
    if len(seed) != SEED_LEN:
        raise LengthMismatch(f"seed must be {SEED_LEN} bytes, got {len(seed)}")
    public_key = expand(sha256(seed + b"pk"), spec.public_key_len)
    return KemKeyPair(spec, public_key, bytes(seed))


def mock_encaps(spec: KemAlgorithmSpec, public_key: bytes, randomness: bytes) -> Tuple[bytes, bytes]:
    if len(public_key) != spec.public_key_len:
        raise LengthMismatch(
            f"{spec.name}: public key is {len(public_key)} bytes, expected {spec.public_key_len}"
        )
    if len(randomness) != SEED_LEN:
        raise LengthMismatch(f"randomness must be {SEED_LEN} bytes")
    ciphertext = expand(sha256(randomness + b"ct"), spec.ciphertext_len)
    return ciphertext, sha256(public_key + ciphertext)


def mock_decaps(spec: KemAlgorithmSpec, keypair: KemKeyPair, ciphertext: bytes) -> bytes:
    if len(ciphertext) != spec.ciphertext_len:
        raise LengthMismatch(
            f"{spec.name}: ciphertext is {len(ciphertext)} bytes, expected {spec.ciphertext_len}"
        )
    public_key = expand(sha256(keypair.secret_seed + b"pk"), spec.public_key_len)
    return sha256(public_key + ciphertext)


class MockKem:
    """KemEngine backed by the SHA-256 mock functions above."""

    def __init__(self, spec: KemAlgorithmSpec):
        self.spec = spec

    def keygen(self, seed: bytes) -> KemKeyPair:
        return mock_keygen(self.spec, seed)

    def encaps(self, public_key: bytes, randomness: bytes) -> Tuple[bytes, bytes]:
        return mock_encaps(self.spec, public_key, randomness)

    def decaps(self, keypair: KemKeyPair, ciphertext: bytes) -> bytes:
        return mock_decaps(self.spec, keypair, ciphertext)


EngineFactory = Callable[[KemAlgorithmSpec], KemEngine]


class Registry:
    """Immutable name -> spec catalog plus a table of engine factories."""

    def __init__(self, specs: Iterable[KemAlgorithmSpec], aliases: Optional[Dict[str, str]] = None):
        self._specs: Dict[str, KemAlgorithmSpec] = {}
        for spec in specs:
            key = spec.name.lower()
            if key in self._specs:
                raise ValueError(f"duplicate algorithm name {spec.name!r}")
            self._specs[key] = spec
        self._aliases = {k.lower(): v.lower() for k, v in (aliases or {}).items()}
        self._engines: Dict[str, EngineFactory] = {}

    def __iter__(self) -> Iterator[KemAlgorithmSpec]:
        return iter(self._specs.values())

    def __len__(self) -> int:
        return len(self._specs)

    def __contains__(self, name: str) -> bool:
        try:
            self.lookup(name)
        except UnknownAlgorithm:
            return False
        return True

    def names(self) -> list:
        return [s.name for s in self]

    def lookup(self, name: str) -> KemAlgorithmSpec:
        key = name.lower()
        key = self._aliases.get(key, key)
        try:
            return self._specs[key]
        except KeyError:
            raise UnknownAlgorithm(f"unknown algorithm {name!r}") from None

    def register_engine(self, name: str, factory: EngineFactory) -> None:
        self._engines[self.lookup(name).name.lower()] = factory

    def engine(self, name: str) -> KemEngine:
        spec = self.lookup(name)
        factory = self._engines.get(spec.name.lower(), MockKem)
        return factory(spec)

    def with_spec(self, spec: KemAlgorithmSpec) -> "Registry":
        """Return a copy extended by ``spec`` (engines are carried over)."""
        new = Registry(list(self) + [spec], {**self._aliases})
        new._engines = dict(self._engines)
        return new

    def to_json(self) -> str:
        return json.dumps({s.name: s.to_dict() for s in self}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Registry":
        raw = json.loads(text)
        specs = [
            KemAlgorithmSpec(
                name=name,
                public_key_len=int(v["public_key_len"]),
                ciphertext_len=int(v["ciphertext_len"]),
                shared_secret_len=int(v.get("shared_secret_len", SHARED_SECRET_LEN)),
                family=Family(v.get("family", Family.OTHER.value)),
            )
            for name, v in raw.items()
        ]
        return cls(specs, ALIASES)


def default_registry() -> Registry:
    return Registry(
        [KemAlgorithmSpec(name, pk, ct, family) for name, pk, ct, family in _TABLE],
        ALIASES,
    )


REGISTRY = default_registry()


def lookup(name: str) -> KemAlgorithmSpec:
    return REGISTRY.lookup(name)
