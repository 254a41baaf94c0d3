"""Campaign orchestration, timing metrics and report writers.

Timing definitions (initiator's view, virtual ms):

* ``t_net``: first IKE_SA_INIT request sent -> last pre-AUTH response received.
* ``t_plugin``: earliest initiator method creation -> latest destruction.
* ``delta_overhead = t_plugin - t_net``; its sigma is propagated as if the
  two measurements were independent.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import ConfigError, HandshakeFailure, InsufficientSamples, MalformedTranscript
from .etsi import EtsiApi, Flow, QkdBackendConfig
from .ike import (
    Direction,
    EngineConfig,
    ExchangeType,
    FragmentationModel,
    HandshakeTranscript,
    parse_proposal,
    plan_fragments,
    run_handshake,
)
from .kme import KmePair, KmePairConfig
from .methods import payload_sizes
from .netsim import NetworkProfile
from .registry import REGISTRY, Registry

CSV_COLUMNS = (
    "proposal", "profile", "iteration", "t_net_ms", "t_plugin_ms", "delta_overhead_ms",
    "total_bytes", "sa_init_bytes", "intermediate_bytes", "auth_bytes", "fragments_total", "failed",
)


# -- timing ------------------------------------------------------------

@dataclass(frozen=True)
class TimingSample:
    t_net: float
    t_plugin: float

    @property
    def delta_overhead(self) -> float:
        return self.t_plugin - self.t_net


def measure_t_net(transcript: HandshakeTranscript) -> float:
    if not transcript.success:
        raise MalformedTranscript("t_net needs a successful transcript")
    sa_init = ExchangeType.IKE_SA_INIT
    sends = [m.t_send for m in transcript.messages
             if m.exchange_type == sa_init and m.direction == Direction.REQUEST.value]
    pre_auth = [m for m in transcript.messages
                if m.exchange_type != ExchangeType.IKE_AUTH
                and m.direction == Direction.RESPONSE.value and m.t_recv is not None]
    if not sends or not pre_auth:
        raise MalformedTranscript("transcript lacks an IKE_SA_INIT request/response pair")
    last_id = max(m.message_id for m in pre_auth)
    received = min(m.t_recv for m in pre_auth if m.message_id == last_id)
    return received - min(sends)


def measure_t_plugin(transcript: HandshakeTranscript) -> float:
    spans = [lc for lc in transcript.lifecycles if lc.role == "initiator"]
    if not spans or any(lc.t_destroy is None for lc in spans):
        raise MalformedTranscript("transcript lacks complete initiator method lifecycles")
    return max(lc.t_destroy for lc in spans) - min(lc.t_create for lc in spans)


def measure(transcript: HandshakeTranscript) -> TimingSample:
    return TimingSample(measure_t_net(transcript), measure_t_plugin(transcript))


@dataclass(frozen=True)
class StatSummary:
    n: int
    mean_net: float
    sigma_net: float
    mean_plugin: float
    sigma_plugin: float
    mean_overhead: float
    sigma_overhead: float

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(samples: Sequence[TimingSample]) -> StatSummary:
    if len(samples) < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {len(samples)}")
    net = [s.t_net for s in samples]
    plugin = [s.t_plugin for s in samples]
    overhead = [s.delta_overhead for s in samples]
    sigma_net = statistics.stdev(net)
    sigma_plugin = statistics.stdev(plugin)
    return StatSummary(
        n=len(samples),
        mean_net=statistics.fmean(net),
        sigma_net=sigma_net,
        mean_plugin=statistics.fmean(plugin),
        sigma_plugin=sigma_plugin,
        mean_overhead=statistics.fmean(overhead),
        sigma_overhead=math.hypot(sigma_plugin, sigma_net),
    )


# -- bytes -------------------------------------------------------------

@dataclass
class ByteReport:
    per_exchange: Dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.per_exchange.values())

    def add(self, transcript: HandshakeTranscript) -> "ByteReport":
        for m in transcript.messages:
            name = ExchangeType(m.exchange_type).name
            self.per_exchange[name] = self.per_exchange.get(name, 0) + m.total_bytes
        return self

    def to_dict(self) -> dict:
        return {"per_exchange": dict(sorted(self.per_exchange.items())), "total": self.total}


def byte_report(transcripts: Iterable[HandshakeTranscript]) -> ByteReport:
    report = ByteReport()
    for t in transcripts:
        report.add(t)
    return report


def pre_auth_bytes(transcript: HandshakeTranscript) -> int:
    return sum(m.total_bytes for m in transcript.messages if m.exchange_type != ExchangeType.IKE_AUTH)


# -- fragmentation table -----------------------------------------------

@dataclass(frozen=True)
class FragRow:
    algorithm: str
    init_frags: int
    init_last: int
    init_avail: int
    resp_frags: int
    resp_last: int
    resp_avail: int
    pk: int
    ct: int
    init_total: int
    resp_total: int
    init_overhead: int
    resp_overhead: int

    def values(self) -> tuple:
        return tuple(asdict(self).values())[1:]


def _frag_row(name: str, pk: int, ct: int, model: FragmentationModel) -> FragRow:
    i = plan_fragments(model, pk, Direction.REQUEST)
    r = plan_fragments(model, ct, Direction.RESPONSE)
    return FragRow(name, i.fragment_count, i.last, int(i.avail), r.fragment_count, r.last, int(r.avail),
                   pk, ct, i.total_bytes, r.total_bytes, i.overhead, r.overhead)


def fragmentation_report(registry: Registry = REGISTRY, model: Optional[FragmentationModel] = None,
                         flow: Flow = Flow.SERVER_INITIATED, include_index: bool = False,
                         hybrids: Sequence[str] = ()) -> List[FragRow]:
    """One row per algorithm plus ``qkd`` (and any requested ``qkd_<kem>`` hybrids)."""
    model = model or FragmentationModel()
    rows = [_frag_row(s.name, s.public_key_len, s.ciphertext_len, model) for s in registry]
    for ident in ("qkd", *hybrids):
        pk, ct = payload_sizes(ident, flow, include_index, registry)
        rows.append(_frag_row(ident, pk, ct, model))
    return rows


def format_fragtable(rows: Sequence[FragRow], fmt: str = "text") -> str:
    header = [f for f in FragRow.__dataclass_fields__]
    if fmt == "json":
        return json.dumps([asdict(r) for r in rows], indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(asdict(r).values())
        return buf.getvalue()
    widths = [max(len(h), *(len(str(getattr(r, h))) for r in rows)) for h in header]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    for r in rows:
        lines.append("  ".join(str(getattr(r, h)).rjust(w) for h, w in zip(header, widths)))
    return "\n".join(lines) + "\n"


# -- campaign ----------------------------------------------------------

@dataclass(frozen=True)
class ProfileSpec:
    label: str
    delay_ms: float = 0.0
    jitter_ms: float = 0.0
    loss: float = 0.0

    def network(self, seed: int) -> NetworkProfile:
        return NetworkProfile(self.delay_ms, self.jitter_ms, self.loss, seed, self.label)


@dataclass(frozen=True)
class CampaignConfig:
    proposals: tuple
    profiles: tuple
    iterations: int
    seed: int = 0
    api: EtsiApi = EtsiApi.ETSI_014
    flow: Flow = Flow.CLIENT_INITIATED
    include_index: bool = False
    kme_latency_ms: float = 0.0
    pool: int = 1000
    key_size: int = 32
    qos_ttl_s: Optional[float] = None
    fragment_cap: float = 1514
    retransmit_timeout_ms: float = 3000.0
    retransmit_tries: int = 3

    @classmethod
    def from_dict(cls, raw: dict, registry: Registry = REGISTRY) -> "CampaignConfig":
        try:
            proposals = tuple(parse_proposal(p, registry).label for p in raw["proposals"])
            profiles = tuple(
                ProfileSpec(str(p.get("label", f"profile{i}")), float(p.get("delay_ms", 0)),
                            float(p.get("jitter_ms", 0)), float(p.get("loss", 0)))
                for i, p in enumerate(raw.get("profiles") or [{"label": "baseline"}])
            )
            iterations = int(raw["iterations"])
            qkd = raw.get("qkd", {}) or {}
            cfg = cls(
                proposals=proposals,
                profiles=profiles,
                iterations=iterations,
                seed=int(raw.get("seed", 0)),
                api=EtsiApi(str(qkd.get("api", "014"))),
                flow=Flow(str(qkd.get("flow", "client"))),
                include_index=bool(qkd.get("include_index", False)),
                kme_latency_ms=float(qkd.get("kme_latency_ms", 0.0)),
                pool=int(qkd.get("pool", 1000)),
                key_size=int(qkd.get("key_size", 32)),
                qos_ttl_s=qkd.get("qos_ttl_s"),
                fragment_cap=float(raw.get("fragment_cap", 1514)),
                retransmit_timeout_ms=float(raw.get("retransmit_timeout_ms", 3000.0)),
                retransmit_tries=int(raw.get("retransmit_tries", 3)),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid campaign config: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.proposals:
            raise ConfigError("no proposals given")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        labels = [p.label for p in self.profiles]
        if not labels or len(set(labels)) != len(labels):
            raise ConfigError("profile labels must be present and unique")
        for p in self.profiles:
            if p.delay_ms < 0 or p.jitter_ms < 0 or not 0 <= p.loss < 1:
                raise ConfigError(f"profile {p.label!r}: delay/jitter >= 0 and 0 <= loss < 1 required")
        if self.include_index and self.api is not EtsiApi.ETSI_004:
            raise ConfigError("include_index requires the 004 API")
        if self.kme_latency_ms < 0 or self.pool < 0 or self.key_size < 1:
            raise ConfigError("kme_latency_ms/pool must be >= 0 and key_size >= 1")

    def to_dict(self) -> dict:
        return {
            "proposals": list(self.proposals),
            "profiles": [asdict(p) for p in self.profiles],
            "iterations": self.iterations,
            "seed": self.seed,
            "qkd": {
                "api": self.api.value,
                "flow": self.flow.value,
                "include_index": self.include_index,
                "kme_latency_ms": self.kme_latency_ms,
                "pool": self.pool,
                "key_size": self.key_size,
                "qos_ttl_s": self.qos_ttl_s,
            },
            "fragment_cap": self.fragment_cap,
            "retransmit_timeout_ms": self.retransmit_timeout_ms,
            "retransmit_tries": self.retransmit_tries,
        }

    def engine_config(self, registry: Registry = REGISTRY) -> EngineConfig:
        return EngineConfig(
            model=FragmentationModel(frame_cap=self.fragment_cap),
            qkd=QkdBackendConfig(self.api, self.flow, self.include_index, qos_ttl=self.qos_ttl_s),
            retransmit_timeout=self.retransmit_timeout_ms,
            retransmit_tries=self.retransmit_tries,
            registry=registry,
        )

    def kme_config(self, seed: int) -> KmePairConfig:
        return KmePairConfig(key_size=self.key_size, pool_capacity=self.pool,
                             response_latency=self.kme_latency_ms, seed=seed)


def load_config(path, registry: Registry = REGISTRY) -> CampaignConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return CampaignConfig.from_dict(raw, registry)


@dataclass
class IterationResult:
    proposal: str
    profile: str
    iteration: int
    seed: int
    transcript: HandshakeTranscript
    sample: Optional[TimingSample]

    @property
    def failed(self) -> bool:
        return self.sample is None

    def csv_row(self) -> list:
        by_type: Dict[int, int] = {}
        for m in self.transcript.messages:
            by_type[m.exchange_type] = by_type.get(m.exchange_type, 0) + m.total_bytes
        s = self.sample
        return [
            self.proposal, self.profile, self.iteration,
            "" if s is None else repr(s.t_net),
            "" if s is None else repr(s.t_plugin),
            "" if s is None else repr(s.delta_overhead),
            sum(by_type.values()),
            by_type.get(ExchangeType.IKE_SA_INIT, 0),
            by_type.get(ExchangeType.IKE_INTERMEDIATE, 0),
            by_type.get(ExchangeType.IKE_AUTH, 0),
            sum(m.fragments for m in self.transcript.messages),
            str(self.failed).lower(),
        ]


@dataclass
class GroupReport:
    proposal: str
    profile: str
    iterations: int
    failures: int
    stats: Optional[StatSummary]
    bytes: ByteReport
    failure_reasons: Dict[str, int] = field(default_factory=dict)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.iterations

    def to_dict(self) -> dict:
        return {
            "proposal": self.proposal,
            "profile": self.profile,
            "iterations": self.iterations,
            "failures": self.failures,
            "failure_rate": self.failure_rate,
            "stats": self.stats.to_dict() if self.stats else None,
            "bytes": self.bytes.to_dict(),
            "failure_reasons": dict(sorted(self.failure_reasons.items())),
        }


@dataclass
class CampaignResult:
    config: CampaignConfig
    iterations: List[IterationResult]
    groups: List[GroupReport]

    def group(self, proposal: str, profile: Optional[str] = None) -> GroupReport:
        label = parse_proposal(proposal, REGISTRY).label
        for g in self.groups:
            if g.proposal == label and (profile is None or g.profile == profile):
                return g
        raise KeyError((proposal, profile))

    def samples(self, proposal: str, profile: Optional[str] = None) -> List[TimingSample]:
        g = self.group(proposal, profile)
        return [r.sample for r in self.iterations
                if r.proposal == g.proposal and r.profile == g.profile and r.sample is not None]

    def summary_dict(self) -> dict:
        return {"config": self.config.to_dict(), "results": [g.to_dict() for g in self.groups]}


def iteration_seed(seed: int, iteration: int) -> int:
    return seed ^ iteration


def run_iteration(cfg: CampaignConfig, proposal: str, profile: ProfileSpec, iteration: int,
                  engine: Optional[EngineConfig] = None) -> IterationResult:
    seed = iteration_seed(cfg.seed, iteration)
    engine = engine or cfg.engine_config()
    kme = KmePair(cfg.kme_config(seed))
    try:
        transcript = run_handshake(proposal, profile.network(seed), kme, engine, seed)
        sample = measure(transcript)
    except HandshakeFailure as exc:
        transcript, sample = exc.transcript, None
    return IterationResult(proposal, profile.label, iteration, seed, transcript, sample)


def run_campaign(config, out_dir=None, registry: Registry = REGISTRY) -> CampaignResult:
    """Run every proposal x profile for ``iterations`` seeded handshakes.

    ``config`` may be a :class:`CampaignConfig`, a dict, or a path to a JSON
    file. When ``out_dir`` is given the reports are written there.
    """
    if isinstance(config, CampaignConfig):
        cfg = config
        cfg.validate()
    elif isinstance(config, dict):
        cfg = CampaignConfig.from_dict(config, registry)
    else:
        cfg = load_config(config, registry)
    engine = cfg.engine_config(registry)
    results: List[IterationResult] = []
    groups: List[GroupReport] = []
    for proposal in cfg.proposals:
        for profile in cfg.profiles:
            batch = [run_iteration(cfg, proposal, profile, i, engine) for i in range(cfg.iterations)]
            results.extend(batch)
            ok = [r.sample for r in batch if r.sample is not None]
            reasons: Dict[str, int] = {}
            for r in batch:
                if r.failed:
                    key = (r.transcript.failure or "unknown").split(":")[0]
                    reasons[key] = reasons.get(key, 0) + 1
            groups.append(GroupReport(
                proposal, profile.label, len(batch), len(batch) - len(ok),
                summarize(ok) if len(ok) >= 2 else None,
                byte_report(r.transcript for r in batch),
                reasons,
            ))
    result = CampaignResult(cfg, results, groups)
    if out_dir is not None:
        write_reports(result, out_dir, registry)
    return result


def write_reports(result: CampaignResult, out_dir, registry: Registry = REGISTRY) -> Dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "samples": out / "samples.csv",
        "summary": out / "summary.json",
        "bytes": out / "bytes.csv",
        "fragtable": out / "fragtable.csv",
    }
    with paths["samples"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in result.iterations:
            w.writerow(r.csv_row())
    paths["summary"].write_text(json.dumps(result.summary_dict(), indent=2) + "\n")
    with paths["bytes"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["proposal", "profile", "exchange_type", "bytes"])
        for g in result.groups:
            for name, n in sorted(g.bytes.per_exchange.items()):
                w.writerow([g.proposal, g.profile, name, n])
    cfg = result.config
    rows = fragmentation_report(registry, FragmentationModel(frame_cap=cfg.fragment_cap), cfg.flow,
                                cfg.include_index)
    paths["fragtable"].write_text(format_fragtable(rows, "csv"))
    return paths
