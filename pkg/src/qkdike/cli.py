"""Command-line entry point: ``qkdike run | fragtable | handshake | serve | kme``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import CampaignConfig, format_fragtable, fragmentation_report, load_config, run_campaign
from .errors import ConfigError, HandshakeFailure, QkdIkeError
from .etsi import Flow
from .ike import FragmentationModel, run_handshake
from .registry import REGISTRY, Registry

DEFAULT_PROPOSALS = (
    "qkd", "qkd_kyber1", "qkd_kyber5", "qkd-ke1_kyber1", "kyber1-ke1_qkd",
    "qkd-ke1_kyber5", "kyber5-ke1_qkd", "kyber1", "kyber5", "ecp256", "x25519", "x25519-ke1_kyber1",
)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--proposals", help="comma-separated proposal labels")
    p.add_argument("--iterations", type=int)
    p.add_argument("--delay-ms", type=float)
    p.add_argument("--jitter-ms", type=float)
    p.add_argument("--loss", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--etsi-api", choices=["004", "014"])
    p.add_argument("--qkd-flow", choices=["client", "server"])
    p.add_argument("--kme-latency-ms", type=float)
    p.add_argument("--include-index", action="store_true", default=None)


def _campaign_dict(args) -> dict:
    if args.config:
        raw = json.loads(Path(args.config).read_text())
    else:
        raw = {"proposals": list(DEFAULT_PROPOSALS), "iterations": 10, "seed": 0,
               "profiles": [{"label": "cli"}]}
    if args.proposals:
        raw["proposals"] = [p for p in args.proposals.split(",") if p]
    if args.iterations is not None:
        raw["iterations"] = args.iterations
    if args.seed is not None:
        raw["seed"] = args.seed
    net = {"delay_ms": args.delay_ms, "jitter_ms": args.jitter_ms, "loss": args.loss}
    if any(v is not None for v in net.values()):
        net = {k: v for k, v in net.items() if v is not None}
        raw["profiles"] = [{**p, **net} for p in (raw.get("profiles") or [{"label": "cli"}])]
    qkd = dict(raw.get("qkd") or {})
    for key, val in (("api", args.etsi_api), ("flow", args.qkd_flow),
                     ("kme_latency_ms", args.kme_latency_ms), ("include_index", args.include_index)):
        if val is not None:
            qkd[key] = val
    raw["qkd"] = qkd
    return raw


def cmd_run(args) -> int:
    try:
        if args.config and not any(getattr(args, k) is not None for k in (
                "proposals", "iterations", "delay_ms", "jitter_ms", "loss", "seed",
                "etsi_api", "qkd_flow", "kme_latency_ms", "include_index")):
            cfg = load_config(args.config)
        else:
            cfg = CampaignConfig.from_dict(_campaign_dict(args))
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    result = run_campaign(cfg, args.out)
    for g in result.groups:
        mean = f"{g.stats.mean_net:.1f}" if g.stats else "-"
        print(f"{g.proposal:24s} {g.profile:12s} t_net={mean:>9s} ms  failures={g.failures}/{g.iterations}")
    print(f"reports written to {args.out}")
    return 0


def cmd_fragtable(args) -> int:
    registry: Registry = REGISTRY
    if args.algorithms:
        registry = Registry.from_json(Path(args.algorithms).read_text())
    model = FragmentationModel(frame_cap=args.fragment_cap)
    hybrids = [h for h in (args.hybrids or "").split(",") if h]
    rows = fragmentation_report(registry, model, Flow(args.flow), args.include_index, hybrids)
    sys.stdout.write(format_fragtable(rows, args.format))
    return 0


def cmd_handshake(args) -> int:
    raw = _campaign_dict(args)
    raw["proposals"] = [args.proposal]
    raw["iterations"] = 1
    try:
        cfg = CampaignConfig.from_dict(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    from .kme import KmePair
    seed = cfg.seed
    try:
        transcript = run_handshake(cfg.proposals[0], cfg.profiles[0].network(seed),
                                   KmePair(cfg.kme_config(seed)), cfg.engine_config(), seed)
        code = 0
    except HandshakeFailure as exc:
        transcript, code = exc.transcript, 1
    print(json.dumps(transcript.to_dict(), indent=2))
    return code


def cmd_serve(args) -> int:
    import uvicorn

    from .kme import KmePair, KmePairConfig
    from .service.app import create_app

    kme = KmePair(KmePairConfig(key_size=args.key_size, pool_capacity=args.pool, seed=args.seed))
    app = create_app(kme, master_sae=args.master_sae, slave_sae=args.slave_sae)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_kme(args) -> int:
    from .service.client import Etsi014Client

    with Etsi014Client(args.url) as client:
        if args.kme_cmd == "status":
            out = client.status(args.sae)
        elif args.kme_cmd == "enc":
            out = client.enc_keys(args.sae, number=args.number, size=args.size)
        else:
            out = client.dec_keys(args.sae, args.key_ids)
    print(json.dumps(out, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdike", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a benchmark campaign and write reports")
    p.add_argument("--config", help="campaign JSON file")
    p.add_argument("--out", required=True, help="output directory")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fragtable", help="print the IKE_SA_INIT fragmentation table")
    p.add_argument("--fragment-cap", type=int, default=1514)
    p.add_argument("--flow", choices=["client", "server"], default="server")
    p.add_argument("--include-index", action="store_true")
    p.add_argument("--algorithms", help="JSON registry file (name -> lengths)")
    p.add_argument("--hybrids", help="comma-separated qkd_<kem> rows to append")
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p.set_defaults(func=cmd_fragtable)

    p = sub.add_parser("handshake", help="run one handshake and print its transcript")
    p.add_argument("proposal")
    p.add_argument("--config", help="campaign JSON file supplying defaults")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_handshake)

    p = sub.add_parser("serve", help="serve the ETSI 014 KME facade over HTTP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8014)
    p.add_argument("--pool", type=int, default=1000)
    p.add_argument("--key-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--master-sae", default="alice")
    p.add_argument("--slave-sae", default="bob")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("kme", help="talk to a running ETSI 014 facade")
    p.add_argument("--url", default="http://127.0.0.1:8014")
    ksub = p.add_subparsers(dest="kme_cmd", required=True)
    k = ksub.add_parser("status")
    k.add_argument("sae")
    k = ksub.add_parser("enc")
    k.add_argument("sae")
    k.add_argument("--number", type=int, default=1)
    k.add_argument("--size", type=int, default=256, help="key size in bits")
    k = ksub.add_parser("dec")
    k.add_argument("sae")
    k.add_argument("key_ids", nargs="+")
    p.set_defaults(func=cmd_kme)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QkdIkeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
