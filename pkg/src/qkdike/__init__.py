"""Simulator for QKD and hybrid QKD-KEM key establishment in IKEv2.

Sub-modules map one-to-one onto the moving parts:

``registry``  algorithm sizes and the mock KEM engine
``kme``       paired Key Management Entities (ETSI 004 and 014 semantics)
``etsi``      unified client adapter over both ETSI APIs
``methods``   key-exchange methods: KEM, pure QKD, parallel QKD-KEM hybrid
``ike``       handshake engine, fragmentation arithmetic, transcripts
``netsim``    virtual clock, event queue and lossy channel
``bench``     timing metrics, statistics, campaigns and reports
"""

from .bench import fragmentation_report, measure_t_net, measure_t_plugin, run_campaign, summarize
from .ike import EngineConfig, FragmentationModel, parse_proposal, plan_fragments, run_handshake
from .kme import KmePair, KmePairConfig
from .netsim import NetworkProfile
from .registry import REGISTRY, lookup

__version__ = "0.1.0"

__all__ = [
    "EngineConfig",
    "FragmentationModel",
    "KmePair",
    "KmePairConfig",
    "NetworkProfile",
    "REGISTRY",
    "fragmentation_report",
    "lookup",
    "measure_t_net",
    "measure_t_plugin",
    "parse_proposal",
    "plan_fragments",
    "run_campaign",
    "run_handshake",
    "summarize",
]
