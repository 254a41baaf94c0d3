import pytest

from qkdike.etsi import EtsiAdapter, QkdBackendConfig
from qkdike.kme import KmePair, KmePairConfig, Side
from qkdike.netsim import VirtualClock


@pytest.fixture
def kme():
    return KmePair(KmePairConfig(pool_capacity=100, seed=7))


@pytest.fixture
def adapters(kme):
    """Factory for an (initiator, responder) adapter pair on a shared KME."""

    def make(api="014", flow="client", include_index=False):
        cfg = QkdBackendConfig(api=api, flow=flow, include_index=include_index)
        a = EtsiAdapter(kme, cfg.for_side(Side.A), VirtualClock())
        b = EtsiAdapter(kme, cfg.for_side(Side.B), VirtualClock())
        return a, b

    return make


# -- acceptance reporting ------------------------------------------------

_CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome for the summary block."""
    marker = request.node.get_closest_marker("acceptance")
    number, title = marker.args
    yield
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed
    _CRITERIA[number] = (title, passed)
    print(f"\nCRITERION {number:>2}: {'PASS' if passed else 'FAIL'}  {title}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed = _CRITERIA[number]
        terminalreporter.write_line(f"CRITERION {number:>2}: {'PASS' if passed else 'FAIL'}  {title}")
