import pytest

from qkdike.errors import EmptyQueue
from qkdike.netsim import Channel, EventQueue, NetworkProfile, VirtualClock


def test_clock_moves_forward_only():
    c = VirtualClock(5)
    assert c.advance(2.5) == 7.5
    assert c.sync(3) == 7.5
    assert c.sync(10) == 10
    with pytest.raises(ValueError):
        c.advance(-1)


def test_fixed_delay_is_exact():
    q = EventQueue()
    ch = Channel(NetworkProfile(100.0), q)
    got = []
    ch.send("frag", 42.0, got.append)
    ev = q.advance()
    assert ev.time == 142.0
    ev.action()
    assert got == ["frag"]


def test_loss_rate_converges():
    q = EventQueue()
    ch = Channel(NetworkProfile(1.0, loss_probability=0.5, seed=11), q)
    n = 10_000
    for _ in range(n):
        ch.send(None, 0.0)
    assert abs(ch.dropped / n - 0.5) <= 0.02
    assert len(q) == n - ch.dropped


def test_jitter_stays_in_band_and_never_goes_negative():
    ch = Channel(NetworkProfile(5.0, jitter=10.0, seed=3), EventQueue())
    times = [ch.delivery_time(100.0) for _ in range(2000)]
    assert all(100.0 <= t <= 115.0 for t in times)
    assert min(times) == 100.0  # clipped at zero delay
    assert len(set(times)) > 100


def test_same_seed_same_schedule():
    prof = NetworkProfile(20, jitter=5, loss_probability=0.2, seed=99)
    c1, c2 = Channel(prof, EventQueue()), Channel(prof, EventQueue())
    s1 = [c1.delivery_time(i) for i in range(500)]
    s2 = [c2.delivery_time(i) for i in range(500)]
    assert s1 == s2
    c3 = Channel(prof.with_seed(100), EventQueue())
    assert [c3.delivery_time(i) for i in range(500)] != s1


def test_ties_break_by_insertion_order():
    q = EventQueue()
    order = []
    for name in "abc":
        q.schedule(10.0, lambda n=name: order.append(n))
    q.schedule(5.0, lambda: order.append("first"))
    q.run()
    assert order == ["first", "a", "b", "c"]
    assert q.now == 10.0


def test_cancelled_events_are_skipped():
    q = EventQueue()
    hit = []
    ev = q.schedule(1.0, lambda: hit.append(1))
    ev.cancel()
    q.run()
    assert hit == []


def test_run_until_stops_early():
    q = EventQueue()
    hit = []
    for t in range(5):
        q.schedule(t, lambda t=t: hit.append(t))
    q.run(until=lambda: len(hit) == 2)
    assert hit == [0, 1] and len(q) == 3


def test_empty_queue_and_past_scheduling():
    q = EventQueue()
    with pytest.raises(EmptyQueue):
        q.advance()
    q.schedule(10)
    q.advance()
    with pytest.raises(ValueError):
        q.schedule(9.0)


@pytest.mark.parametrize("kw", [{"one_way_delay": -1}, {"jitter": -0.1},
                                {"loss_probability": 1.0}, {"loss_probability": -0.1}])
def test_profile_validation(kw):
    with pytest.raises(ValueError):
        NetworkProfile(**kw)
