"""Linear memory manager contract, driven directly through ctypes."""

import random


def test_base_is_page_aligned(rtb):
    assert rtb.base() % 65536 == 0


def test_base_stable_across_calls(rtb):
    assert rtb.base() == rtb.base()


def test_base_stable_across_grow(rtb):
    before = rtb.base()
    assert rtb.lib.memory_grow(3) == 4
    assert rtb.base() == before


def test_grow_zero_reports_current(rt):
    rt.boot(initial_pages=2, max_pages=5)
    assert rt.lib.memory_grow(0) == 2


def test_grow_returns_previous_and_commits(rt):
    rt.boot(initial_pages=2, max_pages=5)
    assert rt.lib.memory_grow(3) == 2
    assert rt.lib.memory_grow(0) == 5
    assert rt.lib.rt_mem_committed_bytes() == 5 * 65536


def test_grow_failure_sentinel_and_state_unchanged(rt):
    rt.boot(initial_pages=5, max_pages=5)
    assert rt.lib.memory_grow(1) == 0xFFFFFFFF
    assert rt.lib.memory_grow(0) == 5


def test_new_pages_zero_filled(rt):
    rt.boot(initial_pages=1, max_pages=4)
    rt.write(0, b"\xff" * 64)
    assert rt.lib.memory_grow(2) == 1
    assert rt.read(65536, 4096) == b"\x00" * 4096
    assert rt.read(3 * 65536 - 64, 64) == b"\x00" * 64


def test_writes_visible_through_base(rt):
    rt.boot(initial_pages=1, max_pages=1)
    rt.write(100, b"abcdef")
    assert rt.read(100, 6) == b"abcdef"


def test_random_grow_sequences_property(rt):
    """Property over random grow sequences: stable base, correct previous-size
    returns, 0xFFFFFFFF at the cap, zero fill of every newly committed page."""
    rng = random.Random(0xC0FFEE)
    for trial in range(60):
        initial = rng.randint(0, 6)
        maximum = initial + rng.randint(0, 10)
        rt.boot(initial_pages=initial, max_pages=maximum)
        base = rt.base()
        committed = initial
        if committed:
            rt.write(0, b"\xaa" * 16)
        for _ in range(rng.randint(1, 12)):
            delta = rng.randint(0, 4)
            prev = rt.lib.memory_grow(delta)
            if committed + delta > maximum:
                assert prev == 0xFFFFFFFF
                assert rt.lib.memory_grow(0) == committed
            else:
                assert prev == committed
                if delta:
                    start = committed * 65536
                    assert rt.read(start, 256) == b"\x00" * 256
                    end = (committed + delta) * 65536
                    assert rt.read(end - 256, 256) == b"\x00" * 256
                committed += delta
            assert rt.base() == base
        assert rt.lib.rt_mem_committed_bytes() == committed * 65536
