import os

import pytest

from stencilbench.errors import PinningError, PlacementError
from stencilbench.sweeps import WavefrontConfig
from stencilbench.topo import (
    SOURCE_FALLBACK,
    SOURCE_MANUAL,
    CacheGroup,
    Topology,
    current_affinity,
    detect_topology,
    parse_manual_topology,
    pin_current_thread,
    plan_placement,
)

WESTMERE = """\
# Westmere EP socket: 6 cores, 2 SMT threads each, one shared 12 MB L3
# hw_id core_id group_id cache_bytes cache_level
0   0  0  12582912  3
1   1  0  12582912  3
2   2  0  12582912  3
3   3  0  12582912  3
4   4  0  12582912  3
5   5  0  12582912  3
6   0  0  12582912  3
7   1  0  12582912  3
8   2  0  12582912  3
9   3  0  12582912  3
10  4  0  12582912  3
11  5  0  12582912  3
"""


def test_detect_topology_host_invariants():
    topo = detect_topology()
    ids = topo.hw_threads
    assert len(ids) >= 1
    # every hardware thread appears in exactly one outermost group
    count = {}
    for g in topo.groups:
        for hw in g.hw_threads:
            count[hw] = count.get(hw, 0) + 1
    assert all(v == 1 for v in count.values())
    assert set(count) == set(ids)
    # sibling sets partition the same ids
    sib_ids = [hw for s in topo.smt_siblings for hw in s]
    assert sorted(sib_ids) == list(ids)
    assert topo.physical_cores >= 1
    for g in topo.groups:
        assert g.size_bytes is None or g.size_bytes > 0


def test_manual_westmere_file(tmp_path):
    path = tmp_path / "westmere.topo"
    path.write_text(WESTMERE)
    topo = parse_manual_topology(path)
    assert topo.source == SOURCE_MANUAL
    assert len(topo.groups) == 1
    g = topo.groups[0]
    assert g.level == 3
    assert g.size_bytes == 12 * 1024 * 1024
    assert g.hw_threads == tuple(range(12))
    assert topo.physical_cores == 6
    assert sorted(topo.smt_siblings) == [(i, i + 6) for i in range(6)]


def test_manual_file_via_env(tmp_path, monkeypatch):
    path = tmp_path / "t.topo"
    path.write_text("0 0 0 1048576\n1 0 0 1048576\n")
    monkeypatch.setenv("STENCILBENCH_TOPOLOGY", str(path))
    topo = detect_topology()
    assert topo.source == SOURCE_MANUAL
    assert topo.smt_siblings == [(0, 1)]


def test_manual_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.topo"
    path.write_text("0 0 0\n")
    with pytest.raises(ValueError):
        parse_manual_topology(path)


def test_fallback_when_no_sources(monkeypatch):
    monkeypatch.setattr("stencilbench.topo._SYSFS_CPU", "/nonexistent/cpu")
    monkeypatch.delenv("STENCILBENCH_TOPOLOGY", raising=False)
    topo = detect_topology()
    assert topo.source == SOURCE_FALLBACK
    assert topo.degraded
    assert len(topo.groups) == 1
    assert topo.groups[0].size_bytes is None


def test_topology_json_roundtrippable():
    import json

    d = json.loads(detect_topology().to_json())
    assert {"source", "groups", "smt_siblings", "physical_cores"} <= set(d)


def test_pin_current_thread_and_restore():
    before = current_affinity()
    if not before:
        pytest.skip("affinity introspection unavailable")
    target = sorted(before)[0]
    try:
        pin_current_thread(target)
        assert current_affinity() == {target}
    finally:
        os.sched_setaffinity(0, before)


def test_pin_nonexistent_id_errors():
    before = current_affinity()
    with pytest.raises(PinningError):
        pin_current_thread(10 ** 6)
    if before:
        assert current_affinity() == before


def _topo_4core():
    return Topology(
        groups=[CacheGroup(3, 8 << 20, (0, 1, 2, 3))],
        smt_siblings=[(0,), (1,), (2,), (3,)],
    )


def _topo_4core_2smt():
    return Topology(
        groups=[CacheGroup(3, 8 << 20, (0, 1, 2, 3, 4, 5, 6, 7))],
        smt_siblings=[(0, 4), (1, 5), (2, 6), (3, 7)],
    )


def _topo_6core():
    return Topology(
        groups=[CacheGroup(3, 12 << 20, (0, 1, 2, 3, 4, 5))],
        smt_siblings=[(i,) for i in range(6)],
    )


def test_placement_compact_four_cores():
    cfg = WavefrontConfig(num_groups=1, threads_per_group=4)
    assert plan_placement(_topo_4core(), cfg, "off") == [0, 1, 2, 3]


def test_placement_smt_sibling_pairs():
    cfg = WavefrontConfig(num_groups=1, threads_per_group=8)
    got = plan_placement(_topo_4core_2smt(), cfg, "on")
    assert got == [0, 4, 1, 5, 2, 6, 3, 7]  # consecutive ranks on siblings
    assert sorted(got) == list(range(8))


def test_placement_two_groups_same_l3():
    topo = _topo_6core()
    cfg = WavefrontConfig(num_groups=2, threads_per_group=3, blocks=2)
    got = plan_placement(topo, cfg, "off")
    assert len(got) == 6 and len(set(got)) == 6
    members = set(topo.groups[0].hw_threads)
    assert set(got) <= members


def test_placement_oversubscription_rejected():
    cfg = WavefrontConfig(num_groups=1, threads_per_group=5)
    with pytest.raises(PlacementError):
        plan_placement(_topo_4core(), cfg, "off")
    cfg9 = WavefrontConfig(num_groups=1, threads_per_group=9)
    with pytest.raises(PlacementError):
        plan_placement(_topo_4core_2smt(), cfg9, "on")


def test_placement_smt_off_uses_one_thread_per_core():
    cfg = WavefrontConfig(num_groups=1, threads_per_group=4)
    got = plan_placement(_topo_4core_2smt(), cfg, "off")
    assert got == [0, 1, 2, 3]


def test_placement_deterministic():
    topo = _topo_4core_2smt()
    cfg = WavefrontConfig(num_groups=2, threads_per_group=2, blocks=2)
    a = plan_placement(topo, cfg, "on")
    b = plan_placement(topo, cfg, "on")
    assert a == b
