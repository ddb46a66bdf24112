"""Hardware-thread topology detection, thread pinning, and team placement.

Wavefront thread groups only pay off when every member shares the
outermost cache level, so the engines need to know which hardware
threads form a cache group and which are SMT siblings.  Detection reads
the Linux sysfs cpu/cache hierarchy; a manual description file covers
platforms without it, and a declared-unknown fallback keeps everything
running (flagged) when neither is available.

Manual file format (whitespace-delimited, '#' comments), one line per
hardware thread:

    hw_id  core_id  group_id  cache_bytes  [cache_level]

The environment variable STENCILBENCH_TOPOLOGY forces the file path.
"""

import glob
import json
import logging
import os
import re
from dataclasses import dataclass, field

from .errors import PinningError, PlacementError

log = logging.getLogger(__name__)

TOPOLOGY_ENV = "STENCILBENCH_TOPOLOGY"

SOURCE_OS = "os-introspection"
SOURCE_MANUAL = "manual-file"
SOURCE_FALLBACK = "fallback"

_SYSFS_CPU = "/sys/devices/system/cpu"


@dataclass(frozen=True)
class CacheGroup:
    level: int  # 0 means unknown level
    size_bytes: int | None  # None means unknown
    hw_threads: tuple


@dataclass
class Topology:
    groups: list  # outermost-level cache groups, disjoint, covering
    smt_siblings: list  # list of tuples of hw-thread ids sharing a core
    source: str = SOURCE_OS
    degraded: bool = False  # True when cache sizes could not be determined

    @property
    def hw_threads(self):
        ids = []
        for g in self.groups:
            ids.extend(g.hw_threads)
        return tuple(sorted(ids))

    @property
    def physical_cores(self):
        return len(self.smt_siblings)

    def group_of(self, hw_id):
        for g in self.groups:
            if hw_id in g.hw_threads:
                return g
        return None

    def to_json(self):
        return json.dumps(
            {
                "source": self.source,
                "degraded": self.degraded,
                "physical_cores": self.physical_cores,
                "hw_threads": list(self.hw_threads),
                "smt_siblings": [list(s) for s in self.smt_siblings],
                "groups": [
                    {
                        "level": g.level,
                        "size_bytes": g.size_bytes,
                        "hw_threads": list(g.hw_threads),
                    }
                    for g in self.groups
                ],
            },
            indent=2,
        )


# ---------------------------------------------------------------------------
# sysfs parsing

def _read(path):
    try:
        with open(path) as fh:
            return fh.read().strip()
    except OSError:
        return None


def _parse_mask(text):
    """Hex cpumask ('3' or 'ff,ffffffff') -> sorted tuple of set bits."""
    val = int(text.replace(",", ""), 16)
    out = []
    bit = 0
    while val:
        if val & 1:
            out.append(bit)
        val >>= 1
        bit += 1
    return tuple(out)


def _parse_cpu_list(text):
    """'0-3,8,10-11' -> sorted tuple of ids."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(sorted(out))


def _parse_size(text):
    m = re.fullmatch(r"(\d+)\s*([KMG]?)B?", text.strip(), re.IGNORECASE)
    if not m:
        return None
    mult = {"": 1, "K": 1024, "M": 1024 ** 2, "G": 1024 ** 3}[m.group(2).upper()]
    return int(m.group(1)) * mult


def _online_cpus():
    text = _read(f"{_SYSFS_CPU}/online")
    if text:
        return _parse_cpu_list(text)
    n = os.cpu_count() or 1
    return tuple(range(n))


def _cpu_set_from(cpu_dir, names_list, names_mask):
    for name in names_list:
        text = _read(f"{cpu_dir}/topology/{name}")
        if text:
            return _parse_cpu_list(text)
    for name in names_mask:
        text = _read(f"{cpu_dir}/topology/{name}")
        if text:
            return _parse_mask(text)
    return None


def _detect_sysfs():
    cpus = _online_cpus()
    if not cpus or _read(f"{_SYSFS_CPU}/cpu{cpus[0]}/topology/thread_siblings") is None and _read(
        f"{_SYSFS_CPU}/cpu{cpus[0]}/topology/core_cpus"
    ) is None:
        return None

    sibling_sets = {}
    package_sets = {}
    for c in cpus:
        cdir = f"{_SYSFS_CPU}/cpu{c}"
        sibs = _cpu_set_from(cdir, ("thread_siblings_list", "core_cpus_list"),
                             ("thread_siblings", "core_cpus"))
        if sibs is None:
            sibs = (c,)
        sibs = tuple(sorted(set(sibs) & set(cpus)))
        sibling_sets[sibs] = True
        pack = _cpu_set_from(cdir, ("core_siblings_list", "package_cpus_list"),
                             ("core_siblings", "package_cpus"))
        if pack is None:
            pack = cpus
        package_sets.setdefault(tuple(sorted(set(pack) & set(cpus))), True)

    # outermost cache groups: largest cache level with sharing info
    best = {}  # leader cpu of shared set -> (level, size, members)
    have_cache = False
    for c in cpus:
        for idx in sorted(glob.glob(f"{_SYSFS_CPU}/cpu{c}/cache/index*")):
            typ = _read(f"{idx}/type")
            if typ == "Instruction":
                continue
            level_text = _read(f"{idx}/level")
            if level_text is None:
                continue
            level = int(level_text)
            shared = _read(f"{idx}/shared_cpu_list")
            members = _parse_cpu_list(shared) if shared else None
            if members is None:
                shared = _read(f"{idx}/shared_cpu_map")
                members = _parse_mask(shared) if shared else (c,)
            members = tuple(sorted(set(members) & set(cpus)))
            size = _parse_size(_read(f"{idx}/size") or "")
            have_cache = True
            key = members[0]
            if key not in best or level > best[key][0]:
                best[key] = (level, size, members)

    if have_cache:
        seen = set()
        groups = []
        for key in sorted(best):
            level, size, members = best[key]
            members = tuple(m for m in members if m not in seen)
            if not members:
                continue
            seen.update(members)
            groups.append(CacheGroup(level, size, members))
        for c in cpus:  # cpus with no cache info at all
            if c not in seen:
                groups.append(CacheGroup(0, None, (c,)))
        degraded = any(g.size_bytes is None for g in groups)
    else:
        # shape known from packages, cache sizes unknown
        groups = [CacheGroup(0, None, members) for members in sorted(package_sets)]
        degraded = True

    topo = Topology(groups=groups, smt_siblings=sorted(sibling_sets), degraded=degraded)
    if degraded:
        log.warning("topology: cache sizes unavailable; cache-fit checks degraded")
    return topo


# ---------------------------------------------------------------------------
# manual file

def parse_manual_topology(path):
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (4, 5):
                raise ValueError(f"{path}:{lineno}: expected 4 or 5 fields, got {len(parts)}")
            hw, core, group, size = (int(parts[0]), int(parts[1]), int(parts[2]),
                                     int(parts[3]))
            level = int(parts[4]) if len(parts) == 5 else 3
            rows.append((hw, core, group, size, level))
    if not rows:
        raise ValueError(f"{path}: no topology rows")

    by_core = {}
    by_group = {}
    for hw, core, group, size, level in rows:
        by_core.setdefault(core, []).append(hw)
        by_group.setdefault(group, ([], size, level))
        by_group[group][0].append(hw)
    groups = [
        CacheGroup(level, size if size > 0 else None, tuple(sorted(members)))
        for _, (members, size, level) in sorted(by_group.items())
    ]
    siblings = sorted(tuple(sorted(v)) for v in by_core.values())
    return Topology(groups=groups, smt_siblings=siblings, source=SOURCE_MANUAL,
                    degraded=any(g.size_bytes is None for g in groups))


def detect_topology(manual_path=None):
    """Best-effort topology: sysfs, then manual file, then declared fallback."""
    path = manual_path or os.environ.get(TOPOLOGY_ENV)
    if path:
        try:
            return parse_manual_topology(path)
        except (OSError, ValueError) as exc:
            log.warning("topology: manual file %s unusable (%s); trying sysfs", path, exc)
    try:
        topo = _detect_sysfs()
    except Exception as exc:  # introspection must never be fatal
        log.warning("topology: sysfs introspection failed (%s)", exc)
        topo = None
    if topo is not None:
        return topo
    n = os.cpu_count() or 1
    log.warning("topology: no OS info and no manual file; single declared-unknown group")
    return Topology(
        groups=[CacheGroup(0, None, tuple(range(n)))],
        smt_siblings=[(c,) for c in range(n)],
        source=SOURCE_FALLBACK,
        degraded=True,
    )


# ---------------------------------------------------------------------------
# pinning and placement

def pin_current_thread(hw_thread):
    """Restrict the calling thread's affinity mask to exactly {hw_thread}."""
    try:
        os.sched_setaffinity(0, {int(hw_thread)})
    except (OSError, ValueError) as exc:
        raise PinningError(f"cannot pin to hardware thread {hw_thread}: {exc}") from exc


def current_affinity():
    try:
        return set(os.sched_getaffinity(0))
    except (AttributeError, OSError):
        return None


def plan_placement(topo, cfg, smt_mode="off"):
    """Ordered hw-thread ids for cfg.num_groups teams of cfg.threads_per_group.

    Every team lands inside one outermost cache group.  With smt on,
    consecutive wavefront ranks are placed on SMT siblings first
    (siblings-adjacent order); with smt off only one thread per physical
    core is used.
    """
    smt_on = smt_mode in (True, "on", "yes", "1")
    t = cfg.threads_per_group
    need = cfg.num_groups * t

    def candidates(group):
        members = set(group.hw_threads)
        out = []
        for sibs in topo.smt_siblings:
            inside = [s for s in sibs if s in members]
            if not inside:
                continue
            out.extend(inside if smt_on else inside[:1])
        return out

    capacity = {id(g): candidates(g) for g in topo.groups}
    total = sum(len(v) for v in capacity.values())
    if need > total:
        kind = "hardware threads" if smt_on else "physical cores"
        raise PlacementError(f"need {need} threads but only {total} {kind} available")

    placement = []
    for _ in range(cfg.num_groups):
        home = None
        for g in topo.groups:
            if len(capacity[id(g)]) >= t:
                home = g
                break
        if home is None:
            raise PlacementError(
                f"no cache group has {t} free slots for a whole thread group"
            )
        slots = capacity[id(home)]
        placement.extend(slots[:t])
        capacity[id(home)] = slots[t:]
    return placement
