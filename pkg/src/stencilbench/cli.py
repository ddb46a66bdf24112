"""Command-line harness: bench, verify, stream, topo, and model.

Exit codes: 0 success, 1 verification mismatch, 2 usage or configuration
error.  Records are emitted as CSV (one row per repetition plus a
summary row) or JSON (one object per run with a `reps` array); both
carry the same field set, so a record is always self-describing enough
to reproduce the run.
"""

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction

import numpy as np

from . import grid as gridmod
from .errors import PlacementError, StencilError
from .kernels import JACOBI, KERNEL_COSTS, KERNELS, StencilCoeffs, warmup
from .perf import (
    host_fingerprint,
    measure,
    predict_p0,
    predict_traffic,
    stream_triad,
)
from .sweeps import (
    SERIAL,
    VARIANTS,
    WAVEFRONT,
    SweepPlan,
    WavefrontConfig,
    choose_block_size,
    run,
    run_serial,
    wavefront_working_set_bytes,
)
from .topo import detect_topology, plan_placement

log = logging.getLogger("stencilbench")

CSV_FIELDS = [
    "kernel", "variant", "ni", "nj", "nk", "iter_end", "threads",
    "num_groups", "threads_per_group", "blocks", "barrier", "smt",
    "nt_stores", "seed", "rep", "seconds", "mlups", "mflops",
    "ms_bytes_per_s", "bytes_per_lup", "p0_mlups", "pinned", "flags",
    "timestamp", "host",
]

VERIFY_DEFAULT_LIMIT = 48


def _parse_size(text):
    try:
        ni, nj, nk = (int(p) for p in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"size must look like 400x200x200, got {text!r}"
        ) from exc
    return ni, nj, nk


def _parse_int_list(text):
    return [int(p) for p in text.split(",") if p.strip()]


def _add_run_args(sub, bench=False):
    sub.add_argument("--kernel", choices=KERNELS, default=JACOBI)
    sub.add_argument("--variant", choices=VARIANTS, default=WAVEFRONT)
    sub.add_argument("--size", type=_parse_size, default=(34, 34, 34),
                     metavar="NIxNJxNK")
    sub.add_argument("--iters", type=int, default=4)
    sub.add_argument("--groups", type=int, default=1, help="wavefront thread groups N")
    sub.add_argument("--tpg", type=int, default=1, help="threads per group t")
    sub.add_argument("--blocks", default="auto",
                     help="spatial blocks B along j, or 'auto' (cache fit)")
    sub.add_argument("--threads", type=int, default=1,
                     help="team size for threaded/pipeline variants")
    sub.add_argument("--smt", choices=("on", "off"), default="off")
    sub.add_argument("--barrier", choices=("auto", "central-spin", "tree"),
                     default="auto")
    sub.add_argument("--pin", default="auto",
                     help="'auto' (topology placement), 'none', or id,id,...")
    sub.add_argument("--nt-stores", action="store_true")
    sub.add_argument("--seed", type=int, default=42)
    sub.add_argument("--a", type=float, default=0.0, help="center weight")
    sub.add_argument("--b", type=float, default=1.0 / 6.0, help="neighbor weight")
    sub.add_argument("--topo-file", default=None, help="manual topology file")
    sub.add_argument("--dump-grid", default=None, metavar="PATH",
                     help="binary-dump the result grid for external diffing")
    if bench:
        sub.add_argument("--reps", type=int, default=5)
        sub.add_argument("--warmup", type=int, default=1)
        sub.add_argument("--ms", type=float, default=None,
                         help="sustained bandwidth for the model (bytes/s); "
                              "measured with a quick triad when omitted")
        sub.add_argument("--no-stream", action="store_true",
                         help="skip the automatic bandwidth probe")
        sub.add_argument("--out", default=None, help="result file (default stdout)")
        sub.add_argument("--format", choices=("csv", "json"), default="csv")
        sub.add_argument("--matrix", action="store_true",
                         help="sweep --sizes x --variants x --tpg-list")
        sub.add_argument("--sizes", type=_parse_int_list, default=[60, 100, 150],
                         help="cubic edge lengths for --matrix")
        sub.add_argument("--variants", default="threaded,wavefront",
                         help="variant list for --matrix")
        sub.add_argument("--tpg-list", type=_parse_int_list, default=[1, 2, 4],
                         help="blocking factors for --matrix")


def _build_plan(args, ni, nj, nk, topo, variant=None, tpg=None):
    variant = variant or args.variant
    tpg = tpg if tpg is not None else args.tpg
    coeffs = StencilCoeffs(args.a, args.b)
    config = None
    if variant == WAVEFRONT:
        if args.blocks == "auto":
            blocks = choose_block_size(topo, tpg, ni, nj, num_groups=args.groups)
        else:
            blocks = int(args.blocks)
        config = WavefrontConfig(
            num_groups=args.groups,
            threads_per_group=tpg,
            blocks=blocks,
            barrier=args.barrier,
        )
    iters = args.iters
    if variant == WAVEFRONT and iters % tpg != 0:
        raise StencilError(
            f"--iters {iters} is not a multiple of the blocking factor {tpg}"
        )
    return SweepPlan(
        kernel=args.kernel,
        variant=variant,
        iter_end=iters,
        config=config,
        threads=args.threads,
        coeffs=coeffs,
    )


def _placement_for(args, plan, topo):
    if args.pin == "none":
        return None, []
    if args.pin != "auto":
        return [int(p) for p in args.pin.split(",")], []
    team = (plan.config.total_threads if plan.config is not None
            else max(plan.threads, 1))
    cfg = plan.config or WavefrontConfig(num_groups=1, threads_per_group=team)
    try:
        return plan_placement(topo, cfg, smt_mode=args.smt), []
    except PlacementError as exc:
        log.warning("placement failed (%s); running unpinned", exc)
        return None, ["unplaced"]


def _emit(records, fmt, out):
    if fmt == "json":
        text = json.dumps(records if len(records) != 1 else records[0], indent=2)
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for rec in records:
            for rep_row in rec.get("reps", []):
                row = dict(rec, **rep_row)
                writer.writerow(row)
            writer.writerow(dict(rec, rep="median"))
        text = buf.getvalue()
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _bench_record(args, plan, topo, ms_value):
    placement, flags = _placement_for(args, plan, topo)

    ni, nj, nk = getattr(args, "_dims", None) or args.size
    seed = args.seed

    if plan.config is not None:
        sizes = [g.size_bytes for g in topo.groups if g.size_bytes]
        if sizes:
            block_nj = -(-nj // plan.config.blocks)
            ws = wavefront_working_set_bytes(
                plan.config.threads_per_group, ni, block_nj)
            if ws > 0.5 * min(sizes):
                flags.append("cache-overflow")
                log.warning(
                    "block working set %d bytes exceeds half the %d-byte "
                    "outermost cache; run proceeds flagged", ws, min(sizes))

    def factory():
        return gridmod.create_grid(ni, nj, nk, gridmod.InitPattern.seeded_random(seed))

    meas = measure(plan, factory, repetitions=args.reps, warmup=args.warmup,
                   placement=placement, topo=topo)
    meas.flags.extend(flags)

    t = plan.config.threads_per_group if plan.config else 1
    variant_for_model = "wavefront" if plan.variant == WAVEFRONT else "plain"
    nt = args.nt_stores if plan.kernel == JACOBI else None
    bytes_per_lup = predict_traffic(plan.kernel, variant_for_model, t, nt)
    p0_mlups = (predict_p0(ms_value, float(bytes_per_lup)) / 1e6
                if ms_value else None)

    total = plan.iter_end * ni * nj * nk
    flops_per_cell = sum(KERNEL_COSTS[plan.kernel])
    rec = {
        "kernel": plan.kernel,
        "variant": plan.variant,
        "ni": ni, "nj": nj, "nk": nk,
        "iter_end": plan.iter_end,
        "threads": plan.threads,
        "num_groups": plan.config.num_groups if plan.config else "",
        "threads_per_group": plan.config.threads_per_group if plan.config else "",
        "blocks": plan.config.blocks if plan.config else "",
        "barrier": plan.barrier_kind,
        "smt": args.smt,
        "nt_stores": args.nt_stores,
        "seed": seed,
        "rep": "median",
        "seconds": meas.median_seconds,
        "mlups": meas.mlups,
        "mflops": meas.mlups * flops_per_cell,
        "ms_bytes_per_s": ms_value or "",
        "bytes_per_lup": float(bytes_per_lup),
        "p0_mlups": p0_mlups if p0_mlups is not None else "",
        "pinned": meas.pinned,
        "flags": "+".join(meas.flags),
        "timestamp": meas.host.get("timestamp", ""),
        "host": meas.host.get("hostname", ""),
        "reps": [
            {
                "rep": i,
                "seconds": s,
                "mlups": total / s / 1e6 if s > 0 else "",
                "mflops": total / s / 1e6 * flops_per_cell if s > 0 else "",
            }
            for i, s in enumerate(meas.seconds)
        ],
    }
    return rec


def cmd_bench(args):
    topo = detect_topology(args.topo_file)
    warmup()
    ms_value = args.ms
    if ms_value is None and not args.no_stream:
        sizes = [g.size_bytes for g in topo.groups if g.size_bytes]
        elements = max(4 * min(sizes) // 24 if sizes else 0, 4_000_000)
        try:
            sr = stream_triad(threads=max(topo.physical_cores, 1),
                              elements=elements, nt_stores=args.nt_stores, topo=topo)
            ms_value = sr.bandwidth_bytes_per_s
        except StencilError as exc:
            log.warning("bandwidth probe failed (%s); model fields left empty", exc)

    records = []
    if args.matrix:
        for edge in args.sizes:
            for variant in args.variants.split(","):
                variant = variant.strip()
                for tpg in (args.tpg_list if variant == WAVEFRONT else [1]):
                    args._dims = (edge, edge, edge)
                    try:
                        plan = _build_plan(args, edge, edge, edge, topo,
                                           variant=variant, tpg=tpg)
                    except StencilError as exc:
                        log.warning("skipping %s t=%d n=%d: %s", variant, tpg, edge, exc)
                        continue
                    records.append(_bench_record(args, plan, topo, ms_value))
        args._dims = None
    else:
        ni, nj, nk = args.size
        plan = _build_plan(args, ni, nj, nk, topo)
        records.append(_bench_record(args, plan, topo, ms_value))

    if args.dump_grid and not args.matrix:
        ni, nj, nk = args.size
        g = gridmod.create_grid(ni, nj, nk, gridmod.InitPattern.seeded_random(args.seed))
        plan = _build_plan(args, ni, nj, nk, topo)
        result = run(plan, g)
        gridmod.dump_binary(result, args.dump_grid)
        print(gridmod.summary(result), file=sys.stderr)

    _emit(records, args.format, args.out)
    return 0


def cmd_verify(args):
    topo = detect_topology(args.topo_file)
    warmup()
    ni, nj, nk = args.size
    if max(ni, nj, nk) > VERIFY_DEFAULT_LIMIT:
        log.warning("verify sizes above %d^3 get slow; proceeding anyway",
                    VERIFY_DEFAULT_LIMIT)
    plan = _build_plan(args, ni, nj, nk, topo)
    placement, _ = _placement_for(args, plan, topo)
    pattern = gridmod.InitPattern.seeded_random(args.seed)

    got = run(plan, gridmod.create_grid(ni, nj, nk, pattern), placement=placement)
    oracle_kernel = getattr(args, "oracle_kernel", None) or plan.kernel
    want_plan = SweepPlan(oracle_kernel, SERIAL, plan.iter_end, coeffs=plan.coeffs)
    want = run_serial(want_plan, gridmod.create_grid(ni, nj, nk, pattern))

    if args.dump_grid:
        gridmod.dump_binary(got, args.dump_grid)
        print(gridmod.summary(got), file=sys.stderr)

    if np.array_equal(got.data, want.data):
        print(f"verify OK: {plan.kernel}/{plan.variant} iters={plan.iter_end} "
              f"size={ni}x{nj}x{nk} bitwise-equal to serial")
        return 0
    diff = np.argwhere(got.data != want.data)
    kp, jp, ip = diff[0]
    print(
        f"verify MISMATCH: {len(diff)} differing cells; first at interior "
        f"(k={kp - 1}, j={jp - 1}, i={ip - 1}): "
        f"variant={got.data[kp, jp, ip]!r} serial={want.data[kp, jp, ip]!r}\n"
        f"config: kernel={plan.kernel} variant={plan.variant} iters={plan.iter_end} "
        f"size={ni}x{nj}x{nk} groups={args.groups} tpg={args.tpg} "
        f"blocks={args.blocks} threads={args.threads} seed={args.seed}"
    )
    return 1


def cmd_stream(args):
    topo = detect_topology(args.topo_file)
    res = stream_triad(threads=args.threads, elements=args.elements,
                       nt_stores=args.nt_stores, topo=topo if args.enforce_size else None)
    rec = res.to_dict()
    rec["bandwidth_gb_per_s"] = res.bandwidth_bytes_per_s / 1e9
    rec["host"] = host_fingerprint(topo)
    print(json.dumps(rec, indent=2))
    return 0


def cmd_topo(args):
    print(detect_topology(args.topo_file).to_json())
    return 0


def cmd_model(args):
    rec = {}
    if args.bytes is not None:
        bytes_per_lup = Fraction(args.bytes).limit_denominator(10 ** 9)
    else:
        nt = args.nt_stores if args.kernel == JACOBI else None
        bytes_per_lup = predict_traffic(args.kernel, args.variant, args.tpg, nt)
        rec.update(kernel=args.kernel, variant=args.variant, tpg=args.tpg,
                   nt_stores=bool(args.nt_stores))
    rec["bytes_per_lup"] = float(bytes_per_lup)
    if args.ms is not None:
        p0 = predict_p0(args.ms, float(bytes_per_lup))
        rec.update(ms_bytes_per_s=args.ms, p0_lups=p0, p0_mlups=p0 / 1e6)
    print(json.dumps(rec, indent=2))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="stencilbench",
        description="Iterative 7-point stencil smoothers with wavefront "
                    "temporal blocking: benchmark, verify, and model.",
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run one benchmark (or a --matrix sweep)")
    _add_run_args(b, bench=True)
    b.set_defaults(fn=cmd_bench, _dims=None)

    v = sub.add_parser("verify", help="compare a variant bitwise against serial")
    _add_run_args(v)
    v.add_argument("--oracle-kernel", choices=KERNELS, default=None,
                   help="serial reference kernel (defaults to --kernel)")
    v.set_defaults(fn=cmd_verify)

    s = sub.add_parser("stream", help="STREAM triad bandwidth probe")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--elements", type=int, default=8_000_000)
    s.add_argument("--nt-stores", action="store_true")
    s.add_argument("--enforce-size", action="store_true",
                   help="reject element counts that do not exceed 4x the cache")
    s.add_argument("--topo-file", default=None)
    s.set_defaults(fn=cmd_stream)

    t = sub.add_parser("topo", help="print the detected topology as JSON")
    t.add_argument("--topo-file", default=None)
    t.set_defaults(fn=cmd_topo)

    m = sub.add_parser("model", help="bandwidth-ceiling model arithmetic")
    m.add_argument("--ms", type=float, default=None, help="M_S in bytes/s")
    m.add_argument("--bytes", type=float, default=None, help="bytes per LUP")
    m.add_argument("--kernel", choices=KERNELS + ("gs",), default=JACOBI)
    m.add_argument("--variant", choices=("plain", "wavefront"), default="plain")
    m.add_argument("--tpg", type=int, default=1)
    m.add_argument("--nt-stores", action="store_true")
    m.set_defaults(fn=cmd_model)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except StencilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
